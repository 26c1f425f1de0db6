#include "crt/model.hpp"
#include "crt/quadrature.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace crt;

namespace {

TumorParams cervical_tumor(double ab = 3.0) {
    TumorParams p;
    p.alpha = 0.43;
    p.beta = 0.43 / ab;
    p.theta = 7.15e-5;
    p.tau_d = 4.5;
    p.kickoff = 21;
    p.x0 = 1e9;
    p.xi = 2.0 / 3.0;
    return p;
}

TreatmentSchedule standard_regimen() {
    TreatmentSchedule s{std::vector<double>(25, 1.8), std::vector<double>(25, 0.0)};
    for (int d : {2, 3, 4, 5, 17, 18, 19, 20}) s.chemo[static_cast<size_t>(d - 1)] = 1000;
    return s;
}

Constraints cervical_constraints(double ab = 3.0) {
    const auto s = standard_regimen();
    Constraints c;
    c.tumor_ab_ratio = ab;
    c.bed_std = bed(s.doses, ab);
    c.chemo_budget = 8000;
    c.chemo_max = 1000;
    c.dose_max = 5;
    for (auto [name, g, r] : {std::tuple{"bladder", 0.6048, 2.0}, std::tuple{"small_intestine", 0.3424, 8.0},
                              std::tuple{"rectum", 0.4637, 5.0}}) {
        c.oars.push_back({name, g, r, oar_bed(s.doses, g, r)});
    }
    return c;
}

}  // namespace

TEST(SurvivingFraction, OneAtZeroAndMonotone) {
    const auto p = cervical_tumor();
    EXPECT_EQ(surviving_fraction(0, 0, p), 1.0);
    double prev = 1.0;
    for (double d = 0.5; d <= 5.0; d += 0.5) {
        const double sf = surviving_fraction(d, 0, p);
        EXPECT_LT(sf, prev);
        prev = sf;
    }
    EXPECT_LT(surviving_fraction(0, 1000, p), 1.0);
    EXPECT_LT(surviving_fraction(2, 1000, p), surviving_fraction(2, 500, p));
    EXPECT_THROW((void)surviving_fraction(-1, 0, p), InvalidArgument);
}

TEST(Bed, ReferenceValues) {
    EXPECT_EQ(bed(std::vector<double>{}, 3.0), 0.0);
    EXPECT_EQ(bed(std::vector<double>(5, 0.0), 3.0), 0.0);
    const std::vector<double> std25(25, 1.8);
    // uniform fractions: N d (1 + d / r)
    EXPECT_NEAR(bed(std25, 10.0), 25 * 1.8 * (1 + 1.8 / 10.0), 1e-12);
    const std::vector<double> bladder(25, 0.6048 * 1.8);
    EXPECT_DOUBLE_EQ(oar_bed(std25, 0.6048, 2.0), bed(bladder, 2.0));
    // single 5 Gy fraction to the small intestine: 1.712 Gy physical
    EXPECT_NEAR(oar_bed(std::vector<double>{5.0}, 0.3424, 8.0), 1.712 * (1 + 1.712 / 8.0), 1e-12);
    EXPECT_THROW((void)bed(std::vector<double>{1.0}, 0.0), InvalidArgument);
    EXPECT_THROW((void)oar_bed(std::vector<double>{1.0}, 1.5, 2.0), InvalidArgument);
}

TEST(Bed, StrictlyConvexInEachEntry) {
    std::vector<double> d{1.0, 2.0, 3.0};
    auto at = [&](double x) {
        auto v = d;
        v[1] = x;
        return bed(v, 3.0);
    };
    EXPECT_GT(at(1.0) + at(3.0), 2 * at(2.0));
}

TEST(Feasibility, StandardRegimenMeetsItsOwnCaps) {
    const auto s = standard_regimen();
    auto c = cervical_constraints();
    c.varrho = 1.0;
    const auto r = feasibility_report(s, c);
    EXPECT_TRUE(r.feasible());
    for (const char* name : {"oar:bladder", "oar:small_intestine", "oar:rectum", "tumor_bed_floor", "chemo_budget"}) {
        const auto* chk = r.find(name);
        ASSERT_NE(chk, nullptr) << name;
        EXPECT_NEAR(chk->slack, 0.0, 1e-12) << name;
    }
}

TEST(Feasibility, Failures) {
    auto c = cervical_constraints();
    c.varrho = 0.5;
    const auto zero = TreatmentSchedule::zeros(25);
    const auto r = feasibility_report(zero, c);
    EXPECT_FALSE(r.feasible());
    EXPECT_FALSE(r.find("tumor_bed_floor")->pass);

    auto s = TreatmentSchedule::zeros(25);
    s.doses[3] = c.dose_max + 1e-6;
    c.varrho = 0.0;
    EXPECT_FALSE(feasibility_report(s, c).find("daily_dose_max")->pass);
    s.doses[3] = c.dose_max;
    EXPECT_TRUE(feasibility_report(s, c).find("daily_dose_max")->pass);
}

TEST(ObjectiveF, ZeroScheduleMatchesHandExpansion) {
    auto p = cervical_tumor();
    p.kickoff = 10;
    const double mu = 0.11;
    const std::vector<MetastaticSite> sites{{"a", 1.0, mu, 2e-5}};
    const Horizon h{25, 1095, std::nullopt};
    auto c = cervical_constraints();
    c.chemo_budget = 0;
    const auto zero = TreatmentSchedule::zeros(25);

    // X0^xi e^{mu T} sum_{t=0}^{N+1} e^{xi r (t - Tk)^+ - mu t}
    double sum = 0.0;
    for (int t = 0; t <= 26; ++t) sum += std::exp(p.xi * p.repopulation(t) - mu * t);
    const double expected = std::pow(p.x0, p.xi) * std::exp(mu * h.T) * sum;
    EXPECT_LT(test::rel_diff(objective_f(zero, sites, p, h, c), expected), 1e-13);
}

TEST(ObjectiveF, XiZeroIsDoseIndependent) {
    std::mt19937_64 rng(11);
    auto p = cervical_tumor();
    p.xi = 0.0;
    const std::vector<MetastaticSite> sites{{"a", 0.3, 0.12, 0.0}, {"b", 0.7, 0.2, 0.0}};
    const Horizon h{6, 40, std::nullopt};
    Constraints c = cervical_constraints();
    c.chemo_budget = 2000;
    double expected = 0.0;
    for (const auto& s : sites) {
        for (int t = 0; t <= 7; ++t) expected += s.p * std::exp(s.mu * (h.T - t));
    }
    for (int k = 0; k < 5; ++k) {
        TreatmentSchedule s = TreatmentSchedule::zeros(6);
        for (auto& d : s.doses) d = test::uniform(rng, 0, 5);
        s.chemo[static_cast<size_t>(k)] = 1000;
        s.chemo[static_cast<size_t>(k + 1)] = 1000;
        EXPECT_LT(test::rel_diff(objective_f(s, sites, p, h, c), expected), 1e-13);
    }
}

TEST(ObjectiveF, EarlyTermsIgnoreTreatment) {
    // terms t = 0, 1 see no delivered session: a schedule that only treats on
    // the last day changes only the terms t = N + 1
    auto p = cervical_tumor();
    p.kickoff = 0;
    const std::vector<MetastaticSite> sites{{"a", 1.0, 0.1, 0.0}};
    const Horizon h{1, 10, std::nullopt};
    Constraints c = cervical_constraints();
    c.chemo_budget = 0;
    TreatmentSchedule s{{2.0}, {0.0}};
    const double x = std::pow(p.x0, p.xi);
    double expected = 0.0;
    for (int t = 0; t <= 1; ++t) expected += x * std::exp(p.xi * p.repopulation(t) + 0.1 * (10 - t));
    expected += x * std::exp(-p.xi * (p.alpha * 2 + p.beta * 4) + p.xi * p.repopulation(2) + 0.1 * (10 - 2));
    EXPECT_LT(test::rel_diff(objective_f(s, sites, p, h, c), expected), 1e-13);
}

TEST(ObjectiveG, GammaZeroClosedForm) {
    const auto p = cervical_tumor();
    const double mu = 0.2;
    const std::vector<MetastaticSite> sites{{"a", 1.0, mu, 0.0}};
    const Horizon h{25, 1095, std::nullopt};
    // Gamma carries the kick-off repopulation (ln2/tau_d) T_k even without treatment
    const double kappa = mu - p.xi * p.repop_rate();
    const double pre = std::pow(p.x0, p.xi) * std::exp(-p.xi * p.repop_rate() * p.kickoff + mu * h.T);
    const double expected = pre * (std::exp(-kappa * 26) - std::exp(-kappa * h.T)) / kappa;
    EXPECT_LT(test::rel_diff(objective_g({}, sites, p, h), expected), 1e-12);
}

TEST(ObjectiveG, SingularLimitAndContinuity) {
    auto p = cervical_tumor();
    p.xi = 1.0;
    const Horizon h{25, 1095, std::nullopt};
    const double r = p.repop_rate();
    const std::vector<MetastaticSite> at{{"a", 1.0, r, 0.0}};
    const double pre = std::pow(p.x0, p.xi) * std::exp(-p.xi * r * p.kickoff + r * h.T);
    // bracket -> (T - N - 1) e^{-kappa (N+1)} with kappa = 0
    EXPECT_LT(test::rel_diff(objective_g({}, at, p, h), pre * (h.T - 26)), 1e-12);

    const std::vector<MetastaticSite> near{{"a", 1.0, r + 1e-10, 0.0}};
    const double pre_near = std::pow(p.x0, p.xi) * std::exp(-p.xi * r * p.kickoff + (r + 1e-10) * h.T);
    const double limit = pre_near * (h.T - 26) * std::exp(-1e-10 * 26);
    EXPECT_LT(test::rel_diff(objective_g({}, near, p, h), limit), 1e-6);
}

TEST(Objective, NonIncreasingInEveryDose) {
    std::mt19937_64 rng(5);
    const auto p = cervical_tumor(10);
    const std::vector<MetastaticSite> sites{{"a", 0.6, 0.15, 7e-5}, {"b", 0.4, 0.15, 3e-5}};
    const Horizon h{8, 200, Brachytherapy{2, 2, 10, 1.16, 12}};
    Constraints c = cervical_constraints(10);
    c.chemo_budget = 2000;
    for (int trial = 0; trial < 20; ++trial) {
        TreatmentSchedule s = TreatmentSchedule::zeros(8);
        for (auto& d : s.doses) d = test::uniform(rng, 0, 4);
        s.chemo[static_cast<size_t>(trial % 8)] = 1000;
        s.chemo[static_cast<size_t>((trial + 3) % 8)] = 1000;
        const double base = evaluate_objective(s, sites, p, h, c);
        const auto k = static_cast<size_t>(trial % 8);
        s.doses[k] += 0.5;
        EXPECT_LE(evaluate_objective(s, sites, p, h, c), base);
    }
}

TEST(TumorPopulation, NonIncreasingInDoses) {
    const auto p = cervical_tumor();
    const Horizon h{25, 1095, Brachytherapy{5, 2, 20, 1.16, 12}};
    auto s = standard_regimen();
    const double before = tumor_population(40, s, p, h);
    s.doses[10] += 1.0;
    EXPECT_LT(tumor_population(40, s, p, h), before);
    EXPECT_EQ(tumor_population(0, s, p, h), p.x0);
    EXPECT_THROW((void)tumor_population(2000, s, p, h), InvalidArgument);
}

TEST(Quadrature, UntreatedTumorClosedForm) {
    auto p = cervical_tumor();
    const double mu = 0.1;
    const std::vector<MetastaticSite> sites{{"a", 1.0, mu, 0.0}};
    const Horizon h{25, 300, std::nullopt};
    const auto zero = TreatmentSchedule::zeros(25);
    // int_0^Tk X0^xi e^{mu (T - t)} dt + int_Tk^T X0^xi e^{xi r (t - Tk) + mu (T - t)} dt
    const double x = std::pow(p.x0, p.xi);
    const double r = p.repop_rate();
    const double k = mu - p.xi * r;
    const double before = x * std::exp(mu * h.T) * (1 - std::exp(-mu * p.kickoff)) / mu;
    const double after = x * std::exp(mu * h.T - p.xi * r * p.kickoff) *
                         (std::exp(-k * p.kickoff) - std::exp(-k * h.T)) / k;
    const auto q = risk_quadrature(zero, sites, p, h);
    EXPECT_LT(test::rel_diff(q.total(), before + after), 1e-8);
}

TEST(Quadrature, PostTreatmentMatchesG) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        auto p = cervical_tumor(test::uniform(rng, 3, 20));
        p.xi = test::uniform(rng, 0.1, 1.0);
        p.psi = test::uniform(rng, 0, 3e-3);
        p.kickoff = test::uniform(rng, 0, 9);
        const Horizon h{10, test::uniform(rng, 30, 400),
                        trial % 2 ? std::optional<Brachytherapy>(Brachytherapy{3, 2, 20, 1.16, 12}) : std::nullopt};
        const std::vector<MetastaticSite> sites{{"a", 0.5, test::uniform(rng, 0.05, 0.3), 5e-5},
                                                {"b", 0.5, test::uniform(rng, 0.05, 0.3), 1e-5}};
        TreatmentSchedule s = TreatmentSchedule::zeros(10);
        for (auto& d : s.doses) d = test::uniform(rng, 0, 5);
        for (auto& c : s.chemo) c = test::uniform(rng, 0, 1) < 0.3 ? 1000 : 0;
        const auto q = risk_quadrature(s, sites, p, h);
        const double g = objective_g(gamma_args(s, p), sites, p, h);
        EXPECT_LT(test::rel_diff(q.post, g), 1e-6) << trial;
    }
}

TEST(Quadrature, DuringTreatmentTracksTheSum) {
    // the summation approximates the integral: same order of magnitude only
    const auto p = cervical_tumor();
    const std::vector<MetastaticSite> sites{{"nodes", 0.333, kLn2 / 4.5, 7.15e-5}, {"lung", 0.667, kLn2 / 4.5, 7.15e-5}};
    const Horizon h{25, 1095, Brachytherapy{5, 2, 20, 1.16, 12}};
    const auto s = standard_regimen();
    const auto c = cervical_constraints();
    const auto q = risk_quadrature(s, sites, p, h);
    const double f = objective_f(s, sites, p, h, c);
    EXPECT_GT(q.during / f, 0.2);
    EXPECT_LT(q.during / f, 5.0);
}
