#include "crt/oxygenation.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace crt;

namespace {

OxygenModel lung_model() { return {0.45, 0.0375, 2.5, 3.0, 3.28, 26.0, 10.48, 1e8}; }

TumorParams lung_tumor() {
    TumorParams p;
    p.alpha = 0.45;
    p.beta = 0.0375;
    p.theta = 7.15e-5;
    p.psi = 3.21e-3;
    p.tau_d = 4.5;
    p.kickoff = 21;
    p.x0 = 1e9;
    p.xi = 2.0 / 3.0;
    return p;
}

}  // namespace

TEST(Oxygen, SensitivityLimits) {
    const auto m = lung_model();
    const auto anoxic = sensitivities_at_pressure(0.0, m);
    EXPECT_DOUBLE_EQ(anoxic.alpha, 0.45 / 2.5);
    EXPECT_DOUBLE_EQ(anoxic.beta, 0.0375 / 9.0);
    const auto rich = sensitivities_at_pressure(1e12, m);
    EXPECT_NEAR(rich.alpha, 0.45, 1e-11);
    EXPECT_NEAR(rich.beta, 0.0375, 1e-12);
    // at y = K the modification factor is (OER + 1) / 2
    const auto half = sensitivities_at_pressure(m.K, m);
    EXPECT_NEAR(half.alpha, 0.45 / 2.5 * 1.75, 1e-15);
    EXPECT_NEAR(half.beta, 0.0375 / 9.0 * 4.0, 1e-15);
    EXPECT_THROW((void)sensitivities_at_pressure(-1.0, m), InvalidArgument);
}

TEST(Oxygen, PressureFromRadius) {
    const auto m = lung_model();
    const auto p = lung_tumor();
    const double r0 = std::cbrt(3e9 / (4 * std::numbers::pi * 1e8));
    EXPECT_NEAR(m.radius(1e9), r0, 1e-12);
    EXPECT_NEAR(oxygen_pressure(0.0, 1, p, m), 26.0 - 10.48 * r0, 1e-12);
    // a log-kill of 3 ln 2 halves the radius
    EXPECT_NEAR(oxygen_pressure(3 * kLn2, 1, p, m), 26.0 - 10.48 * r0 / 2, 1e-12);
    EXPECT_EQ(oxygen_pressure(1e3, 1, p, m), 26.0);
    auto big = m;
    big.iota = 1e3;
    EXPECT_EQ(oxygen_pressure(0.0, 1, p, big), 0.0);
}

TEST(Oxygen, PathIsMonotoneAndStartsFromInitialPressure) {
    const auto m = lung_model();
    const auto p = lung_tumor();
    TreatmentSchedule s{std::vector<double>(10, 2.0), std::vector<double>(10, 0.0)};
    const auto path = sensitivity_path(s, p, m);
    ASSERT_EQ(path.size(), 10u);
    EXPECT_EQ(path[0], sensitivities_at_pressure(oxygen_pressure(0.0, 1, p, m), m));
    for (size_t i = 1; i < path.size(); ++i) {
        EXPECT_GE(path[i].alpha, path[i - 1].alpha);
        EXPECT_GE(path[i].beta, path[i - 1].beta);
    }
    // session 2 sees the pressure after session 1's kill
    const double kill1 = path[0].alpha * 2 + path[0].beta * 4;
    EXPECT_EQ(path[1], sensitivities_at_pressure(oxygen_pressure(kill1, 2, p, m), m));
}

TEST(Oxygen, UnitOerGivesConstantSensitivities) {
    auto m = lung_model();
    m.oer_alpha = m.oer_beta = 1.0;
    const auto p = lung_tumor();
    TreatmentSchedule s{{5, 0, 3, 2.5, 1}, {1000, 0, 500, 0, 0}};
    for (const auto& x : sensitivity_path(s, p, m)) {
        EXPECT_EQ(x.alpha, m.alpha_max);
        EXPECT_EQ(x.beta, m.beta_max);
    }
}

TEST(Oxygen, PathObjectiveWithUnitOerEqualsStatic) {
    auto m = lung_model();
    m.oer_alpha = m.oer_beta = 1.0;
    const auto p = lung_tumor();
    const std::vector<MetastaticSite> sites{{"a", 1.0, 0.15, 5e-5}};
    const Horizon h{5, 200, Brachytherapy{5, 2, 20, 1.16, 12}};
    Constraints c;
    c.chemo_budget = 1500;
    TreatmentSchedule s{{5, 0, 3, 2.5, 1}, {1000, 0, 500, 0, 0}};
    const auto path = sensitivity_path(s, p, m);
    EXPECT_EQ(evaluate_objective(s, sites, p, h, c, path), evaluate_objective(s, sites, p, h, c));
}

TEST(Oxygen, Validation) {
    auto m = lung_model();
    EXPECT_NO_THROW(m.validate(1e9));
    m.oer_alpha = 0.5;
    EXPECT_THROW(m.validate(1e9), InvalidArgument);
    m = lung_model();
    m.iota = 1e3;  // negative initial pressure
    EXPECT_THROW(m.validate(1e9), InvalidArgument);
    m = lung_model();
    m.K = 0;
    EXPECT_THROW(m.validate(1e9), InvalidArgument);
}
