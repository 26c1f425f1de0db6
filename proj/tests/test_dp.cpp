#include "crt/dp/dynamic_solver.hpp"
#include "crt/dp/static_solver.hpp"
#include "crt/oracle.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

using namespace crt;
using crt::test::Instance;

namespace {

dp::OptimalPlan solve(const Instance& in, dp::StaticMode mode, const dp::SolveOptions& opt = {}) {
    std::vector<double> chemo;
    if (mode == dp::StaticMode::FixedChemo2D) {
        chemo.assign(static_cast<size_t>(in.horizon.sessions), 0.0);
        if (in.constraints.chemo_budget > 0) chemo.back() = in.constraints.chemo_budget;
    }
    return dp::solve_static(in.params, in.sites, in.horizon, in.constraints, in.grid, mode, chemo, opt);
}

dp::OptimalPlan oracle(const Instance& in, dp::StaticMode mode) {
    std::optional<std::vector<double>> chemo;
    if (mode == dp::StaticMode::FixedChemo2D) {
        chemo.emplace(static_cast<size_t>(in.horizon.sessions), 0.0);
        if (in.constraints.chemo_budget > 0) chemo->back() = in.constraints.chemo_budget;
    }
    return brute_force(in.params, in.sites, in.horizon, in.constraints, in.grid, std::nullopt, chemo);
}

/// Runs `a` and `b`; both must throw NoFeasibleSchedule or both return plans with equal objectives.
template <typename A, typename B>
void expect_same_optimum(A&& a, B&& b, double tol, const std::string& what) {
    std::optional<dp::OptimalPlan> pa, pb;
    try {
        pa = a();
    } catch (const NoFeasibleSchedule&) {
    }
    try {
        pb = b();
    } catch (const NoFeasibleSchedule&) {
    }
    ASSERT_EQ(pa.has_value(), pb.has_value()) << what;
    if (pa) {
        EXPECT_LE(test::rel_diff(pa->objective, pb->objective), tol) << what;
    }
}

}  // namespace

TEST(StaticSolver, MatchesOracleInEveryMode) {
    std::mt19937_64 rng(101);
    for (int i = 0; i < 24; ++i) {
        const int N = 2 + i % 2;
        auto in = test::random_small_instance(rng, N, 2, false, i % 3 == 0);
        const std::string tag = "instance " + std::to_string(i);
        expect_same_optimum([&] { return solve(in, dp::StaticMode::Full4D); },
                            [&] { return oracle(in, dp::StaticMode::Full4D); }, 1e-12, tag + " 4d");
        expect_same_optimum([&] { return solve(in, dp::StaticMode::FixedChemo2D); },
                            [&] { return oracle(in, dp::StaticMode::FixedChemo2D); }, 1e-12, tag + " 2d");
        in.params.psi = 0.0;
        expect_same_optimum([&] { return solve(in, dp::StaticMode::NoSensitizer3D); },
                            [&] { return oracle(in, dp::StaticMode::Full4D); }, 1e-12, tag + " 3d");
    }
}

TEST(DynamicSolver, MatchesOracle) {
    std::mt19937_64 rng(202);
    for (int i = 0; i < 16; ++i) {
        const auto in = test::random_small_instance(rng, 2 + i % 2, 2, true, false);
        expect_same_optimum(
            [&] { return dp::solve_dynamic(in.params, in.sites, in.horizon, in.constraints, in.grid, *in.oxygen); },
            [&] { return brute_force(in.params, in.sites, in.horizon, in.constraints, in.grid, in.oxygen); }, 1e-12,
            "instance " + std::to_string(i));
    }
}

TEST(StaticSolver, PlanIsConsistentWithDirectEvaluation) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10; ++i) {
        const auto in = test::random_small_instance(rng, 3, 3, false, false);
        dp::OptimalPlan plan;
        try {
            plan = solve(in, dp::StaticMode::Full4D);
        } catch (const NoFeasibleSchedule&) {
            continue;
        }
        EXPECT_TRUE(feasibility_report(plan.schedule, in.constraints).feasible());
        const double direct = evaluate_objective(plan.schedule, in.sites, in.params, in.horizon, in.constraints);
        EXPECT_LT(test::rel_diff(plan.objective, direct), 1e-12);
        double total = 0;
        for (double c : plan.schedule.chemo) total += c;
        EXPECT_EQ(total, in.constraints.chemo_budget);
    }
}

TEST(StaticSolver, ThreadCountDoesNotChangeTheResult) {
    std::mt19937_64 rng(9);
    auto in = test::random_small_instance(rng, 6, 2, false, false);
    in.grid = {0.5, 500};
    in.constraints.dose_max = 2.5;
    in.constraints.chemo_budget = 2000;
    in.constraints.varrho = 0;
    for (auto& o : in.constraints.oars) o.bed_cap = 1e3;
    dp::SolveOptions one, four;
    four.threads = 4;
    const auto a = solve(in, dp::StaticMode::Full4D, one);
    const auto b = solve(in, dp::StaticMode::Full4D, four);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.schedule, b.schedule);
    EXPECT_EQ(a.stats.rows_per_stage, b.stats.rows_per_stage);
}

TEST(Pruning, TogglesLeaveTheOptimumUnchanged) {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 8; ++i) {
        auto in = test::random_small_instance(rng, 4, 2, true, false);
        in.grid = {1.25, 500};
        dp::SolveOptions on, off;
        off.prune_dominated = off.prune_budget = off.prune_bound = false;
        expect_same_optimum([&] { return solve(in, dp::StaticMode::Full4D, on); },
                            [&] { return solve(in, dp::StaticMode::Full4D, off); }, 0.0, "static");
        expect_same_optimum(
            [&] { return dp::solve_dynamic(in.params, in.sites, in.horizon, in.constraints, in.grid, *in.oxygen, on); },
            [&] { return dp::solve_dynamic(in.params, in.sites, in.horizon, in.constraints, in.grid, *in.oxygen, off); },
            0.0, "dynamic");
    }
}

TEST(Dominance, IndexedFilterKeepsTheSameRows) {
    std::mt19937_64 rng(55);
    const double a_max = 0.4, b_max = 0.05, ab = 4.0;
    auto bed_of = [&](std::int64_t u, std::int64_t v) { return static_cast<double>(u) + static_cast<double>(v) / ab; };
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 400;
        std::vector<dp::detail::GridRowView> rows(n);
        std::uniform_int_distribution<int> small(0, 6);
        for (auto& r : rows) {
            r.group = small(rng) % 3;
            r.u = small(rng);
            r.v = r.u * r.u - small(rng) % (r.u + 1);
            if (r.v < 0) r.v = 0;
            r.w = small(rng);
            // coarse values create ties
            r.obj = std::floor(test::uniform(rng, 0, 8));
            r.uhat = a_max * static_cast<double>(r.u) * std::floor(test::uniform(rng, 0, 4)) / 3.0;
            r.vhat = b_max * static_cast<double>(r.v) * std::floor(test::uniform(rng, 0, 4)) / 3.0;
            r.bed = bed_of(r.u, r.v);
        }
        const double floor = trial % 3 == 0 ? -1e300 : test::uniform(rng, 0, 20);
        auto quad_view = [&](std::size_t i) {
            const auto& r = rows[i];
            return dp::detail::DominanceView{r.group,
                                             r.obj,
                                             static_cast<double>(r.u),
                                             static_cast<double>(r.v),
                                             static_cast<double>(r.w),
                                             r.uhat,
                                             r.vhat,
                                             r.bed};
        };
        std::size_t dq = 0, di = 0;
        auto quad = dp::detail::dominance_filter(n, quad_view, floor, &dq);
        auto idx = dp::detail::indexed_dominance_filter(
            n, [&](std::size_t i) { return rows[i]; }, bed_of, floor, a_max, b_max, &di);
        std::sort(quad.begin(), quad.end());
        std::sort(idx.begin(), idx.end());
        EXPECT_EQ(quad, idx) << "trial " << trial;
        EXPECT_EQ(dq, di);
        EXPECT_GT(dq, 0u);
    }
}

TEST(Dominance, BedFloorProtectsRowsThatReachIt) {
    auto row = [](double obj, double U, double V, double S) {
        dp::DpRow r;
        r.day = 2;
        r.state = {U, V, S, 0.0, 0.3 * U, 0.03 * V};
        r.obj = obj;
        return r;
    };
    // the second row is worse in obj but carries more dose
    const std::vector<dp::DpRow> rows{row(1.0, 2.0, 2.0, 500), row(2.0, 4.0, 8.0, 500), row(0.5, 1.0, 1.0, 1000)};
    // more dose also means larger Uhat, Vhat, so none of these dominates another
    EXPECT_EQ(dp::prune_dominated(rows).size(), 3u);

    // identical rows except obj: the worse one goes
    const std::vector<dp::DpRow> twins{row(1.0, 2.0, 2.0, 500), row(1.5, 2.0, 2.0, 500)};
    const auto kept = dp::prune_dominated(twins);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].obj, 1.0);

    // a lower-dose row dominates only if its BED still covers the floor
    std::vector<dp::DpRow> pair{row(1.0, 2.0, 2.0, 500), row(1.5, 2.0, 3.0, 500)};
    for (auto& r : pair) r.state.Vhat = 0.03 * 3.0;
    EXPECT_EQ(dp::prune_dominated(pair).size(), 1u);
    EXPECT_EQ(dp::prune_dominated(pair, dp::BedFloor{1.0, 100.0}).size(), 2u);
    EXPECT_EQ(dp::prune_dominated(pair, dp::BedFloor{1.0, 3.0}).size(), 1u);

    std::vector<dp::DpRow> mixed{row(1, 1, 1, 0)};
    mixed.push_back(row(1, 1, 1, 0));
    mixed.back().day = 3;
    EXPECT_THROW((void)dp::prune_dominated(mixed), InvalidArgument);
}

TEST(Backtrack, Errors) {
    dp::BackLog log{{0, 1, 2, 0}, {1, 2, 1, 1}};
    const auto idx = dp::backtrack_indices(log, 2);
    EXPECT_EQ(idx, (std::vector<std::pair<int, int>>{{2, 0}, {1, 1}}));
    EXPECT_EQ(dp::backtrack(log, 2, {0.5, 500}), (TreatmentSchedule{{1.0, 0.5}, {0.0, 500.0}}));
    EXPECT_THROW((void)dp::backtrack_indices(log, 0), InternalError);
    EXPECT_THROW((void)dp::backtrack_indices(log, 3), InternalError);
    dp::BackLog wrong_day{{0, 1, 0, 0}, {1, 3, 0, 0}};
    EXPECT_THROW((void)dp::backtrack_indices(wrong_day, 2), InternalError);
    dp::BackLog forward{{2, 1, 0, 0}, {2, 2, 0, 0}};
    EXPECT_THROW((void)dp::backtrack_indices(forward, 2), InternalError);
}

TEST(Grid, ValuesAndMisalignment) {
    EXPECT_EQ(dp::grid_value(33, 0.1), 3.3);
    EXPECT_EQ(dp::grid_value(3, 0.25), 0.75);
    EXPECT_EQ(dp::grid_value(2, 500), 1000.0);
    Constraints c;
    c.dose_max = 5;
    c.chemo_max = 1000;
    c.chemo_budget = 8000;
    const auto u = dp::grid_units({0.1, 500}, c);
    EXPECT_EQ(u.dose_levels, 50);
    EXPECT_EQ(u.chemo_levels, 2);
    EXPECT_EQ(u.budget, 16);
    EXPECT_THROW((void)dp::grid_units({0.3, 500}, c), GridMisaligned);
    EXPECT_THROW((void)dp::grid_units({0.1, 300}, c), GridMisaligned);
    c.chemo_budget = 7750;
    EXPECT_THROW((void)dp::grid_units({0.1, 500}, c), GridMisaligned);
    EXPECT_THROW((void)dp::grid_units({0.0, 500}, c), InvalidArgument);
}

TEST(Solvers, InfeasibleAndOversizedInstances) {
    std::mt19937_64 rng(77);
    auto in = test::random_small_instance(rng, 3, 1, true, false);
    in.constraints.varrho = 1.0;
    in.constraints.bed_std = 1e4;
    EXPECT_THROW((void)solve(in, dp::StaticMode::Full4D), NoFeasibleSchedule);
    EXPECT_THROW((void)dp::solve_dynamic(in.params, in.sites, in.horizon, in.constraints, in.grid, *in.oxygen),
                 NoFeasibleSchedule);

    in.constraints.varrho = 0;
    for (auto& o : in.constraints.oars) o.bed_cap = 1e3;
    dp::SolveOptions tiny;
    tiny.max_stage_rows = 2;
    EXPECT_THROW((void)solve(in, dp::StaticMode::Full4D, tiny), InstanceTooLarge);
    EXPECT_THROW((void)dp::solve_dynamic(in.params, in.sites, in.horizon, in.constraints, in.grid, *in.oxygen, tiny),
                 InstanceTooLarge);

    in.grid.d_step = 0.3;
    EXPECT_THROW((void)solve(in, dp::StaticMode::Full4D), GridMisaligned);
    in.grid.d_step = 2.5;
    in.params.psi = 1e-4;
    EXPECT_THROW((void)solve(in, dp::StaticMode::NoSensitizer3D), InvalidArgument);
}

TEST(Solvers, RetainedTableMatchesStats) {
    std::mt19937_64 rng(88);
    auto in = test::random_small_instance(rng, 3, 2, true, false);
    in.constraints.varrho = 0;
    for (auto& o : in.constraints.oars) o.bed_cap = 1e3;
    dp::SolveOptions opt;
    opt.retain_table = true;
    const auto check = [&](const dp::OptimalPlan& plan) {
        ASSERT_TRUE(plan.table);
        ASSERT_EQ(plan.table->stages.size(), 3u);
        for (size_t t = 0; t < 3; ++t) {
            for (const auto& r : plan.table->stages[t]) EXPECT_EQ(r.day, static_cast<int>(t + 1));
        }
        double best = 1e308;
        for (const auto& r : plan.table->stages.back()) best = std::min(best, r.obj);
        EXPECT_EQ(best, plan.objective);
    };
    const auto st = solve(in, dp::StaticMode::Full4D, opt);
    check(st);
    for (size_t t = 0; t < 3; ++t) EXPECT_EQ(st.table->stages[t].size(), st.stats.rows_per_stage[t]);
    check(dp::solve_dynamic(in.params, in.sites, in.horizon, in.constraints, in.grid, *in.oxygen, opt));
}

TEST(Solvers, PsiZeroUniformZetaReproducesClosedFormChemo) {
    std::mt19937_64 rng(404);
    int checked = 0;
    while (checked < 8) {
        auto in = test::random_small_instance(rng, 4, 2, false, true);
        in.sites = test::random_sites(rng, 2, in.params.theta, true);
        in.constraints.chemo_budget = 1500;
        in.grid = {1.25, 500};
        const auto regime = classify_chemo_regime(in.params, in.sites);
        if (std::abs(in.params.theta * in.params.xi - in.sites[0].omega) < 1e-7) continue;
        dp::OptimalPlan plan;
        try {
            plan = solve(in, dp::StaticMode::Full4D);
        } catch (const NoFeasibleSchedule&) {
            continue;
        }
        EXPECT_EQ(plan.schedule.chemo, chemo_closed_form(regime, in.constraints, 4));
        EXPECT_TRUE(verify_monotone_structure(plan.schedule, ChemoRegime::Indeterminate, in.grid.d_step).pass);
        ++checked;
    }
}
