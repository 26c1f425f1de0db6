#pragma once

#include "crt/dp/dynamic_solver.hpp"
#include "crt/dp/static_solver.hpp"
#include "crt/model.hpp"
#include "crt/oxygenation.hpp"
#include "crt/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace crt {

/// A schedule scored under a scenario.
struct Evaluation {
    TreatmentSchedule schedule;
    double objective = 0.0;
    double tumor_bed = 0.0;
    std::vector<std::pair<std::string, double>> oar_beds;
    FeasibilityReport feasibility;
    std::vector<Sensitivity> sensitivities;  // empty unless the scenario runs in 6d
};

/// Objective and BEDs of `schedule`. The re-oxygenation sensitivity path is
/// used exactly when the scenario's solver mode is 6d, so a solve and a later
/// evaluate of its schedule see the same model.
[[nodiscard]] inline Evaluation evaluate_schedule(const Scenario& sc, const TreatmentSchedule& schedule) {
    schedule.validate();
    if (schedule.sessions() != sc.horizon.sessions) {
        throw InvalidArgument("schedule has " + std::to_string(schedule.sessions()) + " sessions, scenario has " +
                              std::to_string(sc.horizon.sessions));
    }
    Evaluation e;
    e.schedule = schedule;
    if (sc.mode == SolverMode::Dynamic6D && sc.oxygen) e.sensitivities = sensitivity_path(schedule, sc.tumor, *sc.oxygen);
    e.objective = evaluate_objective(schedule, sc.sites, sc.tumor, sc.horizon, sc.constraints, e.sensitivities);
    e.tumor_bed = bed(schedule.doses, sc.constraints.tumor_ab_ratio);
    for (const auto& o : sc.constraints.oars) e.oar_beds.emplace_back(o.name, oar_bed(schedule.doses, o.gamma, o.ab_ratio));
    e.feasibility = feasibility_report(schedule, sc.constraints);
    return e;
}

/// Runs the scenario's solver. Mode evaluate returns the standard regimen
/// scored without optimization.
[[nodiscard]] inline dp::OptimalPlan solve_scenario(const Scenario& sc) {
    switch (sc.mode) {
        case SolverMode::Static2D:
            return dp::solve_static(sc.tumor, sc.sites, sc.horizon, sc.constraints, sc.grid, dp::StaticMode::FixedChemo2D,
                                    sc.resolved_fixed_chemo(), sc.options);
        case SolverMode::Static3D:
            return dp::solve_static(sc.tumor, sc.sites, sc.horizon, sc.constraints, sc.grid,
                                    dp::StaticMode::NoSensitizer3D, {}, sc.options);
        case SolverMode::Static4D:
            return dp::solve_static(sc.tumor, sc.sites, sc.horizon, sc.constraints, sc.grid, dp::StaticMode::Full4D, {},
                                    sc.options);
        case SolverMode::Dynamic6D:
            if (!sc.oxygen) throw InvalidArgument("mode 6d needs an oxygen model");
            return dp::solve_dynamic(sc.tumor, sc.sites, sc.horizon, sc.constraints, sc.grid, *sc.oxygen, sc.options);
        case SolverMode::Evaluate: {
            if (!sc.standard_regimen) throw InvalidArgument("mode evaluate needs a standard_regimen");
            const auto e = evaluate_schedule(sc, *sc.standard_regimen);
            dp::OptimalPlan plan;
            plan.schedule = e.schedule;
            plan.objective = e.objective;
            plan.tumor_bed = e.tumor_bed;
            plan.oar_beds = e.oar_beds;
            plan.sensitivities = e.sensitivities;
            return plan;
        }
    }
    throw InternalError("solve_scenario: unknown mode");
}

/// One row of a varrho sweep; reductions are relative to the standard regimen.
struct SweepRow {
    double varrho = 0.0;
    double r_opt = 0.0;
    double r_std = 0.0;
    double met_reduction = 0.0;
    double bed_opt = 0.0;
    double bed_std = 0.0;
    double bed_reduction = 0.0;
    TreatmentSchedule schedule;
};

namespace detail {

inline void require_standard(const Scenario& sc, const char* what) {
    if (!sc.standard_regimen) throw InvalidArgument(std::string(what) + " needs a standard_regimen");
    if (sc.mode == SolverMode::Evaluate) throw InvalidArgument(std::string(what) + " needs an optimizing solver mode");
}

}  // namespace detail

/// Optimizes once per varrho (ascending) and reports the trade-off against
/// the standard regimen. Raises InternalError if met_reduction ever
/// increases with varrho, which a shrinking feasible set rules out.
[[nodiscard]] inline std::vector<SweepRow> sweep_varrho(Scenario sc, std::vector<double> values) {
    detail::require_standard(sc, "sweep");
    if (values.empty()) throw InvalidArgument("sweep: no varrho values");
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());

    const auto standard = evaluate_schedule(sc, *sc.standard_regimen);
    std::vector<SweepRow> rows;
    for (double v : values) {
        sc.constraints.varrho = v;
        sc.validate();
        const auto plan = solve_scenario(sc);
        const auto opt = evaluate_schedule(sc, plan.schedule);
        SweepRow row;
        row.varrho = v;
        row.r_opt = opt.objective;
        row.r_std = standard.objective;
        row.met_reduction = (row.r_std - row.r_opt) / row.r_std;
        row.bed_opt = opt.tumor_bed;
        row.bed_std = standard.tumor_bed;
        row.bed_reduction = (row.bed_std - row.bed_opt) / row.bed_std;
        row.schedule = plan.schedule;
        if (!rows.empty()) {
            const double prev = rows.back().met_reduction;
            if (row.met_reduction > prev + 1e-12 * std::max(1.0, std::abs(prev))) {
                throw InternalError("sweep: met_reduction increased from " + std::to_string(prev) + " to " +
                                    std::to_string(row.met_reduction) + " at varrho " + std::to_string(v));
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

struct Comparison {
    Evaluation optimized;
    Evaluation standard;
    double solver_objective = 0.0;  // as returned by the solver
    dp::TableStats stats;
    double met_reduction = 0.0;
    double bed_reduction = 0.0;
};

/// Both schedules are scored by the same direct evaluation, so identical
/// schedules give ratios of exactly zero.
[[nodiscard]] inline Comparison compare_standard(const Scenario& sc) {
    detail::require_standard(sc, "compare");
    Comparison out;
    out.standard = evaluate_schedule(sc, *sc.standard_regimen);
    auto plan = solve_scenario(sc);
    out.solver_objective = plan.objective;
    out.stats = std::move(plan.stats);
    out.optimized = evaluate_schedule(sc, plan.schedule);
    out.met_reduction = (out.standard.objective - out.optimized.objective) / out.standard.objective;
    out.bed_reduction = (out.standard.tumor_bed - out.optimized.tumor_bed) / out.standard.tumor_bed;
    return out;
}

}  // namespace crt
