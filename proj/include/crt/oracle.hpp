#pragma once

#include "crt/dp/grid.hpp"
#include "crt/dp/table.hpp"
#include "crt/errors.hpp"
#include "crt/model.hpp"
#include "crt/oxygenation.hpp"
#include "crt/types.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace crt {

/// Largest number of schedules brute_force will enumerate.
inline constexpr double kOracleMaxSchedules = 1e7;

/// Exhaustive search over every on-grid schedule. Feasibility and the
/// objective come straight from the model functions (with the realized
/// sensitivity path when `oxygen` is given). Ties keep the lexicographically
/// smallest (d1, c1, d2, c2, ...) sequence. With `fixed_chemo` only the doses
/// are enumerated.
[[nodiscard]] inline dp::OptimalPlan brute_force(const TumorParams& params, const std::vector<MetastaticSite>& sites,
                                                 const Horizon& horizon, const Constraints& constraints,
                                                 const dp::Grid& grid,
                                                 const std::optional<OxygenModel>& oxygen = std::nullopt,
                                                 const std::optional<std::vector<double>>& fixed_chemo = std::nullopt) {
    horizon.validate();
    const int N = horizon.sessions;
    params.validate(N);
    validate_sites(sites);
    constraints.validate(N);
    if (oxygen) oxygen->validate(params.x0);
    const dp::GridUnits gu = dp::grid_units(grid, constraints);
    if (fixed_chemo && static_cast<int>(fixed_chemo->size()) != N) {
        throw InvalidArgument("brute_force: fixed chemo vector length differs from sessions");
    }

    const int dose_choices = gu.dose_levels + 1;
    const int chemo_choices = fixed_chemo ? 1 : gu.chemo_levels + 1;
    const int per_session = dose_choices * chemo_choices;
    if (std::pow(static_cast<double>(per_session), N) > kOracleMaxSchedules) {
        throw InstanceTooLarge("brute_force: " + std::to_string(per_session) + "^" + std::to_string(N) +
                               " schedules exceed the enumeration limit");
    }

    std::vector<int> digits(static_cast<size_t>(N), 0);
    TreatmentSchedule s = TreatmentSchedule::zeros(N);
    if (fixed_chemo) s.chemo = *fixed_chemo;

    dp::OptimalPlan best;
    best.objective = std::numeric_limits<double>::infinity();
    bool found = false;
    for (;;) {
        for (int i = 0; i < N; ++i) {
            const int a = digits[static_cast<size_t>(i)];
            s.doses[static_cast<size_t>(i)] = dp::grid_value(a / chemo_choices, grid.d_step);
            if (!fixed_chemo) s.chemo[static_cast<size_t>(i)] = dp::grid_value(a % chemo_choices, grid.c_step);
        }
        ++best.stats.transitions;
        if (feasibility_report(s, constraints).feasible()) {
            std::vector<Sensitivity> path;
            if (oxygen) path = sensitivity_path(s, params, *oxygen);
            const double obj = evaluate_objective(s, sites, params, horizon, constraints, path);
            if (obj < best.objective) {
                best.objective = obj;
                best.schedule = s;
                best.sensitivities = std::move(path);
                found = true;
            }
        } else {
            ++best.stats.pruned_infeasible;
        }

        // Odometer over the (d, c) choices, last session fastest.
        int i = N - 1;
        while (i >= 0 && ++digits[static_cast<size_t>(i)] == per_session) {
            digits[static_cast<size_t>(i)] = 0;
            --i;
        }
        if (i < 0) break;
    }
    if (!found) throw NoFeasibleSchedule("brute_force: no feasible schedule on the grid");
    dp::attach_beds(best, constraints);
    return best;
}

}  // namespace crt
