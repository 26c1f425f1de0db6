#pragma once

#include "crt/dp/grid.hpp"
#include "crt/errors.hpp"
#include "crt/model.hpp"
#include "crt/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace crt::dp {

/// Cumulative treatment after some session. Uhat/Vhat are the
/// sensitivity-weighted sums (equal to alpha*U, beta*V in the static model).
struct DpState {
    double U = 0.0;
    double V = 0.0;
    double S = 0.0;
    double W = 0.0;
    double Uhat = 0.0;
    double Vhat = 0.0;
};

struct DpRow {
    int day = 0;
    DpState state;
    double d = 0.0;
    double c = 0.0;
    double obj = 0.0;
    std::uint32_t id = 0;
    std::uint32_t track = 0;  // id of the predecessor row, 0 on day 1
};

/// Full per-stage rows; only materialized when requested, since large solves
/// keep just the back-pointer log.
struct DpTable {
    std::vector<std::vector<DpRow>> stages;  // stages[t - 1] holds day t
};

/// One entry per stored row, indexed by id - 1.
struct LogEntry {
    std::uint32_t track = 0;
    std::uint16_t day = 0;
    std::uint16_t d_idx = 0;
    std::uint16_t c_idx = 0;
};

using BackLog = std::vector<LogEntry>;

struct TableStats {
    std::vector<std::size_t> rows_per_stage;
    std::size_t transitions = 0;
    std::size_t pruned_dominated = 0;
    std::size_t pruned_budget = 0;
    std::size_t pruned_infeasible = 0;
    std::size_t pruned_bound = 0;
};

enum class StaticMode { Full4D, NoSensitizer3D, FixedChemo2D };

struct SolveOptions {
    bool prune_dominated = true;
    bool prune_budget = true;
    bool prune_bound = true;  // re-oxygenation solver only
    int threads = 1;
    bool retain_table = false;
    std::size_t max_stage_rows = 40'000'000;  // InstanceTooLarge beyond this
};

struct OptimalPlan {
    TreatmentSchedule schedule;
    double objective = 0.0;
    double tumor_bed = 0.0;
    std::vector<std::pair<std::string, double>> oar_beds;
    TableStats stats;
    std::vector<Sensitivity> sensitivities;  // realized (alpha_t, beta_t); empty for static solves
    std::optional<DpTable> table;
};

/// Grid indices (d_idx, c_idx) per session, recovered by following the track
/// pointers from `terminal_id` back to day 1.
[[nodiscard]] inline std::vector<std::pair<int, int>> backtrack_indices(const BackLog& log,
                                                                        std::uint32_t terminal_id) {
    if (terminal_id == 0 || terminal_id > log.size()) {
        throw InternalError("backtrack: terminal id " + std::to_string(terminal_id) + " not in table");
    }
    const int days = log[terminal_id - 1].day;
    std::vector<std::pair<int, int>> out(static_cast<size_t>(days));
    std::uint32_t id = terminal_id;
    for (int t = days; t >= 1; --t) {
        if (id == 0 || id > log.size()) {
            throw InternalError("backtrack: broken back-pointer chain at day " + std::to_string(t));
        }
        const auto& e = log[id - 1];
        if (e.day != t) {
            throw InternalError("backtrack: row " + std::to_string(id) + " belongs to day " +
                                std::to_string(e.day) + ", expected " + std::to_string(t));
        }
        out[static_cast<size_t>(t - 1)] = {e.d_idx, e.c_idx};
        if (t == 1 && e.track != 0) throw InternalError("backtrack: day-1 row has a predecessor");
        if (t > 1 && e.track >= id) throw InternalError("backtrack: back-pointer does not precede its row");
        id = e.track;
    }
    return out;
}

[[nodiscard]] inline TreatmentSchedule backtrack(const BackLog& log, std::uint32_t terminal_id, const Grid& grid) {
    const auto idx = backtrack_indices(log, terminal_id);
    TreatmentSchedule s;
    for (const auto& [di, ci] : idx) {
        s.doses.push_back(grid_value(di, grid.d_step));
        s.chemo.push_back(grid_value(ci, grid.c_step));
    }
    return s;
}

/// Discard a row when the remaining sessions cannot deliver the rest of the chemo budget.
[[nodiscard]] inline bool prune_budget_unreachable(const DpRow& row, const Constraints& constraints, int sessions) {
    return (sessions - row.day) * constraints.chemo_max < constraints.chemo_budget - row.state.S;
}

/// Fills tumor and OAR BEDs of a finished plan.
inline void attach_beds(OptimalPlan& plan, const Constraints& constraints) {
    plan.tumor_bed = bed(plan.schedule.doses, constraints.tumor_ab_ratio);
    plan.oar_beds.clear();
    for (const auto& o : constraints.oars) {
        plan.oar_beds.emplace_back(o.name, oar_bed(plan.schedule.doses, o.gamma, o.ab_ratio));
    }
}

}  // namespace crt::dp
