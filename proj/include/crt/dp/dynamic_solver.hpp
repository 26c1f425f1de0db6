#pragma once

#include "crt/dp/detail.hpp"
#include "crt/dp/grid.hpp"
#include "crt/dp/static_solver.hpp"
#include "crt/dp/table.hpp"
#include "crt/errors.hpp"
#include "crt/model.hpp"
#include "crt/oxygenation.hpp"
#include "crt/types.hpp"

#include <absl/container/flat_hash_map.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace crt::dp {

/// Tumor-BED floor used to keep dominance pruning from discarding the only
/// rows that can still reach the terminal floor.
struct BedFloor {
    double ab_ratio = 10.0;
    double floor = 0.0;
};

namespace detail {

/// The fields dominance compares. `group` must match exactly (cumulative chemo).
struct DominanceView {
    std::int64_t group;
    double obj, U, V, W, Uhat, Vhat, bed;
};

/// Indices of the rows that survive dominance elimination, in input order. A
/// row is dropped when another row of the same group has obj, U, V no larger,
/// W, Uhat, Vhat no smaller and a tumor BED that still covers min(own BED,
/// floor). Rows are scanned best-first so checking against kept rows suffices.
template <typename View>
[[nodiscard]] std::vector<std::size_t> dominance_filter(std::size_t n, View&& view, double floor, std::size_t* dropped) {
    std::vector<DominanceView> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = view(i);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = rows[a];
        const auto& y = rows[b];
        if (x.group != y.group) return x.group < y.group;
        if (x.obj != y.obj) return x.obj < y.obj;
        if (x.U != y.U) return x.U < y.U;
        if (x.V != y.V) return x.V < y.V;
        if (x.W != y.W) return x.W > y.W;
        if (x.Uhat != y.Uhat) return x.Uhat > y.Uhat;
        return x.Vhat > y.Vhat;
    });

    std::vector<std::size_t> kept;
    std::vector<char> keep(n, 0);
    std::size_t group_start = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& r = rows[order[k]];
        if (k > 0 && rows[order[k - 1]].group != r.group) group_start = kept.size();
        bool dominated = false;
        const double need = std::min(r.bed, floor) - kConstraintTol;
        for (std::size_t j = group_start; j < kept.size() && !dominated; ++j) {
            const auto& q = rows[kept[j]];
            dominated = q.obj <= r.obj && q.U <= r.U && q.V <= r.V && q.W >= r.W && q.Uhat >= r.Uhat &&
                        q.Vhat >= r.Vhat && q.bed >= need;
        }
        if (dominated) {
            if (dropped) ++*dropped;
        } else {
            kept.push_back(order[k]);
            keep[order[k]] = 1;
        }
    }
    std::vector<std::size_t> out;
    out.reserve(kept.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (keep[i]) out.push_back(i);
    }
    return out;
}

/// A stage row on the integer grid, for the indexed dominance filter.
struct GridRowView {
    std::int64_t group, u, v, w;
    double obj, uhat, vhat, bed;
};

/// Same kept set as dominance_filter for rows whose U, V, W are grid counts.
/// Kept rows are indexed by their (U, V) cell, so each row is only compared
/// with cells that can hold a dominator: U' <= U, V' <= V, a tumor BED that
/// covers min(BED, floor), and (from Uhat <= alpha_max U) U' large enough to
/// reach the row's Uhat. Below the floor this leaves the row's own cell only.
template <typename View, typename BedOf>
[[nodiscard]] std::vector<std::size_t> indexed_dominance_filter(std::size_t n, View&& view, BedOf&& bed_of,
                                                                double floor, double uhat_per_u, double vhat_per_v,
                                                                std::size_t* dropped) {
    std::vector<GridRowView> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = view(i);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = rows[a];
        const auto& y = rows[b];
        if (x.group != y.group) return x.group < y.group;
        if (x.obj != y.obj) return x.obj < y.obj;
        if (x.u != y.u) return x.u < y.u;
        if (x.v != y.v) return x.v < y.v;
        if (x.w != y.w) return x.w > y.w;
        if (x.uhat != y.uhat) return x.uhat > y.uhat;
        return x.vhat > y.vhat;
    });

    struct Cell {
        std::int64_t max_w = std::numeric_limits<std::int64_t>::min();
        double max_uhat = -std::numeric_limits<double>::infinity();
        double max_vhat = -std::numeric_limits<double>::infinity();
        std::vector<std::uint32_t> members;
    };
    std::vector<char> keep(n, 0);
    std::size_t begin = 0;
    while (begin < n) {
        std::size_t end = begin;
        std::int64_t max_u = 0;
        while (end < n && rows[order[end]].group == rows[order[begin]].group) {
            max_u = std::max(max_u, rows[order[end]].u);
            ++end;
        }
        absl::flat_hash_map<std::uint64_t, std::uint32_t> cell_of;
        std::vector<Cell> cells;
        std::vector<std::vector<std::int64_t>> v_by_u(static_cast<size_t>(max_u + 1));
        auto cell_key = [](std::int64_t u, std::int64_t v) {
            return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
        };

        for (std::size_t k = begin; k < end; ++k) {
            const auto idx = static_cast<std::uint32_t>(order[k]);
            const auto& r = rows[idx];
            const double need = std::min(r.bed, floor) - kConstraintTol;
            std::int64_t u_lo = 0;
            std::int64_t v_lo = 0;
            if (uhat_per_u > 0) u_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(r.uhat / uhat_per_u)) - 1);
            if (vhat_per_v > 0) v_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(r.vhat / vhat_per_v)) - 1);

            bool dominated = false;
            for (std::int64_t u = r.u; u >= u_lo && !dominated; --u) {
                if (bed_of(u, r.v) < need) break;  // BED grows with U
                const auto& vs = v_by_u[static_cast<size_t>(u)];
                auto it = std::upper_bound(vs.begin(), vs.end(), r.v);
                while (it != vs.begin() && !dominated) {
                    const std::int64_t v = *--it;
                    if (v < v_lo || bed_of(u, v) < need) break;  // BED grows with V
                    const auto& cell = cells[cell_of.find(cell_key(u, v))->second];
                    if (cell.max_w < r.w || cell.max_uhat < r.uhat || cell.max_vhat < r.vhat) continue;
                    for (std::uint32_t j : cell.members) {
                        const auto& q = rows[j];
                        if (q.obj <= r.obj && q.w >= r.w && q.uhat >= r.uhat && q.vhat >= r.vhat && q.bed >= need) {
                            dominated = true;
                            break;
                        }
                    }
                }
            }
            if (dominated) {
                if (dropped) ++*dropped;
                continue;
            }
            keep[idx] = 1;
            auto [it, fresh] = cell_of.try_emplace(cell_key(r.u, r.v), static_cast<std::uint32_t>(cells.size()));
            if (fresh) {
                cells.emplace_back();
                auto& vs = v_by_u[static_cast<size_t>(r.u)];
                vs.insert(std::upper_bound(vs.begin(), vs.end(), r.v), r.v);
            }
            auto& cell = cells[it->second];
            cell.max_w = std::max(cell.max_w, r.w);
            cell.max_uhat = std::max(cell.max_uhat, r.uhat);
            cell.max_vhat = std::max(cell.max_vhat, r.vhat);
            cell.members.push_back(idx);
        }
        begin = end;
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (keep[i]) out.push_back(i);
    }
    return out;
}

struct DynKey {
    std::uint64_t packed;
    std::int64_t uhat_bucket;
    std::int64_t vhat_bucket;

    bool operator==(const DynKey&) const = default;

    template <typename H>
    friend H AbslHashValue(H h, const DynKey& k) {
        return H::combine(std::move(h), k.packed, k.uhat_bucket, k.vhat_bucket);
    }
};

/// Adds a*b to the unevaluated sum hi + lo without rounding error (to about
/// 2^-106 relative) and renormalizes, so hi is the sum rounded once. With
/// constant sensitivities this makes sum(alpha d_t) equal alpha * sum(d_t)
/// bit for bit whenever the dose grid values are exact.
inline void add_product(double& hi, double& lo, double a, double b) {
    const double p = a * b;
    const double pe = std::fma(a, b, -p);
    const double s = hi + p;
    const double bp = s - hi;
    const double se = (hi - (s - bp)) + (p - bp);
    lo += se + pe;
    hi = s + lo;
    lo -= hi - s;
}

struct DynNode {
    std::uint64_t key = 0;  // packed (U, V, S, W)
    double uhat = 0.0;
    double vhat = 0.0;
    double uhat_lo = 0.0;   // rounding residue of uhat
    double vhat_lo = 0.0;
    double obj = 0.0;
    Sensitivity used;       // sensitivities of the session that produced this row
    std::uint32_t id = 0;   // predecessor while building, own id afterwards
    std::uint16_t d_idx = 0;
    std::uint16_t c_idx = 0;
};

inline constexpr double kHatBucket = 1e-6;

/// Lower bound on the cost still to come after session t for a row whose
/// radiation and sensitizer log-kill is K and whose chemo total is s units:
/// exp(-xi K) * at(t, s). Every later session is credited with the largest
/// kill any action could deliver at full oxygenation, and the chemo total
/// before each later term is bounded by what the budget rules still allow.
class RemainingBound {
public:
    RemainingBound(const SeedingWeights& weights, const TumorParams& params, const std::vector<MetastaticSite>& sites,
                   const Horizon& horizon, const OxygenModel& oxygen, const GridUnits& gu, const Grid& grid)
        : stride_(static_cast<size_t>(gu.budget + 1)) {
        const int N = horizon.sessions;
        const double d_max = gu.dose_levels * grid.d_step;
        const double c_max = gu.chemo_levels * grid.c_step;
        const double per_session =
            oxygen.alpha_max * d_max + oxygen.beta_max * d_max * d_max + params.psi * d_max * c_max;
        const double post0 = objective_g({}, sites, params, horizon, Sensitivity{oxygen.alpha_max, oxygen.beta_max});
        const double full_chemo = params.theta * static_cast<double>(gu.budget) * grid.c_step;
        coef_.assign(static_cast<size_t>(N + 1) * stride_, 0.0);
        for (int t = 1; t < N; ++t) {
            const double post = post0 * std::exp(-params.xi * (full_chemo + (N - t) * per_session));
            for (long s = 0; s <= gu.budget; ++s) {
                double total = post;
                for (int k = t + 2; k <= N + 1; ++k) {
                    const long steps = k - 1 - t;
                    const long lo = std::max(s, gu.budget - static_cast<long>(N - (k - 1)) * gu.chemo_levels);
                    const long hi = std::max(lo, std::min(gu.budget, s + steps * gu.chemo_levels));
                    for (std::size_t i = 0; i < weights.site_count(); ++i) {
                        const double slope = (weights.omega(i) - params.xi * params.theta) * grid.c_step;
                        const double base = weights.log_a(k, i) - params.xi * static_cast<double>(steps) * per_session;
                        total += std::exp(base + std::min(slope * static_cast<double>(lo), slope * static_cast<double>(hi)));
                    }
                }
                coef_[static_cast<size_t>(t) * stride_ + static_cast<size_t>(s)] = total;
            }
        }
    }

    [[nodiscard]] double at(int t, long s) const { return coef_[static_cast<size_t>(t) * stride_ + static_cast<size_t>(s)]; }

private:
    std::size_t stride_;
    std::vector<double> coef_;
};

[[nodiscard]] inline std::int64_t hat_bucket(double x) { return std::llround(x / kHatBucket); }

/// Objective of a feasible schedule: the static optimum at fully hypoxic
/// sensitivities, re-evaluated under re-oxygenation.
[[nodiscard]] inline double hypoxic_upper_bound(const TumorParams& params, const std::vector<MetastaticSite>& sites,
                                                const Horizon& horizon, const Constraints& constraints,
                                                const Grid& grid, const OxygenModel& oxygen, int threads) {
    TumorParams hypoxic = params;
    hypoxic.alpha = oxygen.alpha_max / oxygen.oer_alpha;
    hypoxic.beta = oxygen.beta_max / (oxygen.oer_beta * oxygen.oer_beta);
    SolveOptions opts;
    opts.threads = threads;
    const auto plan = solve_static(hypoxic, sites, horizon, constraints, grid, StaticMode::Full4D, {}, opts);
    const auto path = sensitivity_path(plan.schedule, params, oxygen);
    return evaluate_objective(plan.schedule, sites, params, horizon, constraints, path);
}

}  // namespace detail

/// Dominance elimination over the rows of one stage. With `floor`, a row is
/// only discarded in favor of one whose tumor BED keeps the terminal floor
/// reachable whenever the discarded row could.
[[nodiscard]] inline std::vector<DpRow> prune_dominated(const std::vector<DpRow>& rows,
                                                        std::optional<BedFloor> floor = std::nullopt) {
    if (!rows.empty()) {
        for (const auto& r : rows) {
            if (r.day != rows.front().day) throw InvalidArgument("prune_dominated: rows span several days");
        }
    }
    const double ab = floor ? floor->ab_ratio : 1.0;
    const double need = floor ? floor->floor : -std::numeric_limits<double>::infinity();
    // Chemo totals are grid values; group on their exact bit pattern.
    std::vector<double> chemo_levels;
    for (const auto& r : rows) chemo_levels.push_back(r.state.S);
    std::sort(chemo_levels.begin(), chemo_levels.end());
    chemo_levels.erase(std::unique(chemo_levels.begin(), chemo_levels.end()), chemo_levels.end());
    auto view = [&](std::size_t i) {
        const auto& r = rows[i];
        const auto g = std::lower_bound(chemo_levels.begin(), chemo_levels.end(), r.state.S) - chemo_levels.begin();
        const double b = floor ? r.state.U + r.state.V / ab : 0.0;
        return detail::DominanceView{g, r.obj, r.state.U, r.state.V, r.state.W, r.state.Uhat, r.state.Vhat, b};
    };
    std::vector<DpRow> out;
    for (std::size_t i : detail::dominance_filter(rows.size(), view, need, nullptr)) out.push_back(rows[i]);
    return out;
}

/// Forward DP with re-oxygenation: the sensitivities of session t follow from
/// the oxygen pressure produced by the parent's cumulative log-kill, so the
/// state carries the sensitivity-weighted sums Uhat, Vhat besides (U, V, S, W).
[[nodiscard]] inline OptimalPlan solve_dynamic(const TumorParams& params, const std::vector<MetastaticSite>& sites,
                                               const Horizon& horizon, const Constraints& constraints,
                                               const Grid& grid, const OxygenModel& oxygen,
                                               const SolveOptions& options = {}) {
    horizon.validate();
    const int N = horizon.sessions;
    params.validate(N);
    validate_sites(sites);
    constraints.validate(N);
    oxygen.validate(params.x0);
    const GridUnits gu = grid_units(grid, constraints);
    const double ds = grid.d_step;
    const double cs = grid.c_step;
    const int nd = gu.dose_levels;
    const int nc = gu.chemo_levels;
    const long budget = gu.budget;

    const auto un = static_cast<std::uint64_t>(N);
    const auto und = static_cast<std::uint64_t>(nd);
    const detail::KeyPacker packer(un * und, un * und * und, static_cast<std::uint64_t>(budget),
                                   static_cast<std::uint64_t>(budget) * und);
    const detail::DoseChecks checks(constraints, ds);
    const detail::SeedingWeights weights(params, sites, horizon, constraints.chemo_budget);
    const detail::WeightTable table(weights, N, budget, cs);

    // Rows whose optimistic completion is worse than a known feasible
    // schedule cannot lie on an optimal path.
    std::optional<detail::RemainingBound> bound;
    double limit = std::numeric_limits<double>::infinity();
    if (options.prune_bound) {
        limit = detail::hypoxic_upper_bound(params, sites, horizon, constraints, grid, oxygen, options.threads) *
                (1.0 + 1e-9);
        bound.emplace(weights, params, sites, horizon, oxygen, gu, grid);
    }

    OptimalPlan plan;
    if (options.retain_table) plan.table.emplace();
    BackLog log;
    std::vector<Sensitivity> used_by_id;

    std::vector<detail::DynNode> parents(1);
    parents[0].obj = table.at(0, 0) + table.at(1, 0);

    const int threads = std::max(1, options.threads);
    for (int t = 1; t <= N; ++t) {
        const bool last = t == N;
        const long remaining = N - t;

        // Expansion of one parent into its feasible children, in (d, c) order.
        auto expand = [&](std::size_t pi, auto&& emit, TableStats& st) {
            const auto& p = parents[pi];
            const std::int64_t pu = packer.u(p.key);
            const std::int64_t pv = packer.v(p.key);
            const std::int64_t ps = packer.s(p.key);
            const std::int64_t pw = packer.w(p.key);
            const double cum = p.uhat + p.vhat + params.theta * static_cast<double>(ps) * cs +
                               params.psi * static_cast<double>(pw) * ds * cs;
            const Sensitivity sens = sensitivities_at_pressure(oxygen_pressure(cum, t, params, oxygen), oxygen);
            for (int di = 0; di <= nd; ++di) {
                const std::int64_t u = pu + di;
                const std::int64_t v = pv + static_cast<std::int64_t>(di) * di;
                if (!checks.oar_ok(u, v)) {
                    ++st.pruned_infeasible;
                    break;  // OAR BEDs grow with the dose
                }
                if (last && !checks.floor_ok(u, v)) {
                    ++st.pruned_infeasible;
                    continue;
                }
                const double d = di * ds;
                double uhat = p.uhat;
                double uhat_lo = p.uhat_lo;
                double vhat = p.vhat;
                double vhat_lo = p.vhat_lo;
                detail::add_product(uhat, uhat_lo, sens.alpha, d);
                detail::add_product(vhat, vhat_lo, sens.beta, d * d);
                for (int ci = 0; ci <= nc; ++ci) {
                    const std::int64_t s = ps + ci;
                    if (s > budget) break;
                    if (options.prune_budget && remaining * nc < budget - s) {
                        ++st.pruned_budget;
                        continue;
                    }
                    if (last && s != budget) continue;
                    ++st.transitions;
                    const std::int64_t w = pw + static_cast<std::int64_t>(di) * ci;
                    const double S = static_cast<double>(s) * cs;
                    const double W = static_cast<double>(w) * ds * cs;
                    const double kill = uhat + vhat + params.theta * S + params.psi * W;
                    double cost = std::exp(-params.xi * kill) * table.at(t + 1, static_cast<long>(s));
                    if (last) cost += objective_g({uhat, vhat, S, W}, sites, params, horizon, sens);
                    const double obj = p.obj + cost;
                    if (bound && obj + std::exp(-params.xi * (uhat + vhat + params.psi * W)) *
                                           bound->at(t, static_cast<long>(s)) > limit) {
                        ++st.pruned_bound;
                        continue;
                    }
                    detail::DynNode child;
                    child.key = packer.pack(static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(v),
                                            static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(w));
                    child.uhat = uhat;
                    child.vhat = vhat;
                    child.uhat_lo = uhat_lo;
                    child.vhat_lo = vhat_lo;
                    child.obj = obj;
                    child.used = sens;
                    child.id = p.id;
                    child.d_idx = static_cast<std::uint16_t>(di);
                    child.c_idx = static_cast<std::uint16_t>(ci);
                    emit(child);
                }
            }
        };

        absl::flat_hash_map<detail::DynKey, std::uint32_t> index;
        std::vector<detail::DynNode> stage;
        auto insert = [&](const detail::DynNode& n) {
            const detail::DynKey k{n.key, detail::hat_bucket(n.uhat), detail::hat_bucket(n.vhat)};
            auto [it, fresh] = index.try_emplace(k, static_cast<std::uint32_t>(stage.size()));
            if (fresh) {
                if (stage.size() >= options.max_stage_rows) {
                    throw InstanceTooLarge("session " + std::to_string(t) + " needs more than " +
                                           std::to_string(options.max_stage_rows) + " table rows; use a coarser grid");
                }
                stage.push_back(n);
            } else if (n.obj < stage[it->second].obj) {
                stage[it->second] = n;
            }
        };

        const int parts = std::min<int>(threads, static_cast<int>(parents.size() / 1024) + 1);
        if (parts == 1) {
            for (std::size_t i = 0; i < parents.size(); ++i) expand(i, insert, plan.stats);
        } else {
            // Children are generated concurrently per parent chunk and inserted
            // in chunk order, which reproduces the serial first-encounter rule.
            std::vector<std::vector<detail::DynNode>> outs(static_cast<size_t>(parts));
            std::vector<TableStats> stats(static_cast<size_t>(parts));
            std::vector<std::thread> pool;
            for (int k = 0; k < parts; ++k) {
                pool.emplace_back([&, k] {
                    const std::size_t lo = parents.size() * static_cast<size_t>(k) / static_cast<size_t>(parts);
                    const std::size_t hi = parents.size() * static_cast<size_t>(k + 1) / static_cast<size_t>(parts);
                    auto& out = outs[static_cast<size_t>(k)];
                    for (std::size_t i = lo; i < hi; ++i) {
                        expand(i, [&](const detail::DynNode& n) { out.push_back(n); }, stats[static_cast<size_t>(k)]);
                    }
                });
            }
            for (auto& th : pool) th.join();
            for (int k = 0; k < parts; ++k) {
                for (const auto& n : outs[static_cast<size_t>(k)]) insert(n);
                const auto& st = stats[static_cast<size_t>(k)];
                plan.stats.transitions += st.transitions;
                plan.stats.pruned_budget += st.pruned_budget;
                plan.stats.pruned_infeasible += st.pruned_infeasible;
                plan.stats.pruned_bound += st.pruned_bound;
            }
        }
        if (stage.empty()) {
            throw NoFeasibleSchedule("no feasible schedule: the table for session " + std::to_string(t) +
                                     " is empty");
        }

        if (options.prune_dominated && !last) {
            auto view = [&](std::size_t i) {
                const auto& n = stage[i];
                const std::int64_t u = packer.u(n.key);
                const std::int64_t v = packer.v(n.key);
                return detail::GridRowView{packer.s(n.key), u, v, packer.w(n.key), n.obj, n.uhat, n.vhat,
                                           checks.tumor_bed(u, v)};
            };
            auto bed_of = [&](std::int64_t u, std::int64_t v) { return checks.tumor_bed(u, v); };
            const auto keep = detail::indexed_dominance_filter(stage.size(), view, bed_of, checks.floor(),
                                                               oxygen.alpha_max * ds, oxygen.beta_max * ds * ds,
                                                               &plan.stats.pruned_dominated);
            std::vector<detail::DynNode> kept;
            kept.reserve(keep.size());
            for (std::size_t i : keep) kept.push_back(stage[i]);
            stage = std::move(kept);
        }

        std::vector<DpRow>* rows = nullptr;
        if (plan.table) rows = &plan.table->stages.emplace_back();
        for (auto& n : stage) {
            log.push_back({n.id, static_cast<std::uint16_t>(t), n.d_idx, n.c_idx});
            used_by_id.push_back(n.used);
            const auto id = static_cast<std::uint32_t>(log.size());
            if (rows) {
                const DpState state{static_cast<double>(packer.u(n.key)) * ds,
                                    static_cast<double>(packer.v(n.key)) * ds * ds,
                                    static_cast<double>(packer.s(n.key)) * cs,
                                    static_cast<double>(packer.w(n.key)) * ds * cs,
                                    n.uhat,
                                    n.vhat};
                rows->push_back({t, state, grid_value(n.d_idx, ds), grid_value(n.c_idx, cs), n.obj, id, n.id});
            }
            n.id = id;
        }
        plan.stats.rows_per_stage.push_back(stage.size());
        parents = std::move(stage);
    }

    const auto best = std::min_element(parents.begin(), parents.end(),
                                       [](const auto& a, const auto& b) { return a.obj < b.obj; });
    plan.objective = best->obj;
    plan.schedule = backtrack(log, best->id, grid);
    plan.sensitivities.assign(static_cast<size_t>(N), {});
    for (std::uint32_t id = best->id; id != 0; id = log[id - 1].track) {
        plan.sensitivities[static_cast<size_t>(log[id - 1].day - 1)] = used_by_id[id - 1];
    }
    attach_beds(plan, constraints);
    return plan;
}

}  // namespace crt::dp
