#pragma once

#include "crt/dp/detail.hpp"
#include "crt/dp/grid.hpp"
#include "crt/dp/table.hpp"
#include "crt/errors.hpp"
#include "crt/model.hpp"
#include "crt/types.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace crt::dp {

namespace detail {

struct StaticNode {
    std::uint64_t key = 0;
    double obj = 0.0;
    std::uint32_t id = 0;  // predecessor id while the stage is built, own id afterwards
    std::uint16_t d_idx = 0;
    std::uint16_t c_idx = 0;
};

struct StaticAction {
    std::int64_t d = 0;
    std::int64_t c = 0;   // step in the S field (0 when chemo is fixed)
    std::int64_t dc = 0;  // step in the W field (0 when W is not tracked)
    std::int64_t d2 = 0;
    std::uint64_t group_delta = 0;
};

/// Parents with the same (U, S, W), contiguous and sorted by V.
struct GroupRange {
    std::uint64_t group;
    std::uint32_t begin;
    std::uint32_t end;
};

/// Best candidate seen for one child V within a group. Ties on obj go to the
/// smallest (parent index, action index), i.e. the first candidate a serial
/// scan over sorted parents and ordered actions would meet.
struct Cell {
    double obj;
    std::uint32_t parent;
    std::uint32_t action;
};

struct StageCounters {
    std::size_t transitions = 0;
    std::size_t pruned_budget = 0;
    std::size_t pruned_infeasible = 0;
};

}  // namespace detail

/// Forward DP over (U, V, S, W) with static radio-sensitivity. Stage t adds the
/// seeding term of session t+1; the root carries the terms of t = 0 and 1 and
/// the last stage also adds the post-treatment term g. In FixedChemo2D mode the
/// chemo vector is taken from `fixed_chemo` and only (U, V) is searched.
[[nodiscard]] inline OptimalPlan solve_static(const TumorParams& params, const std::vector<MetastaticSite>& sites,
                                              const Horizon& horizon, const Constraints& constraints,
                                              const Grid& grid, StaticMode mode,
                                              const std::vector<double>& fixed_chemo = {},
                                              const SolveOptions& options = {}) {
    horizon.validate();
    const int N = horizon.sessions;
    params.validate(N);
    validate_sites(sites);
    constraints.validate(N);
    const GridUnits gu = grid_units(grid, constraints);
    const double ds = grid.d_step;
    const double cs = grid.c_step;

    const bool chemo_fixed = mode == StaticMode::FixedChemo2D;
    if (mode == StaticMode::NoSensitizer3D && params.psi != 0.0) {
        throw InvalidArgument("NoSensitizer3D mode requires psi = 0");
    }
    std::vector<long> fixed_idx(static_cast<size_t>(N), 0);
    std::vector<double> chemo_prefix(static_cast<size_t>(N + 1), 0.0);
    double chemo_total = constraints.chemo_budget;
    if (chemo_fixed) {
        if (static_cast<int>(fixed_chemo.size()) != N) {
            throw InvalidArgument("FixedChemo2D mode needs a chemo vector with one entry per session");
        }
        chemo_total = 0.0;
        for (int t = 0; t < N; ++t) {
            const double c = fixed_chemo[static_cast<size_t>(t)];
            if (!(c >= 0.0) || c > constraints.chemo_max + kConstraintTol) {
                throw InvalidArgument("fixed chemo entry " + std::to_string(t + 1) + " outside [0, c_max]");
            }
            const long idx = detail::steps_of(c, cs);
            if (idx < 0 && params.psi != 0.0) {
                throw GridMisaligned("fixed chemo must lie on the chemo grid when psi > 0");
            }
            fixed_idx[static_cast<size_t>(t)] = std::max(idx, 0L);
            chemo_total += c;
            chemo_prefix[static_cast<size_t>(t + 1)] = chemo_total;
        }
        if (chemo_total > constraints.chemo_budget + kConstraintTol) {
            throw InvalidArgument("fixed chemo exceeds the chemo budget");
        }
    } else if (!fixed_chemo.empty()) {
        throw InvalidArgument("a fixed chemo vector is only used in FixedChemo2D mode");
    }
    const bool key_w = mode == StaticMode::Full4D || (chemo_fixed && params.psi != 0.0);

    const int nd = gu.dose_levels;
    const long budget = gu.budget;
    const auto max_u = static_cast<std::int64_t>(N) * nd;
    const auto max_v = static_cast<std::int64_t>(N) * nd * nd;
    std::uint64_t max_w = 0;
    if (key_w) {
        std::uint64_t chemo_units = static_cast<std::uint64_t>(budget);
        if (chemo_fixed) {
            chemo_units = 0;
            for (long c : fixed_idx) chemo_units += static_cast<std::uint64_t>(c);
        }
        max_w = chemo_units * static_cast<std::uint64_t>(nd);
    }
    const detail::KeyPacker packer(static_cast<std::uint64_t>(max_u), static_cast<std::uint64_t>(max_v),
                                   chemo_fixed ? 0 : static_cast<std::uint64_t>(budget), max_w);
    const detail::DoseChecks checks(constraints, ds);
    const detail::SeedingWeights weights(params, sites, horizon, chemo_total);
    std::vector<double> fixed_weights;
    std::optional<detail::WeightTable> table;
    if (chemo_fixed) {
        for (int k = 0; k <= N + 1; ++k) {
            fixed_weights.push_back(weights.weight(k, k == 0 ? 0.0 : chemo_prefix[static_cast<size_t>(k - 1)]));
        }
    } else {
        table.emplace(weights, N, budget, cs);
    }
    auto weight = [&](int k, std::int64_t s) {
        return chemo_fixed ? fixed_weights[static_cast<size_t>(k)] : table->at(k, s);
    };

    // OAR caps bound V from above and the terminal floor bounds it from below,
    // both monotonically, so per-U limits replace per-row checks.
    std::vector<std::int64_t> v_hi(static_cast<size_t>(max_u + 1));
    std::vector<std::int64_t> v_lo(static_cast<size_t>(max_u + 1));
    for (std::int64_t u = 0; u <= max_u; ++u) {
        v_hi[static_cast<size_t>(u)] = checks.max_v(u, max_v);
        v_lo[static_cast<size_t>(u)] = checks.min_v(u, max_v);
    }

    OptimalPlan plan;
    if (options.retain_table) plan.table.emplace();
    BackLog log;

    std::vector<detail::StaticNode> parents(1);
    parents[0].obj = weight(0, 0) + weight(1, 0);

    const int threads = std::max(1, options.threads);
    for (int t = 1; t <= N; ++t) {
        const bool last = t == N;
        const long remaining = N - t;
        const auto day_chemo = static_cast<int>(fixed_idx[static_cast<size_t>(t - 1)]);

        std::vector<detail::StaticAction> actions;
        for (int di = 0; di <= nd; ++di) {
            const int c_lo = chemo_fixed ? day_chemo : 0;
            const int c_hi = chemo_fixed ? day_chemo : gu.chemo_levels;
            for (int ci = c_lo; ci <= c_hi; ++ci) {
                detail::StaticAction a;
                a.d = di;
                a.c = chemo_fixed ? 0 : ci;
                a.dc = key_w ? static_cast<std::int64_t>(di) * ci : 0;
                a.d2 = static_cast<std::int64_t>(di) * di;
                a.group_delta = packer.group(packer.pack(static_cast<std::uint64_t>(a.d), 0,
                                                         static_cast<std::uint64_t>(a.c),
                                                         static_cast<std::uint64_t>(a.dc)));
                actions.push_back(a);
            }
        }

        std::vector<detail::GroupRange> groups;
        for (std::uint32_t i = 0; i < parents.size(); ++i) {
            const std::uint64_t g = packer.group(parents[i].key);
            if (groups.empty() || groups.back().group != g) groups.push_back({g, i, i});
            groups.back().end = i + 1;
        }

        // Child-group admissibility depends only on the child's U and S.
        detail::StageCounters totals;
        auto group_ok = [&](std::int64_t u, std::int64_t s, std::size_t rows) {
            if (!chemo_fixed) {
                if (s > budget) return false;
                if (options.prune_budget && remaining * gu.chemo_levels < budget - s) {
                    totals.pruned_budget += rows;
                    return false;
                }
                if (last && s != budget) return false;
            }
            if (v_hi[static_cast<size_t>(u)] < 0) {
                totals.pruned_infeasible += rows;
                return false;
            }
            return true;
        };
        std::vector<std::uint64_t> children;
        for (const auto& g : groups) {
            const std::uint64_t key = packer.from_group(g.group, 0);
            for (const auto& a : actions) {
                if (group_ok(packer.u(key) + a.d, packer.s(key) + a.c, g.end - g.begin)) {
                    children.push_back(g.group + a.group_delta);
                }
            }
        }
        std::sort(children.begin(), children.end());
        children.erase(std::unique(children.begin(), children.end()), children.end());

        auto find_group = [&](std::uint64_t g) -> const detail::GroupRange* {
            const auto it = std::lower_bound(groups.begin(), groups.end(), g,
                                             [](const detail::GroupRange& r, std::uint64_t k) { return r.group < k; });
            return it != groups.end() && it->group == g ? &*it : nullptr;
        };

        std::atomic<bool> overflow{false};
        auto build = [&](std::size_t lo, std::size_t hi, std::vector<detail::StaticNode>& out,
                         detail::StageCounters& st) {
            std::vector<detail::Cell> cells;
            std::vector<std::pair<const detail::GroupRange*, std::uint32_t>> sources;
            for (std::size_t gi = lo; gi < hi; ++gi) {
                if (out.size() > options.max_stage_rows) {
                    overflow = true;
                    return;
                }
                const std::uint64_t child = children[gi];
                const std::uint64_t ckey = packer.from_group(child, 0);
                const std::int64_t u = packer.u(ckey);
                const std::int64_t s = packer.s(ckey);
                const std::int64_t w = packer.w(ckey);
                const std::int64_t top = v_hi[static_cast<size_t>(u)];
                const std::int64_t bottom = last ? v_lo[static_cast<size_t>(u)] : 0;

                sources.clear();
                std::int64_t span_lo = std::numeric_limits<std::int64_t>::max();
                std::int64_t span_hi = -1;
                for (std::uint32_t ai = 0; ai < actions.size(); ++ai) {
                    const auto& a = actions[ai];
                    if (a.d > u || a.c > s || a.dc > w) continue;
                    const auto* src = find_group(child - a.group_delta);
                    if (!src) continue;
                    sources.emplace_back(src, ai);
                    span_lo = std::min(span_lo, packer.v(parents[src->begin].key) + a.d2);
                    span_hi = std::max(span_hi, packer.v(parents[src->end - 1].key) + a.d2);
                }
                span_lo = std::max(span_lo, bottom);
                span_hi = std::min(span_hi, top);
                if (span_lo > span_hi) {
                    for (const auto& src : sources) st.pruned_infeasible += src.first->end - src.first->begin;
                    continue;
                }
                cells.assign(static_cast<size_t>(span_hi - span_lo + 1),
                             {std::numeric_limits<double>::infinity(), 0, 0});

                for (const auto& [src, ai] : sources) {
                    const std::int64_t d2 = actions[ai].d2;
                    for (std::uint32_t pi = src->begin; pi < src->end; ++pi) {
                        const std::int64_t v = packer.v(parents[pi].key) + d2;
                        if (v > span_hi) {
                            st.pruned_infeasible += src->end - pi;
                            break;
                        }
                        if (v < span_lo) {
                            ++st.pruned_infeasible;
                            continue;
                        }
                        ++st.transitions;
                        auto& cell = cells[static_cast<size_t>(v - span_lo)];
                        const double obj = parents[pi].obj;
                        if (obj < cell.obj ||
                            (obj == cell.obj && (pi < cell.parent || (pi == cell.parent && ai < cell.action)))) {
                            cell = {obj, pi, ai};
                        }
                    }
                }
                for (std::size_t k = 0; k < cells.size(); ++k) {
                    const auto& cell = cells[k];
                    if (cell.obj == std::numeric_limits<double>::infinity()) continue;
                    const auto& a = actions[cell.action];
                    const int c_idx = chemo_fixed ? day_chemo : static_cast<int>(a.c);
                    out.push_back({packer.from_group(child, static_cast<std::uint64_t>(span_lo) + k), cell.obj,
                                   parents[cell.parent].id, static_cast<std::uint16_t>(a.d),
                                   static_cast<std::uint16_t>(c_idx)});
                }
            }
        };

        // Child groups are split into contiguous ranges; concatenating the
        // per-thread outputs in order reproduces the serial table.
        const int parts = std::min<int>(threads, static_cast<int>(children.size() / 64) + 1);
        std::vector<std::vector<detail::StaticNode>> outs(static_cast<size_t>(parts));
        std::vector<detail::StageCounters> counters(static_cast<size_t>(parts));
        auto split = [&](int k) { return children.size() * static_cast<size_t>(k) / static_cast<size_t>(parts); };
        if (parts == 1) {
            build(0, children.size(), outs[0], counters[0]);
        } else {
            std::vector<std::thread> pool;
            for (int k = 0; k < parts; ++k) {
                pool.emplace_back([&, k] {
                    build(split(k), split(k + 1), outs[static_cast<size_t>(k)], counters[static_cast<size_t>(k)]);
                });
            }
            for (auto& th : pool) th.join();
        }
        if (overflow) {
            throw InstanceTooLarge("session " + std::to_string(t) + " needs more than " +
                                   std::to_string(options.max_stage_rows) + " table rows; use a coarser grid");
        }
        std::vector<detail::StaticNode> stage = std::move(outs[0]);
        for (std::size_t k = 1; k < outs.size(); ++k) stage.insert(stage.end(), outs[k].begin(), outs[k].end());
        counters.push_back(totals);
        for (const auto& st : counters) {
            plan.stats.transitions += st.transitions;
            plan.stats.pruned_budget += st.pruned_budget;
            plan.stats.pruned_infeasible += st.pruned_infeasible;
        }
        if (stage.empty()) {
            throw NoFeasibleSchedule("no feasible schedule: the table for session " + std::to_string(t) +
                                     " is empty");
        }

        std::vector<DpRow>* rows = nullptr;
        if (plan.table) rows = &plan.table->stages.emplace_back();
        for (auto& n : stage) {
            const std::int64_t s = packer.s(n.key);
            const double S = chemo_fixed ? chemo_prefix[static_cast<size_t>(t)] : static_cast<double>(s) * cs;
            const double W = static_cast<double>(packer.w(n.key)) * ds * cs;
            const double U = static_cast<double>(packer.u(n.key)) * ds;
            const double V = static_cast<double>(packer.v(n.key)) * ds * ds;
            const double kill = params.alpha * U + params.beta * V + params.theta * S + params.psi * W;
            double cost = std::exp(-params.xi * kill) * weight(t + 1, s);
            if (last) {
                cost += objective_g({params.alpha * U, params.beta * V, S, W}, sites, params, horizon);
            }
            n.obj += cost;
            log.push_back({n.id, static_cast<std::uint16_t>(t), n.d_idx, n.c_idx});
            const auto id = static_cast<std::uint32_t>(log.size());
            if (rows) {
                const double c = chemo_fixed ? fixed_chemo[static_cast<size_t>(t - 1)] : grid_value(n.c_idx, cs);
                rows->push_back(
                    {t, {U, V, S, W, params.alpha * U, params.beta * V}, grid_value(n.d_idx, ds), c, n.obj, id, n.id});
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
    if (chemo_fixed) plan.schedule.chemo = fixed_chemo;
    attach_beds(plan, constraints);
    return plan;
}

}  // namespace crt::dp
