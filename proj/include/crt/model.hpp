#pragma once

#include "crt/errors.hpp"
#include "crt/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crt {

// ============================================================================
// Primary tumor dynamics
// ============================================================================

/// exp(-alpha d - beta d^2 - theta c - psi d c)
[[nodiscard]] inline double surviving_fraction(double d, double c, const TumorParams& params) {
    if (!(d >= 0.0) || !(c >= 0.0)) {
        throw InvalidArgument("surviving_fraction: dose and concentration must be >= 0");
    }
    return std::exp(-params.alpha * d - params.beta * d * d - params.theta * c - params.psi * d * c);
}

/// Per-session radio-sensitivities. An empty path means the static (alpha, beta) of `params`.
using SensitivityPath = std::span<const Sensitivity>;

[[nodiscard]] inline Sensitivity sensitivity_at(SensitivityPath path, const TumorParams& params,
                                                size_t session_index) {
    if (path.empty()) return {params.alpha, params.beta};
    return path[session_index];
}

/// Log cell-kill of one session: alpha_t d + beta_t d^2 + theta c + psi d c.
[[nodiscard]] inline double session_log_kill(double d, double c, Sensitivity s, const TumorParams& params) {
    return s.alpha * d + s.beta * d * d + params.theta * c + params.psi * d * c;
}

/// Sensitivities used for the brachytherapy boost: those of the last session.
[[nodiscard]] inline Sensitivity last_session_sensitivity(SensitivityPath path, const TumorParams& params) {
    if (path.empty()) return {params.alpha, params.beta};
    return path.back();
}

/// Tumor cell count X_t, including repopulation and, when configured, the brachytherapy boost.
[[nodiscard]] inline double tumor_population(double t, const TreatmentSchedule& schedule,
                                             const TumorParams& params, const Horizon& horizon,
                                             SensitivityPath path = {}) {
    if (!(t >= 0.0) || t > horizon.T) {
        throw InvalidArgument("tumor_population: t outside [0, T]");
    }
    schedule.validate();
    if (schedule.sessions() != horizon.sessions) {
        throw InvalidArgument("tumor_population: schedule length differs from horizon sessions");
    }
    if (!path.empty() && path.size() != schedule.doses.size()) {
        throw InvalidArgument("tumor_population: sensitivity path length mismatch");
    }
    const int delivered = std::min(static_cast<int>(std::floor(t)), horizon.sessions);
    double kill = 0.0;
    for (int i = 0; i < delivered; ++i) {
        const auto k = static_cast<size_t>(i);
        kill += session_log_kill(schedule.doses[k], schedule.chemo[k], sensitivity_at(path, params, k), params);
    }
    if (horizon.brachy) {
        const auto& b = *horizon.brachy;
        const double start = horizon.sessions + b.rest_days;
        if (t > start) {
            const auto s = last_session_sensitivity(path, params);
            kill += b.daily_log_kill(s.alpha, s.beta) * std::min(t - start, static_cast<double>(b.days));
        }
    }
    return params.x0 * std::exp(-kill + params.repopulation(t));
}

// ============================================================================
// Biologically effective dose
// ============================================================================

[[nodiscard]] inline double bed(std::span<const double> doses, double ab_ratio) {
    if (!(ab_ratio > 0.0)) throw InvalidArgument("bed: ab_ratio must be > 0");
    double total = 0.0;
    for (double d : doses) {
        if (!(d >= 0.0)) throw InvalidArgument("bed: doses must be >= 0");
        total += d * (1.0 + d / ab_ratio);
    }
    return total;
}

/// BED in a structure receiving gamma * d per fraction.
[[nodiscard]] inline double oar_bed(std::span<const double> doses, double gamma, double ab_ratio) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("oar_bed: gamma outside (0,1]");
    if (!(ab_ratio > 0.0)) throw InvalidArgument("oar_bed: ab_ratio must be > 0");
    double total = 0.0;
    for (double d : doses) {
        if (!(d >= 0.0)) throw InvalidArgument("oar_bed: doses must be >= 0");
        const double g = gamma * d;
        total += g * (1.0 + g / ab_ratio);
    }
    return total;
}

// ============================================================================
// Feasibility
// ============================================================================

struct ConstraintCheck {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    double slack = 0.0;  // >= 0 when satisfied (up to kConstraintTol)
    bool pass = false;
};

struct FeasibilityReport {
    std::vector<ConstraintCheck> checks;

    [[nodiscard]] bool feasible() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
    }

    [[nodiscard]] const ConstraintCheck* find(const std::string& name) const {
        for (const auto& c : checks) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }
};

/// Evaluates OAR caps, the tumor BED floor, the chemo budget and the per-session caps.
[[nodiscard]] inline FeasibilityReport feasibility_report(const TreatmentSchedule& schedule,
                                                          const Constraints& constraints) {
    schedule.validate();
    FeasibilityReport report;
    auto upper = [&](std::string name, double value, double limit) {
        const double slack = limit - value;
        report.checks.push_back({std::move(name), value, limit, slack, slack >= -kConstraintTol});
    };
    for (const auto& oar : constraints.oars) {
        upper("oar:" + oar.name, oar_bed(schedule.doses, oar.gamma, oar.ab_ratio), oar.bed_cap);
    }
    {
        const double value = bed(schedule.doses, constraints.tumor_ab_ratio);
        const double limit = constraints.tumor_bed_floor();
        const double slack = value - limit;
        report.checks.push_back({"tumor_bed_floor", value, limit, slack, slack >= -kConstraintTol});
    }
    double chemo_total = 0.0;
    for (double c : schedule.chemo) chemo_total += c;
    upper("chemo_budget", chemo_total, constraints.chemo_budget);

    const double max_dose = schedule.doses.empty() ? 0.0 : *std::max_element(schedule.doses.begin(), schedule.doses.end());
    const double max_chemo = schedule.chemo.empty() ? 0.0 : *std::max_element(schedule.chemo.begin(), schedule.chemo.end());
    upper("daily_dose_max", max_dose, constraints.dose_max);
    upper("daily_chemo_max", max_chemo, constraints.chemo_max);
    return report;
}

// ============================================================================
// Metastatic objective (per nu)
// ============================================================================

namespace detail {

/// Integral of exp(c0 - k t) over [lo, hi]; zero when hi <= lo. Uses the
/// analytic limit (hi - lo) exp(c0 - k lo) for |k| < 1e-12.
[[nodiscard]] inline double exp_integral(double c0, double k, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    const double len = hi - lo;
    const double head = std::exp(c0 - k * lo);
    if (std::abs(k) < 1e-12) return len * head;
    return head * (-std::expm1(-k * len)) / k;
}

[[nodiscard]] inline double exp_integral_limit(double c0, double k, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    return (hi - lo) * std::exp(c0 - k * lo);
}

}  // namespace detail

/// The four cumulative treatment sums the post-treatment term depends on.
/// `sum_alpha_d` / `sum_beta_d2` are sensitivity-weighted, so the same type
/// serves the static and the re-oxygenation model.
struct GammaArgs {
    double sum_alpha_d = 0.0;
    double sum_beta_d2 = 0.0;
    double sum_c = 0.0;
    double sum_dc = 0.0;
};

[[nodiscard]] inline GammaArgs gamma_args(const TreatmentSchedule& schedule, const TumorParams& params,
                                          SensitivityPath path = {}) {
    GammaArgs a;
    for (size_t i = 0; i < schedule.doses.size(); ++i) {
        const double d = schedule.doses[i];
        const double c = schedule.chemo[i];
        const auto s = sensitivity_at(path, params, i);
        a.sum_alpha_d += s.alpha * d;
        a.sum_beta_d2 += s.beta * d * d;
        a.sum_c += c;
        a.sum_dc += d * c;
    }
    return a;
}

/// Closed-form post-treatment metastatic term: integral over [N+1, T] of
/// X_t^xi e^{mu_i (T - t)}, summed over sites. With a brachytherapy boost the
/// integral is split at the boost boundaries; `last` supplies the
/// radio-sensitivities of the final session (defaults to the static ones).
[[nodiscard]] inline double objective_g(const GammaArgs& args, const std::vector<MetastaticSite>& sites,
                                        const TumorParams& params, const Horizon& horizon,
                                        std::optional<Sensitivity> last = std::nullopt) {
    const double gamma = args.sum_alpha_d + args.sum_beta_d2 + params.theta * args.sum_c +
                         params.psi * args.sum_dc + params.repop_rate() * params.kickoff;
    const double log_prefactor = params.xi * std::log(params.x0) - params.xi * gamma;
    const double n1 = horizon.sessions + 1.0;
    const double T = horizon.T;

    double total = 0.0;
    for (const auto& site : sites) {
        if (site.p <= 0.0) continue;
        const double kappa = site.mu - params.xi * params.repop_rate();
        const double c0 = log_prefactor + std::log(site.p) + site.mu * T;
        double integral = 0.0;
        if (!horizon.brachy) {
            integral = detail::exp_integral(c0, kappa, n1, T);
        } else {
            const auto& b = *horizon.brachy;
            const Sensitivity s = last.value_or(Sensitivity{params.alpha, params.beta});
            const double lam = params.xi * b.daily_log_kill(s.alpha, s.beta);
            const double start = horizon.sessions + static_cast<double>(b.rest_days);
            const double stop = start + static_cast<double>(b.days);
            integral += detail::exp_integral(c0, kappa, n1, std::min(start, T));
            integral += detail::exp_integral(c0 + lam * start, kappa + lam, std::max(start, n1), std::min(stop, T));
            integral += detail::exp_integral(c0 - lam * b.days, kappa, std::max(stop, n1), T);
        }
        total += integral;
    }
    return total;
}

/// During-treatment metastatic term: sum over t = 0..N+1 of the seeding from
/// the population just before session t, grown to T. When the chemo budget is
/// exhausted the remaining-chemo factor is written through C_max; otherwise the
/// remaining chemo is taken from the schedule itself.
[[nodiscard]] inline double objective_f(const TreatmentSchedule& schedule, const std::vector<MetastaticSite>& sites,
                                        const TumorParams& params, const Horizon& horizon,
                                        const Constraints& constraints, SensitivityPath path = {}) {
    schedule.validate();
    const int n = schedule.sessions();
    if (n != horizon.sessions) throw InvalidArgument("objective_f: schedule length differs from horizon sessions");
    if (!path.empty() && static_cast<int>(path.size()) != n) {
        throw InvalidArgument("objective_f: sensitivity path length mismatch");
    }
    double chemo_total = 0.0;
    for (double c : schedule.chemo) chemo_total += c;
    const double budget = constraints.chemo_budget;
    const bool exhausted = std::abs(chemo_total - budget) <= kConstraintTol * std::max(1.0, budget);

    const double log_x0 = params.xi * std::log(params.x0);
    double total = 0.0;
    for (const auto& site : sites) {
        if (site.p <= 0.0) continue;
        const double log_p = std::log(site.p);
        double kill = 0.0;   // sum_{j<t} alpha d + beta d^2 + psi d c
        double chemo = 0.0;  // sum_{j<t} c
        for (int t = 0; t <= n + 1; ++t) {
            if (t >= 2) {
                const auto j = static_cast<size_t>(t - 2);
                const auto s = sensitivity_at(path, params, j);
                const double d = schedule.doses[j];
                const double c = schedule.chemo[j];
                kill += s.alpha * d + s.beta * d * d + params.psi * d * c;
                chemo += c;
            }
            const double remaining = exhausted ? (budget - chemo) : (chemo_total - chemo);
            const double exponent = log_x0 + log_p + site.mu * (horizon.T - t) -
                                    params.xi * (kill + params.theta * chemo - params.repopulation(t)) -
                                    site.omega * remaining;
            total += std::exp(exponent);
        }
    }
    return total;
}

/// f + g for a schedule, with an optional re-oxygenation sensitivity path.
[[nodiscard]] inline double evaluate_objective(const TreatmentSchedule& schedule,
                                               const std::vector<MetastaticSite>& sites,
                                               const TumorParams& params, const Horizon& horizon,
                                               const Constraints& constraints, SensitivityPath path = {}) {
    const double f = objective_f(schedule, sites, params, horizon, constraints, path);
    std::optional<Sensitivity> last;
    if (!path.empty()) last = path.back();
    const double g = objective_g(gamma_args(schedule, params, path), sites, params, horizon, last);
    return f + g;
}

}  // namespace crt
