#pragma once

#include "crt/errors.hpp"
#include "crt/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace crt {

enum class ChemoRegime { FrontLoaded, BackLoaded, Indeterminate };

[[nodiscard]] inline std::string_view to_string(ChemoRegime r) {
    switch (r) {
        case ChemoRegime::FrontLoaded: return "front-loaded";
        case ChemoRegime::BackLoaded: return "back-loaded";
        case ChemoRegime::Indeterminate: return "indeterminate";
    }
    return "unknown";
}

/// Front-loaded when theta*xi >= max omega, back-loaded when theta*xi < min omega.
[[nodiscard]] inline ChemoRegime classify_chemo_regime(const TumorParams& params,
                                                       const std::vector<MetastaticSite>& sites) {
    if (sites.empty()) throw InvalidArgument("classify_chemo_regime: no metastatic sites");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : sites) {
        lo = std::min(lo, s.omega);
        hi = std::max(hi, s.omega);
    }
    const double primary = params.theta * params.xi;
    if (primary >= hi) return ChemoRegime::FrontLoaded;
    if (primary < lo) return ChemoRegime::BackLoaded;
    return ChemoRegime::Indeterminate;
}

namespace detail {

/// `total` split into `cap`-sized blocks on consecutive days from day 1, remainder on the next day.
[[nodiscard]] inline std::vector<double> pack_front(double total, double cap, int n) {
    std::vector<double> out(static_cast<size_t>(n), 0.0);
    if (total <= 0.0) return out;
    const auto k = static_cast<int>(std::floor(total / cap + 1e-12));
    for (int i = 0; i < std::min(k, n); ++i) out[static_cast<size_t>(i)] = cap;
    const double rest = total - k * cap;
    if (k < n && rest > 1e-12 * cap) out[static_cast<size_t>(k)] = rest;
    return out;
}

}  // namespace detail

/// Optimal chemo vector when the regime is decided: c_max on the first (or
/// last) floor(C_max / c_max) days and the remainder on the adjacent day.
[[nodiscard]] inline std::vector<double> chemo_closed_form(ChemoRegime regime, const Constraints& constraints,
                                                           int sessions) {
    if (regime == ChemoRegime::Indeterminate) {
        throw InvalidArgument("chemo_closed_form: regime is indeterminate, use the DP solver");
    }
    if (sessions <= 0) throw InvalidArgument("chemo_closed_form: sessions must be positive");
    if (!(constraints.chemo_max > 0) || !(constraints.chemo_budget >= 0) ||
        !(constraints.chemo_budget < sessions * constraints.chemo_max)) {
        throw InvalidArgument("chemo_closed_form: need 0 <= C_max < sessions * c_max");
    }
    auto out = detail::pack_front(constraints.chemo_budget, constraints.chemo_max, sessions);
    if (regime == ChemoRegime::BackLoaded) std::reverse(out.begin(), out.end());
    return out;
}

/// With linear radiation kill, the largest physical dose the OAR caps allow is
/// delivered as early as possible in d_max-sized fractions.
[[nodiscard]] inline std::vector<double> radiation_linear_optimal(const std::vector<double>& bed_caps,
                                                                  const std::vector<double>& gammas,
                                                                  double dose_max, int sessions) {
    if (bed_caps.size() != gammas.size()) throw InvalidArgument("radiation_linear_optimal: caps/gammas size mismatch");
    if (!(dose_max > 0) || sessions <= 0) throw InvalidArgument("radiation_linear_optimal: need d_max > 0, sessions > 0");
    double total = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < bed_caps.size(); ++j) {
        if (!(gammas[j] > 0)) throw InvalidArgument("radiation_linear_optimal: gamma must be > 0");
        total = std::min(total, bed_caps[j] / gammas[j]);
    }
    if (!std::isfinite(total)) total = dose_max * sessions;
    total = std::clamp(total, 0.0, dose_max * sessions);
    return detail::pack_front(total, dose_max, sessions);
}

[[nodiscard]] inline std::vector<double> radiation_linear_optimal(const Constraints& constraints, int sessions) {
    std::vector<double> caps;
    std::vector<double> gammas;
    for (const auto& o : constraints.oars) {
        caps.push_back(o.bed_cap);
        gammas.push_back(o.gamma);
    }
    return radiation_linear_optimal(caps, gammas, constraints.dose_max, sessions);
}

struct StructureCheck {
    bool pass = true;
    int first_violation = 0;  // 1-based session index of the first violating entry, 0 when passing
    std::string_view what;    // "dose" or "chemo"
};

/// Doses must be non-increasing; chemo non-increasing (front-loaded) or
/// non-decreasing (back-loaded). Indeterminate regimes only check doses.
[[nodiscard]] inline StructureCheck verify_monotone_structure(const TreatmentSchedule& schedule, ChemoRegime regime,
                                                              double tolerance) {
    const auto& d = schedule.doses;
    for (size_t i = 1; i < d.size(); ++i) {
        if (d[i] > d[i - 1] + tolerance) return {false, static_cast<int>(i + 1), "dose"};
    }
    const auto& c = schedule.chemo;
    for (size_t i = 1; i < c.size(); ++i) {
        const bool bad = (regime == ChemoRegime::FrontLoaded && c[i] > c[i - 1] + tolerance) ||
                         (regime == ChemoRegime::BackLoaded && c[i] + tolerance < c[i - 1]);
        if (bad) return {false, static_cast<int>(i + 1), "chemo"};
    }
    return {};
}

[[nodiscard]] inline bool verify_budget_exhaustion(const TreatmentSchedule& schedule, const Constraints& constraints,
                                                   double tolerance) {
    double total = 0.0;
    for (double c : schedule.chemo) total += c;
    return std::abs(total - constraints.chemo_budget) <= tolerance;
}

}  // namespace crt
