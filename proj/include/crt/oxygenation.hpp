#pragma once

#include "crt/errors.hpp"
#include "crt/model.hpp"
#include "crt/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace crt {

/// Oxygen-enhancement-ratio model of radio-sensitivity plus the linear
/// radius-to-pressure relation of a spherical tumor.
struct OxygenModel {
    double alpha_max = 0.0;  // Gy^-1, well-oxygenated
    double beta_max = 0.0;   // Gy^-2, well-oxygenated
    double oer_alpha = 1.0;
    double oer_beta = 1.0;
    double K = 1.0;       // mmHg
    double y_max = 0.0;   // mmHg
    double iota = 0.0;    // mmHg per unit radius
    double rho = 1.0;     // cells per unit volume

    /// Radius of a sphere holding `cells` at density rho.
    [[nodiscard]] double radius(double cells) const { return std::cbrt(3.0 * cells / (4.0 * std::numbers::pi * rho)); }

    void validate(double x0) const {
        if (!(alpha_max >= 0 && beta_max >= 0)) throw InvalidArgument("oxygen model: alpha_max, beta_max must be >= 0");
        if (!(oer_alpha >= 1 && oer_beta >= 1)) throw InvalidArgument("oxygen model: OER values must be >= 1");
        if (!(K > 0)) throw InvalidArgument("oxygen model: K must be > 0");
        if (!(rho > 0)) throw InvalidArgument("oxygen model: rho must be > 0");
        if (!(iota >= 0)) throw InvalidArgument("oxygen model: iota must be >= 0");
        if (y_max - iota * radius(x0) < 0) {
            throw InvalidArgument("oxygen model: initial oxygen pressure is negative");
        }
    }
};

[[nodiscard]] inline Sensitivity sensitivities_at_pressure(double y, const OxygenModel& m) {
    if (!(y >= 0)) throw InvalidArgument("sensitivities_at_pressure: pressure must be >= 0");
    const double ra = (y * m.oer_alpha + m.K) / (y + m.K);
    const double rb = (y * m.oer_beta + m.K) / (y + m.K);
    return {m.alpha_max / m.oer_alpha * ra, m.beta_max / (m.oer_beta * m.oer_beta) * rb * rb};
}

/// Average oxygen pressure before session t given the cumulative log-kill of
/// the sessions before it; clamped to [0, y_max].
[[nodiscard]] inline double oxygen_pressure(double cum_effect, int t, const TumorParams& params, const OxygenModel& m) {
    const double shrink = std::exp(-cum_effect / 3.0 + params.repopulation(t) / 3.0);
    const double y = m.y_max - m.iota * m.radius(params.x0) * shrink;
    return std::clamp(y, 0.0, m.y_max);
}

/// Realized (alpha_t, beta_t) along a schedule: session t uses the pressure
/// produced by sessions 1..t-1.
[[nodiscard]] inline std::vector<Sensitivity> sensitivity_path(const TreatmentSchedule& schedule,
                                                               const TumorParams& params, const OxygenModel& m) {
    schedule.validate();
    std::vector<Sensitivity> path;
    path.reserve(schedule.doses.size());
    double cum = 0.0;
    for (size_t i = 0; i < schedule.doses.size(); ++i) {
        const auto s = sensitivities_at_pressure(oxygen_pressure(cum, static_cast<int>(i + 1), params, m), m);
        path.push_back(s);
        cum += session_log_kill(schedule.doses[i], schedule.chemo[i], s, params);
    }
    return path;
}

}  // namespace crt
