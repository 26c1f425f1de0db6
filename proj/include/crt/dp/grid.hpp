#pragma once

#include "crt/errors.hpp"
#include "crt/types.hpp"

#include <cmath>
#include <string>

namespace crt::dp {

/// Discretization of the per-session dose and drug decisions.
struct Grid {
    double d_step = 0.1;  // Gy
    double c_step = 500;  // mg/m^2
};

namespace detail {

/// Number of steps `x / step`, or -1 when x is not an integer multiple of step.
[[nodiscard]] inline long steps_of(double x, double step) {
    const double r = x / step;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-9 * std::max(1.0, std::abs(r))) return -1;
    return static_cast<long>(n);
}

}  // namespace detail

/// Physical value of grid index k. Divides by 1/step when that is an integer
/// so that decimal steps print cleanly (33 * 0.1 -> 3.3).
[[nodiscard]] inline double grid_value(long k, double step) {
    const double inv = 1.0 / step;
    const double r = std::round(inv);
    if (r >= 1.0 && std::abs(inv - r) <= 1e-12 * r) return static_cast<double>(k) / r;
    return static_cast<double>(k) * step;
}

/// Integer step counts of the caps on a validated grid.
struct GridUnits {
    int dose_levels = 0;   // d_max / d_step
    int chemo_levels = 0;  // c_max / c_step
    long budget = 0;       // C_max / c_step
};

[[nodiscard]] inline GridUnits grid_units(const Grid& grid, const Constraints& constraints) {
    if (!(grid.d_step > 0) || !(grid.c_step > 0)) {
        throw InvalidArgument("grid steps must be > 0");
    }
    const long nd = detail::steps_of(constraints.dose_max, grid.d_step);
    const long nc = detail::steps_of(constraints.chemo_max, grid.c_step);
    const long nb = detail::steps_of(constraints.chemo_budget, grid.c_step);
    if (nd < 0) throw GridMisaligned("d_max is not a multiple of d_step");
    if (nc < 0) throw GridMisaligned("c_max is not a multiple of c_step");
    if (nb < 0) throw GridMisaligned("C_max is not a multiple of c_step");
    if (nd > 65535 || nc > 65535) throw InvalidArgument("grid has more than 65535 levels per session");
    return {static_cast<int>(nd), static_cast<int>(nc), nb};
}

}  // namespace crt::dp
