#pragma once

#include "crt/errors.hpp"
#include "crt/model.hpp"
#include "crt/types.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace crt {

struct RiskIntegral {
    double during = 0.0;  // over [0, N+1)
    double post = 0.0;    // over [N+1, T]
    [[nodiscard]] double total() const { return during + post; }
};

namespace detail {

inline constexpr double kQuadratureTol = 1e-8;

template <typename F>
[[nodiscard]] double integrate_checked(F&& f, double a, double b) {
    if (!(b > a)) return 0.0;
    double error = 0.0;
    double l1 = 0.0;
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, kQuadratureTol, &error, &l1);
    if (!std::isfinite(value) || error > kQuadratureTol * std::max(l1, 1e-300)) {
        throw QuadratureError("quadrature over [" + std::to_string(a) + ", " + std::to_string(b) +
                              "] did not converge (error estimate " + std::to_string(error) + ")");
    }
    return value;
}

}  // namespace detail

/// Expected metastatic burden at T (per nu), integrated directly: the seeding
/// rate X_t^xi at every time t, grown at each site with the chemo-dependent
/// rate mu_i - omega_i c_{floor(t)} until the end of treatment and mu_i after.
/// Independent of the summation used by the optimizer.
[[nodiscard]] inline RiskIntegral risk_quadrature(const TreatmentSchedule& schedule,
                                                  const std::vector<MetastaticSite>& sites,
                                                  const TumorParams& params, const Horizon& horizon,
                                                  SensitivityPath path = {}) {
    schedule.validate();
    horizon.validate();
    const int N = horizon.sessions;
    if (schedule.sessions() != N) throw InvalidArgument("risk_quadrature: schedule length differs from sessions");
    const double T = horizon.T;

    // suffix[k] = c_k + ... + c_N (1-based), suffix[N+1] = 0
    std::vector<double> suffix(static_cast<size_t>(N + 2), 0.0);
    for (int k = N; k >= 1; --k) {
        suffix[static_cast<size_t>(k)] = suffix[static_cast<size_t>(k + 1)] + schedule.chemo[static_cast<size_t>(k - 1)];
    }
    auto chemo_on = [&](int k) { return k >= 1 && k <= N ? schedule.chemo[static_cast<size_t>(k - 1)] : 0.0; };

    auto seeding = [&](double t) { return std::pow(tumor_population(t, schedule, params, horizon, path), params.xi); };

    // Breakpoints where the integrand has kinks: integer days, the kick-off
    // time and the brachytherapy boundaries.
    auto pieces = [&](double a, double b) {
        std::vector<double> cuts{a, b};
        if (params.kickoff > a && params.kickoff < b) cuts.push_back(params.kickoff);
        if (horizon.brachy) {
            const double start = N + static_cast<double>(horizon.brachy->rest_days);
            for (double x : {start, start + horizon.brachy->days}) {
                if (x > a && x < b) cuts.push_back(x);
            }
        }
        std::sort(cuts.begin(), cuts.end());
        return cuts;
    };

    RiskIntegral out;
    for (const auto& site : sites) {
        if (site.p <= 0.0) continue;
        for (int k = 0; k <= N; ++k) {
            const double ck = chemo_on(k);
            const double later = suffix[static_cast<size_t>(k + 1)];
            auto f = [&](double t) {
                const double growth = site.mu * (T - t) - site.omega * (ck * (k + 1 - t) + later);
                return site.p * seeding(t) * std::exp(growth);
            };
            const auto cuts = pieces(k, std::min<double>(k + 1, T));
            for (size_t i = 0; i + 1 < cuts.size(); ++i) out.during += detail::integrate_checked(f, cuts[i], cuts[i + 1]);
        }
        auto g = [&](double t) { return site.p * seeding(t) * std::exp(site.mu * (T - t)); };
        const auto cuts = pieces(N + 1.0, T);
        for (size_t i = 0; i + 1 < cuts.size(); ++i) out.post += detail::integrate_checked(g, cuts[i], cuts[i + 1]);
    }
    return out;
}

}  // namespace crt
