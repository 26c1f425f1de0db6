#pragma once

#include "crt/dp/dynamic_solver.hpp"
#include "crt/dp/static_solver.hpp"
#include "crt/oracle.hpp"
#include "crt/scenario.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace crt::test {

/// A small instance the brute-force oracle can enumerate.
struct Instance {
    TumorParams params;
    std::vector<MetastaticSite> sites;
    Horizon horizon;
    Constraints constraints;
    dp::Grid grid;
    std::optional<OxygenModel> oxygen;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random p's summing to one.
inline std::vector<MetastaticSite> random_sites(std::mt19937_64& rng, int n, double theta, bool uniform_zeta) {
    std::vector<double> w(static_cast<size_t>(n));
    double total = 0.0;
    for (auto& x : w) total += (x = uniform(rng, 0.1, 1.0));
    const double zeta = uniform(rng, 0.2, 2.0);
    std::vector<MetastaticSite> sites;
    double used = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = i + 1 == n ? 1.0 - used : w[static_cast<size_t>(i)] / total;
        used += p;
        const double z = uniform_zeta ? zeta : uniform(rng, 0.0, 2.0);
        sites.push_back({"site" + std::to_string(i + 1), p, uniform(rng, 0.05, 0.25), z * theta});
    }
    return sites;
}

/// N sessions, at most three dose levels and two chemo levels.
inline Instance random_small_instance(std::mt19937_64& rng, int N, int n_sites, bool with_oxygen, bool psi_zero) {
    Instance in;
    auto& p = in.params;
    p.alpha = uniform(rng, 0.1, 0.5);
    p.beta = p.alpha / uniform(rng, 2.0, 20.0);
    p.theta = uniform(rng, 0.0, 1.5e-4);
    p.psi = psi_zero ? 0.0 : uniform(rng, 0.0, 2e-4);
    p.tau_d = uniform(rng, 3.0, 6.0);
    p.kickoff = uniform(rng, 0.0, N - 0.5);
    p.x0 = std::pow(10.0, uniform(rng, 3.0, 9.0));
    p.xi = uniform(rng, 0.1, 1.0);
    in.sites = random_sites(rng, n_sites, p.theta, false);
    in.horizon = {N, N + uniform(rng, 5.0, 60.0), std::nullopt};
    if (uniform(rng, 0, 1) < 0.3) in.horizon.brachy = Brachytherapy{1, 1, uniform(rng, 1.0, 5.0), 1.1, 12.0};

    in.grid = {2.5, 1000.0};
    auto& c = in.constraints;
    c.dose_max = uniform(rng, 0, 1) < 0.3 ? 2.5 : 5.0;
    c.chemo_max = 1000.0;
    c.chemo_budget = uniform(rng, 0, 1) < 0.7 ? 1000.0 : 0.0;
    c.tumor_ab_ratio = p.alpha / p.beta;
    c.bed_std = 15.0;
    c.varrho = uniform(rng, 0.0, 0.5);
    c.oars.push_back({"oar", uniform(rng, 0.5, 1.0), uniform(rng, 2.0, 8.0), uniform(rng, 5.0, 25.0)});

    if (with_oxygen) {
        OxygenModel m{p.alpha, p.beta, uniform(rng, 1.0, 3.0), uniform(rng, 1.0, 3.0), 3.28, 26.0, 0.0, 1e8};
        m.iota = uniform(rng, 0.0, 0.95) * m.y_max / m.radius(p.x0);
        in.oxygen = m;
    }
    return in;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

inline std::string config_path(const std::string& name) { return std::string(CRT_CONFIG_DIR) + "/" + name; }

/// The shipped cervical scenario with [alpha/beta], xi and varrho replaced.
/// Caps and the reference BED are re-derived from the standard regimen.
inline Scenario cervical(double ab_ratio, double xi, double varrho) {
    Scenario sc = load_scenario(config_path("cervical.cfg"));
    sc.tumor.beta = sc.tumor.alpha / ab_ratio;
    sc.tumor.xi = xi;
    sc.constraints.tumor_ab_ratio = ab_ratio;
    sc.constraints.bed_std = bed(sc.standard_regimen->doses, ab_ratio);
    sc.constraints.varrho = varrho;
    sc.validate();
    return sc;
}

}  // namespace crt::test
