#pragma once

#include "crt/errors.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace crt {

inline constexpr double kLn2 = std::numbers::ln2;

/// Absolute tolerance (Gy) used by every constraint comparison.
inline constexpr double kConstraintTol = 1e-9;

/// Daily radiation doses (Gy) and drug concentrations (mg/m^2), one entry per session.
struct TreatmentSchedule {
    std::vector<double> doses;
    std::vector<double> chemo;

    [[nodiscard]] int sessions() const { return static_cast<int>(doses.size()); }

    [[nodiscard]] static TreatmentSchedule zeros(int n) {
        return {std::vector<double>(static_cast<size_t>(n), 0.0),
                std::vector<double>(static_cast<size_t>(n), 0.0)};
    }

    void validate() const {
        if (doses.size() != chemo.size()) {
            throw InvalidArgument("schedule dose and chemo vectors differ in length");
        }
        for (size_t i = 0; i < doses.size(); ++i) {
            if (!(doses[i] >= 0.0) || !(chemo[i] >= 0.0)) {
                throw InvalidArgument("schedule entry " + std::to_string(i + 1) + " is negative");
            }
        }
    }

    bool operator==(const TreatmentSchedule&) const = default;
};

/// Linear-quadratic and chemo sensitivities of the primary tumor plus its growth kinetics.
struct TumorParams {
    double alpha = 0.0;    // Gy^-1
    double beta = 0.0;     // Gy^-2
    double theta = 0.0;    // m^2/mg, additive chemo kill
    double psi = 0.0;      // m^2/(mg Gy), radio-sensitization
    double tau_d = 1.0;    // doubling time, days
    double kickoff = 0.0;  // repopulation kick-off time T_k, days
    double x0 = 1.0;       // initial cell count
    double xi = 0.0;       // fractal exponent of the seeding rate

    [[nodiscard]] double repop_rate() const { return kLn2 / tau_d; }

    /// (ln2/tau_d)(t - T_k)^+
    [[nodiscard]] double repopulation(double t) const {
        return t > kickoff ? repop_rate() * (t - kickoff) : 0.0;
    }

    void validate(int sessions) const {
        if (!(alpha >= 0 && beta >= 0 && theta >= 0 && psi >= 0)) {
            throw InvalidArgument("tumor sensitivities alpha, beta, theta, psi must be >= 0");
        }
        if (!(tau_d > 0)) throw InvalidArgument("tumor doubling time must be > 0");
        if (!(x0 > 0)) throw InvalidArgument("initial tumor population must be > 0");
        if (!(xi >= 0 && xi <= 1)) throw InvalidArgument("fractal exponent xi must lie in [0,1]");
        if (!(kickoff < sessions)) {
            throw InvalidArgument("kick-off time must be smaller than the number of sessions");
        }
    }
};

/// A distant site metastatic cells may colonize.
struct MetastaticSite {
    std::string name;
    double p = 0.0;      // colonization probability
    double mu = 0.0;     // net growth rate, day^-1
    double omega = 0.0;  // chemo-induced growth-rate reduction, m^2/(mg day)
};

inline void validate_sites(const std::vector<MetastaticSite>& sites) {
    if (sites.empty()) throw InvalidArgument("at least one metastatic site is required");
    double total = 0.0;
    for (const auto& s : sites) {
        if (!(s.p >= 0 && s.p <= 1)) throw InvalidArgument("site '" + s.name + "': p outside [0,1]");
        if (!(s.mu > 0)) throw InvalidArgument("site '" + s.name + "': mu must be > 0");
        if (!(s.omega >= 0)) throw InvalidArgument("site '" + s.name + "': omega must be >= 0");
        total += s.p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw InvalidArgument("site probabilities sum to " + std::to_string(total) + ", expected 1");
    }
}

/// Low-dose-rate brachytherapy boost following the external-beam course.
struct Brachytherapy {
    int rest_days = 0;     // N_r
    int days = 0;          // N_b
    double rate = 0.0;     // R, Gy/day
    double e_g = 1.0;      // dose-gradient factor
    double sigma = 1.0;    // sublethal repair rate, day^-1

    /// Log-kill per brachytherapy day for radio-sensitivities (alpha, beta).
    [[nodiscard]] double daily_log_kill(double alpha, double beta) const {
        return e_g * rate * (alpha + 2.0 * beta * rate / sigma);
    }
};

struct Horizon {
    int sessions = 0;  // N
    double T = 0.0;    // evaluation time, days
    std::optional<Brachytherapy> brachy;

    void validate() const {
        if (sessions <= 0) throw InvalidArgument("number of sessions must be positive");
        if (!(T > sessions)) throw InvalidArgument("horizon T must exceed the number of sessions");
        if (brachy) {
            if (brachy->rest_days < 0 || brachy->days < 0) {
                throw InvalidArgument("brachytherapy day counts must be >= 0");
            }
            if (sessions + brachy->rest_days + brachy->days > T) {
                throw InvalidArgument("brachytherapy extends past the horizon");
            }
            if (!(brachy->sigma > 0) || !(brachy->rate >= 0) || !(brachy->e_g >= 0)) {
                throw InvalidArgument("brachytherapy rate/e_g must be >= 0 and sigma > 0");
            }
        }
    }
};

/// Organ-at-risk BED cap for a structure receiving gamma * d per fraction.
struct OarConstraint {
    std::string name;
    double gamma = 1.0;
    double ab_ratio = 1.0;  // Gy
    double bed_cap = 0.0;   // Gy
};

struct Constraints {
    std::vector<OarConstraint> oars;
    double tumor_ab_ratio = 10.0;  // Gy
    double bed_std = 0.0;          // tumor BED of the reference regimen, Gy
    double varrho = 0.0;           // required fraction of bed_std
    double chemo_budget = 0.0;     // C_max, mg/m^2
    double chemo_max = 0.0;        // c_max, mg/m^2 per session
    double dose_max = 0.0;         // d_max, Gy per session

    [[nodiscard]] double tumor_bed_floor() const { return varrho * bed_std; }

    void validate(int sessions) const {
        for (const auto& o : oars) {
            if (!(o.gamma > 0 && o.gamma <= 1)) {
                throw InvalidArgument("OAR '" + o.name + "': sparing factor outside (0,1]");
            }
            if (!(o.ab_ratio > 0)) throw InvalidArgument("OAR '" + o.name + "': ab_ratio must be > 0");
            if (!(o.bed_cap > 0)) throw InvalidArgument("OAR '" + o.name + "': BED cap must be > 0");
        }
        if (!(tumor_ab_ratio > 0)) throw InvalidArgument("tumor ab_ratio must be > 0");
        if (!(varrho >= 0 && varrho <= 1)) throw InvalidArgument("varrho must lie in [0,1]");
        if (!(bed_std >= 0)) throw InvalidArgument("reference tumor BED must be >= 0");
        if (!(dose_max > 0)) throw InvalidArgument("daily dose cap must be > 0");
        if (!(chemo_max > 0)) throw InvalidArgument("daily chemo cap must be > 0");
        if (!(chemo_budget >= 0)) throw InvalidArgument("chemo budget must be >= 0");
        if (!(chemo_budget < sessions * chemo_max)) {
            throw InvalidArgument("chemo budget must be below sessions * daily chemo cap");
        }
    }
};

/// Radio-sensitivities in effect at one session.
struct Sensitivity {
    double alpha = 0.0;
    double beta = 0.0;
    bool operator==(const Sensitivity&) const = default;
};

}  // namespace crt
