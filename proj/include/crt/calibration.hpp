#pragma once

#include "crt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace crt {

namespace detail {

inline void check_probability(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument(std::string(what) + " must lie in (0,1)");
}

/// -ln(ln TCP_CRT / ln TCP_RT): the log-kill the drug adds on top of radiation.
[[nodiscard]] inline double chemo_log_kill(double tcp_rt, double tcp_crt) {
    check_probability(tcp_rt, "tcp_rt");
    check_probability(tcp_crt, "tcp_crt");
    return -std::log(std::log(tcp_crt) / std::log(tcp_rt));
}

}  // namespace detail

/// Radio-sensitization coefficient from a pair of trials with and without a
/// concurrent drug: kappa = -ln(ln TCP_CRT / ln TCP_RT) / (c * D).
[[nodiscard]] inline double estimate_kappa(double tcp_rt, double tcp_crt, double c_cis, double total_dose) {
    const double rhs = detail::chemo_log_kill(tcp_rt, tcp_crt);
    if (!(c_cis > 0.0) || !(total_dose > 0.0)) {
        throw InvalidArgument("estimate_kappa: drug concentration and total dose must be > 0");
    }
    if (tcp_crt < tcp_rt) throw InvalidArgument("estimate_kappa: tcp_crt must not be below tcp_rt");
    return rhs / (c_cis * total_dose);
}

/// One arm pair of a chemoradiotherapy trial.
struct TrialRecord {
    std::vector<double> doses;  // Gy per session
    std::vector<double> chemo;  // mg/m^2 per session
    double tcp_rt = 0.0;
    double tcp_crt = 0.0;
};

struct ThetaPsiEstimate {
    double theta = 0.0;
    double psi = 0.0;
    double condition = 0.0;             // 2-norm condition number of the system
    std::vector<std::string> warnings;  // e.g. negative estimates, kept unclamped
};

inline constexpr double kMaxCondition = 1e12;

/// Solves theta * sum(c) + psi * sum(d c) = -ln(ln TCP_CRT / ln TCP_RT) for two trials.
[[nodiscard]] inline ThetaPsiEstimate estimate_theta_psi(const TrialRecord& first, const TrialRecord& second) {
    double a[2][2];
    double b[2];
    const TrialRecord* trials[2] = {&first, &second};
    for (int m = 0; m < 2; ++m) {
        const auto& tr = *trials[m];
        if (tr.doses.size() != tr.chemo.size()) {
            throw InvalidArgument("trial " + std::to_string(m + 1) + ": dose and chemo vectors differ in length");
        }
        double sc = 0.0;
        double sdc = 0.0;
        for (size_t i = 0; i < tr.doses.size(); ++i) {
            sc += tr.chemo[i];
            sdc += tr.doses[i] * tr.chemo[i];
        }
        a[m][0] = sc;
        a[m][1] = sdc;
        b[m] = detail::chemo_log_kill(tr.tcp_rt, tr.tcp_crt);
    }

    // Singular values of a 2x2 matrix from its Frobenius norm and determinant.
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const double fro2 = a[0][0] * a[0][0] + a[0][1] * a[0][1] + a[1][0] * a[1][0] + a[1][1] * a[1][1];
    const double disc = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * det * det));
    const double s_max = std::sqrt((fro2 + disc) / 2.0);
    const double s_min = std::abs(det) / std::max(s_max, 1e-300);
    ThetaPsiEstimate out;
    out.condition = s_min > 0.0 ? s_max / s_min : std::numeric_limits<double>::infinity();
    if (!(out.condition <= kMaxCondition)) {
        throw SingularSystem("estimate_theta_psi: trial system is singular (condition number " +
                             std::to_string(out.condition) + ")");
    }
    out.theta = (b[0] * a[1][1] - b[1] * a[0][1]) / det;
    out.psi = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
    if (out.theta < 0.0) out.warnings.emplace_back("theta estimate is negative");
    if (out.psi < 0.0) out.warnings.emplace_back("psi estimate is negative");
    return out;
}

}  // namespace crt
