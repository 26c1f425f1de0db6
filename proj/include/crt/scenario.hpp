#pragma once

#include "crt/calibration.hpp"
#include "crt/closed_form.hpp"
#include "crt/dp/grid.hpp"
#include "crt/dp/table.hpp"
#include "crt/errors.hpp"
#include "crt/model.hpp"
#include "crt/oxygenation.hpp"
#include "crt/types.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace crt {

enum class SolverMode { Static2D, Static3D, Static4D, Dynamic6D, Evaluate };

[[nodiscard]] inline std::string_view to_string(SolverMode m) {
    switch (m) {
        case SolverMode::Static2D: return "2d";
        case SolverMode::Static3D: return "3d";
        case SolverMode::Static4D: return "4d";
        case SolverMode::Dynamic6D: return "6d";
        case SolverMode::Evaluate: return "evaluate";
    }
    return "unknown";
}

[[nodiscard]] inline std::optional<SolverMode> parse_solver_mode(std::string_view s) {
    for (auto m : {SolverMode::Static2D, SolverMode::Static3D, SolverMode::Static4D, SolverMode::Dynamic6D,
                   SolverMode::Evaluate}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

/// Where the chemo vector of a 2d solve comes from.
enum class FixedChemoSource { ClosedForm, Standard, Explicit };

[[nodiscard]] inline std::string_view to_string(FixedChemoSource s) {
    switch (s) {
        case FixedChemoSource::ClosedForm: return "closed_form";
        case FixedChemoSource::Standard: return "standard";
        case FixedChemoSource::Explicit: return "list";
    }
    return "unknown";
}

struct Scenario {
    std::string name;
    TumorParams tumor;
    std::vector<MetastaticSite> sites;
    Horizon horizon;
    Constraints constraints;
    dp::Grid grid;
    std::optional<OxygenModel> oxygen;
    SolverMode mode = SolverMode::Static4D;
    dp::SolveOptions options;
    FixedChemoSource fixed_chemo_source = FixedChemoSource::ClosedForm;
    std::vector<double> fixed_chemo;  // only for FixedChemoSource::Explicit
    std::optional<TreatmentSchedule> standard_regimen;
    std::vector<double> sweep_varrho;

    /// Runs every component check; throws InvalidArgument / GridMisaligned.
    void validate() const {
        horizon.validate();
        const int N = horizon.sessions;
        tumor.validate(N);
        validate_sites(sites);
        constraints.validate(N);
        (void)dp::grid_units(grid, constraints);
        if (oxygen) oxygen->validate(tumor.x0);
        if (mode == SolverMode::Dynamic6D && !oxygen) throw InvalidArgument("mode 6d needs an oxygen section");
        if (mode == SolverMode::Static3D && tumor.psi != 0.0) throw InvalidArgument("mode 3d requires psi = 0");
        if (mode == SolverMode::Evaluate && !standard_regimen) {
            throw InvalidArgument("mode evaluate needs a standard_regimen");
        }
        if (standard_regimen) {
            standard_regimen->validate();
            if (standard_regimen->sessions() != N) {
                throw InvalidArgument("standard_regimen length differs from horizon.sessions");
            }
        }
        if (fixed_chemo_source == FixedChemoSource::Explicit && static_cast<int>(fixed_chemo.size()) != N) {
            throw InvalidArgument("solver.fixed_chemo list length differs from horizon.sessions");
        }
        if (fixed_chemo_source == FixedChemoSource::Standard && mode == SolverMode::Static2D && !standard_regimen) {
            throw InvalidArgument("solver.fixed_chemo = standard needs a standard_regimen");
        }
    }

    /// Chemo vector used by the 2d solver.
    [[nodiscard]] std::vector<double> resolved_fixed_chemo() const {
        switch (fixed_chemo_source) {
            case FixedChemoSource::Explicit: return fixed_chemo;
            case FixedChemoSource::Standard:
                if (!standard_regimen) throw InvalidArgument("fixed_chemo = standard needs a standard_regimen");
                return standard_regimen->chemo;
            case FixedChemoSource::ClosedForm: break;
        }
        return chemo_closed_form(classify_chemo_regime(tumor, sites), constraints, horizon.sessions);
    }
};

namespace detail {

/// yaml-cpp access with "file:line:col: message" diagnostics.
class ConfigReader {
public:
    explicit ConfigReader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
        const auto m = at.Mark();
        if (m.is_null()) throw ConfigError(source_ + ": " + msg);
        throw ConfigError(source_ + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1) + ": " + msg);
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(source_ + ": " + msg); }

    void expect_map(const YAML::Node& n, const std::string& path) const {
        if (!n.IsMap()) fail(n, "'" + path + "' must be a mapping");
    }

    /// Rejects keys outside `allowed`.
    void check_keys(const YAML::Node& n, const std::string& path, std::initializer_list<std::string_view> allowed) const {
        expect_map(n, path);
        for (auto it = n.begin(); it != n.end(); ++it) {
            const auto key = it->first.as<std::string>();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                std::string list;
                for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
                fail(it->first, "unknown key '" + key + "' in '" + path + "' (expected one of: " + list + ")");
            }
        }
    }

    [[nodiscard]] YAML::Node required(const YAML::Node& n, const std::string& key, const std::string& path) const {
        auto v = n[key];
        if (!v) fail(n, "missing key '" + key + "' in '" + path + "'");
        return v;
    }

    [[nodiscard]] double number(const YAML::Node& v, const std::string& path) const {
        if (!v.IsScalar()) fail(v, "'" + path + "' must be a number");
        double x = 0.0;
        try {
            x = v.as<double>();
        } catch (const YAML::Exception&) {
            fail(v, "'" + path + "' must be a number, got '" + v.Scalar() + "'");
        }
        if (!std::isfinite(x)) fail(v, "'" + path + "' must be finite");
        return x;
    }

    [[nodiscard]] double number(const YAML::Node& n, const std::string& key, const std::string& path) const {
        return number(required(n, key, path), path + "." + key);
    }

    [[nodiscard]] double number_or(const YAML::Node& n, const std::string& key, const std::string& path,
                                   double fallback) const {
        return n[key] ? number(n[key], path + "." + key) : fallback;
    }

    [[nodiscard]] int integer(const YAML::Node& v, const std::string& path) const {
        if (!v.IsScalar()) fail(v, "'" + path + "' must be an integer");
        try {
            return v.as<int>();
        } catch (const YAML::Exception&) {
            fail(v, "'" + path + "' must be an integer, got '" + v.Scalar() + "'");
        }
    }

    [[nodiscard]] bool boolean(const YAML::Node& v, const std::string& path) const {
        if (!v.IsScalar()) fail(v, "'" + path + "' must be true or false");
        try {
            return v.as<bool>();
        } catch (const YAML::Exception&) {
            fail(v, "'" + path + "' must be true or false, got '" + v.Scalar() + "'");
        }
    }

    [[nodiscard]] std::string string(const YAML::Node& v, const std::string& path) const {
        if (!v.IsScalar()) fail(v, "'" + path + "' must be a string");
        return v.Scalar();
    }

    [[nodiscard]] std::vector<double> numbers(const YAML::Node& v, const std::string& path) const {
        if (!v.IsSequence()) fail(v, "'" + path + "' must be a list of numbers");
        std::vector<double> out;
        for (size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

    /// A per-session vector: a list of N values, a scalar repeated N times, or
    /// {dose: x, on: [sessions...]} with zeros elsewhere.
    [[nodiscard]] std::vector<double> session_vector(const YAML::Node& v, const std::string& path, int sessions) const {
        if (v.IsScalar()) return std::vector<double>(static_cast<size_t>(sessions), number(v, path));
        if (v.IsSequence()) {
            auto out = numbers(v, path);
            if (static_cast<int>(out.size()) != sessions) {
                fail(v, "'" + path + "' has " + std::to_string(out.size()) + " entries, expected " +
                            std::to_string(sessions));
            }
            return out;
        }
        check_keys(v, path, {"dose", "on"});
        const double dose = number(v, "dose", path);
        const auto on = required(v, "on", path);
        if (!on.IsSequence()) fail(on, "'" + path + ".on' must be a list of session numbers");
        std::vector<double> out(static_cast<size_t>(sessions), 0.0);
        for (size_t i = 0; i < on.size(); ++i) {
            const int s = integer(on[i], path + ".on");
            if (s < 1 || s > sessions) fail(on[i], "session " + std::to_string(s) + " outside 1.." + std::to_string(sessions));
            out[static_cast<size_t>(s - 1)] = dose;
        }
        return out;
    }

    [[nodiscard]] const std::string& source() const { return source_; }

private:
    std::string source_;
};

[[nodiscard]] inline YAML::Node load_yaml(const std::string& text, const std::string& source) {
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                          ": " + e.msg);
    }
}

}  // namespace detail

/// Parses a scenario from YAML text. Unknown keys, missing keys and
/// inconsistent values raise ConfigError with the source position.
[[nodiscard]] inline Scenario parse_scenario(const std::string& text, const std::string& source = "<config>") {
    detail::ConfigReader r(source);
    const YAML::Node root = detail::load_yaml(text, source);
    if (!root.IsMap()) r.fail(root, "top level must be a mapping");
    r.check_keys(root, "<root>",
                 {"name", "tumor", "sites", "horizon", "constraints", "grid", "solver", "oxygen", "standard_regimen",
                  "sweep"});

    Scenario sc;
    if (root["name"]) sc.name = r.string(root["name"], "name");

    // tumor
    const auto tu = r.required(root, "tumor", "<root>");
    r.check_keys(tu, "tumor", {"alpha", "beta", "ab_ratio", "theta", "psi", "tau_d", "kickoff", "x0", "xi"});
    sc.tumor.alpha = r.number(tu, "alpha", "tumor");
    if (tu["beta"] && tu["ab_ratio"]) r.fail(tu["ab_ratio"], "give either tumor.beta or tumor.ab_ratio, not both");
    std::optional<double> tumor_ab;
    if (tu["ab_ratio"]) {
        tumor_ab = r.number(tu["ab_ratio"], "tumor.ab_ratio");
        if (!(*tumor_ab > 0)) r.fail(tu["ab_ratio"], "tumor.ab_ratio must be > 0");
        sc.tumor.beta = sc.tumor.alpha / *tumor_ab;
    } else {
        sc.tumor.beta = r.number(tu, "beta", "tumor");
        if (sc.tumor.beta > 0) tumor_ab = sc.tumor.alpha / sc.tumor.beta;
    }
    sc.tumor.theta = r.number_or(tu, "theta", "tumor", 0.0);
    sc.tumor.psi = r.number_or(tu, "psi", "tumor", 0.0);
    sc.tumor.tau_d = r.number(tu, "tau_d", "tumor");
    sc.tumor.kickoff = r.number_or(tu, "kickoff", "tumor", 0.0);
    sc.tumor.x0 = r.number(tu, "x0", "tumor");
    sc.tumor.xi = r.number(tu, "xi", "tumor");
    if (!(sc.tumor.tau_d > 0)) r.fail(tu["tau_d"], "tumor.tau_d must be > 0");

    // sites
    const auto si = r.required(root, "sites", "<root>");
    if (!si.IsSequence() || si.size() == 0) r.fail(si, "'sites' must be a non-empty list");
    for (size_t i = 0; i < si.size(); ++i) {
        const auto n = si[i];
        const std::string path = "sites[" + std::to_string(i) + "]";
        r.check_keys(n, path, {"name", "p", "mu", "omega", "zeta"});
        MetastaticSite s;
        s.name = n["name"] ? r.string(n["name"], path + ".name") : "site" + std::to_string(i + 1);
        s.p = r.number(n, "p", path);
        s.mu = r.number_or(n, "mu", path, sc.tumor.repop_rate());
        if (n["omega"] && n["zeta"]) r.fail(n["zeta"], "give either omega or zeta, not both");
        s.omega = n["omega"] ? r.number(n["omega"], path + ".omega") : r.number_or(n, "zeta", path, 1.0) * sc.tumor.theta;
        sc.sites.push_back(s);
    }

    // horizon
    const auto ho = r.required(root, "horizon", "<root>");
    r.check_keys(ho, "horizon", {"sessions", "T", "brachytherapy"});
    sc.horizon.sessions = r.integer(r.required(ho, "sessions", "horizon"), "horizon.sessions");
    sc.horizon.T = r.number(ho, "T", "horizon");
    if (sc.horizon.sessions <= 0) r.fail(ho["sessions"], "horizon.sessions must be positive");
    if (const auto b = ho["brachytherapy"]) {
        r.check_keys(b, "horizon.brachytherapy", {"rest_days", "days", "rate", "e_g", "sigma"});
        Brachytherapy br;
        br.rest_days = r.integer(r.required(b, "rest_days", "horizon.brachytherapy"), "horizon.brachytherapy.rest_days");
        br.days = r.integer(r.required(b, "days", "horizon.brachytherapy"), "horizon.brachytherapy.days");
        br.rate = r.number(b, "rate", "horizon.brachytherapy");
        br.e_g = r.number_or(b, "e_g", "horizon.brachytherapy", 1.0);
        br.sigma = r.number(b, "sigma", "horizon.brachytherapy");
        sc.horizon.brachy = br;
    }
    const int N = sc.horizon.sessions;

    // standard regimen (needed for default caps)
    if (const auto st = root["standard_regimen"]) {
        r.check_keys(st, "standard_regimen", {"doses", "chemo"});
        TreatmentSchedule s;
        s.doses = r.session_vector(r.required(st, "doses", "standard_regimen"), "standard_regimen.doses", N);
        s.chemo = st["chemo"] ? r.session_vector(st["chemo"], "standard_regimen.chemo", N)
                              : std::vector<double>(static_cast<size_t>(N), 0.0);
        for (size_t i = 0; i < s.doses.size(); ++i) {
            if (s.doses[i] < 0 || s.chemo[i] < 0) r.fail(st, "standard_regimen entries must be >= 0");
        }
        sc.standard_regimen = s;
    }

    // constraints
    const auto co = r.required(root, "constraints", "<root>");
    r.check_keys(co, "constraints",
                 {"oars", "tumor_ab_ratio", "bed_std", "varrho", "chemo_budget", "chemo_max", "dose_max"});
    auto& c = sc.constraints;
    if (co["tumor_ab_ratio"]) {
        c.tumor_ab_ratio = r.number(co["tumor_ab_ratio"], "constraints.tumor_ab_ratio");
    } else if (tumor_ab) {
        c.tumor_ab_ratio = *tumor_ab;
    } else {
        r.fail(co, "constraints.tumor_ab_ratio is required when tumor.beta = 0");
    }
    if (!(c.tumor_ab_ratio > 0)) r.fail(co, "constraints.tumor_ab_ratio must be > 0");
    auto need_standard = [&](const YAML::Node& at, const std::string& what) {
        if (!sc.standard_regimen) r.fail(at, what + " is missing and there is no standard_regimen to derive it from");
    };
    if (const auto oars = co["oars"]) {
        if (!oars.IsSequence()) r.fail(oars, "'constraints.oars' must be a list");
        for (size_t i = 0; i < oars.size(); ++i) {
            const auto n = oars[i];
            const std::string path = "constraints.oars[" + std::to_string(i) + "]";
            r.check_keys(n, path, {"name", "gamma", "ab_ratio", "bed_cap"});
            OarConstraint o;
            o.name = n["name"] ? r.string(n["name"], path + ".name") : "oar" + std::to_string(i + 1);
            o.gamma = r.number(n, "gamma", path);
            o.ab_ratio = r.number(n, "ab_ratio", path);
            if (!(o.ab_ratio > 0)) r.fail(n["ab_ratio"], path + ".ab_ratio must be > 0");
            if (n["bed_cap"]) {
                o.bed_cap = r.number(n["bed_cap"], path + ".bed_cap");
            } else {
                need_standard(n, path + ".bed_cap");
                o.bed_cap = oar_bed(sc.standard_regimen->doses, o.gamma, o.ab_ratio);
            }
            c.oars.push_back(o);
        }
    }
    if (co["bed_std"]) {
        c.bed_std = r.number(co["bed_std"], "constraints.bed_std");
    } else {
        need_standard(co, "constraints.bed_std");
        c.bed_std = bed(sc.standard_regimen->doses, c.tumor_ab_ratio);
    }
    c.varrho = r.number_or(co, "varrho", "constraints", 0.0);
    c.chemo_budget = r.number_or(co, "chemo_budget", "constraints", 0.0);
    c.chemo_max = r.number(co, "chemo_max", "constraints");
    c.dose_max = r.number(co, "dose_max", "constraints");

    // grid
    const auto gr = r.required(root, "grid", "<root>");
    r.check_keys(gr, "grid", {"d_step", "c_step"});
    sc.grid.d_step = r.number(gr, "d_step", "grid");
    sc.grid.c_step = r.number(gr, "c_step", "grid");
    if (!(sc.grid.d_step > 0)) r.fail(gr["d_step"], "grid.d_step must be > 0 (empty dose grid)");
    if (!(sc.grid.c_step > 0)) r.fail(gr["c_step"], "grid.c_step must be > 0 (empty chemo grid)");

    // solver
    if (const auto so = root["solver"]) {
        r.check_keys(so, "solver",
                     {"mode", "threads", "prune_dominated", "prune_budget", "prune_bound", "fixed_chemo"});
        if (so["mode"]) {
            const auto m = parse_solver_mode(r.string(so["mode"], "solver.mode"));
            if (!m) r.fail(so["mode"], "solver.mode must be one of 2d, 3d, 4d, 6d, evaluate");
            sc.mode = *m;
        }
        if (so["threads"]) {
            sc.options.threads = r.integer(so["threads"], "solver.threads");
            if (sc.options.threads < 1) r.fail(so["threads"], "solver.threads must be >= 1");
        }
        if (so["prune_dominated"]) sc.options.prune_dominated = r.boolean(so["prune_dominated"], "solver.prune_dominated");
        if (so["prune_budget"]) sc.options.prune_budget = r.boolean(so["prune_budget"], "solver.prune_budget");
        if (so["prune_bound"]) sc.options.prune_bound = r.boolean(so["prune_bound"], "solver.prune_bound");
        if (const auto fc = so["fixed_chemo"]) {
            if (fc.IsScalar()) {
                const auto v = fc.Scalar();
                if (v == "closed_form") {
                    sc.fixed_chemo_source = FixedChemoSource::ClosedForm;
                } else if (v == "standard") {
                    sc.fixed_chemo_source = FixedChemoSource::Standard;
                } else {
                    r.fail(fc, "solver.fixed_chemo must be closed_form, standard, or a per-session list");
                }
            } else {
                sc.fixed_chemo_source = FixedChemoSource::Explicit;
                sc.fixed_chemo = r.session_vector(fc, "solver.fixed_chemo", N);
            }
        }
    }

    // oxygen
    if (const auto ox = root["oxygen"]) {
        r.check_keys(ox, "oxygen", {"alpha_max", "beta_max", "oer_alpha", "oer_beta", "K", "y_max", "iota", "rho"});
        OxygenModel m;
        m.alpha_max = r.number_or(ox, "alpha_max", "oxygen", sc.tumor.alpha);
        m.beta_max = r.number_or(ox, "beta_max", "oxygen", sc.tumor.beta);
        m.oer_alpha = r.number(ox, "oer_alpha", "oxygen");
        m.oer_beta = r.number(ox, "oer_beta", "oxygen");
        m.K = r.number(ox, "K", "oxygen");
        m.y_max = r.number(ox, "y_max", "oxygen");
        m.iota = r.number(ox, "iota", "oxygen");
        m.rho = r.number(ox, "rho", "oxygen");
        sc.oxygen = m;
    }

    if (const auto sw = root["sweep"]) {
        r.check_keys(sw, "sweep", {"varrho"});
        sc.sweep_varrho = r.numbers(r.required(sw, "varrho", "sweep"), "sweep.varrho");
    }

    try {
        sc.validate();
    } catch (const Error& e) {
        r.fail(e.what());
    }
    return sc;
}

/// Inputs of the calibrate command.
struct KappaInput {
    double tcp_rt = 0.0;
    double tcp_crt = 0.0;
    double c_cis = 0.0;       // mg/m^2
    double total_dose = 0.0;  // Gy
};

struct CalibrationInput {
    std::optional<KappaInput> kappa;
    std::optional<std::pair<TrialRecord, TrialRecord>> theta_psi;
};

[[nodiscard]] inline CalibrationInput parse_calibration(const std::string& text,
                                                        const std::string& source = "<calibration>") {
    detail::ConfigReader r(source);
    const YAML::Node root = detail::load_yaml(text, source);
    if (!root.IsMap()) r.fail(root, "top level must be a mapping");
    r.check_keys(root, "<root>", {"kappa", "theta_psi"});
    CalibrationInput in;
    if (const auto k = root["kappa"]) {
        r.check_keys(k, "kappa", {"tcp_rt", "tcp_crt", "chemo", "total_dose"});
        in.kappa = KappaInput{r.number(k, "tcp_rt", "kappa"), r.number(k, "tcp_crt", "kappa"),
                              r.number(k, "chemo", "kappa"), r.number(k, "total_dose", "kappa")};
    }
    if (const auto tp = root["theta_psi"]) {
        r.check_keys(tp, "theta_psi", {"trials"});
        const auto trials = r.required(tp, "trials", "theta_psi");
        if (!trials.IsSequence() || trials.size() != 2) r.fail(trials, "'theta_psi.trials' must list exactly two trials");
        TrialRecord rec[2];
        for (size_t i = 0; i < 2; ++i) {
            const auto n = trials[i];
            const std::string path = "theta_psi.trials[" + std::to_string(i) + "]";
            r.check_keys(n, path, {"sessions", "doses", "chemo", "tcp_rt", "tcp_crt"});
            const int sessions = r.integer(r.required(n, "sessions", path), path + ".sessions");
            if (sessions <= 0) r.fail(n["sessions"], path + ".sessions must be positive");
            rec[i].doses = r.session_vector(r.required(n, "doses", path), path + ".doses", sessions);
            rec[i].chemo = r.session_vector(r.required(n, "chemo", path), path + ".chemo", sessions);
            rec[i].tcp_rt = r.number(n, "tcp_rt", path);
            rec[i].tcp_crt = r.number(n, "tcp_crt", path);
        }
        in.theta_psi = std::make_pair(rec[0], rec[1]);
    }
    if (!in.kappa && !in.theta_psi) r.fail(root, "calibration input needs a 'kappa' or 'theta_psi' section");
    return in;
}

[[nodiscard]] inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[nodiscard]] inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_text_file(path), path); }

}  // namespace crt
