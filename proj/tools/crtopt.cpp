// crtopt: command-line driver for the chemoradiotherapy schedule optimizer.

#include "crt/calibration.hpp"
#include "crt/errors.hpp"
#include "crt/experiment.hpp"
#include "crt/report.hpp"
#include "crt/scenario.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kInfeasible = 3, kInternalError = 4 };

struct Options {
    std::string config;
    std::string out = ".";
    std::string mode;
    std::vector<double> varrho;
    int threads = 0;
    std::string schedule;
    std::string calendar_start;
};

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("crtopt");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("CRT_LOG_LEVEL")) {
        const auto lvl = spdlog::level::from_str(env);
        // from_str maps unknown names to "off"
        if (lvl == spdlog::level::off && std::string(env) != "off") {
            spdlog::warn("CRT_LOG_LEVEL='{}' not recognized, using info", env);
        } else {
            spdlog::set_level(lvl);
        }
    }
}

crt::Scenario load(const Options& o) {
    auto sc = crt::load_scenario(o.config);
    try {
        if (!o.mode.empty()) {
            const auto m = crt::parse_solver_mode(o.mode);
            if (!m) throw crt::ConfigError("--mode must be one of 2d, 3d, 4d, 6d, evaluate");
            sc.mode = *m;
        }
        if (o.threads > 0) sc.options.threads = o.threads;
        if (o.varrho.size() == 1) sc.constraints.varrho = o.varrho.front();
        sc.validate();
    } catch (const crt::ConfigError&) {
        throw;
    } catch (const crt::Error& e) {
        throw crt::ConfigError(o.config + ": " + e.what());
    }
    spdlog::debug("loaded scenario '{}' from {}: N={}, mode {}", sc.name, o.config, sc.horizon.sessions,
                  crt::to_string(sc.mode));
    return sc;
}

void single_varrho_only(const Options& o, const char* cmd) {
    if (o.varrho.size() > 1) throw crt::ConfigError(std::string(cmd) + ": --varrho takes one value here; use sweep");
}

std::optional<int> calendar_start(const Options& o) {
    if (o.calendar_start.empty()) return std::nullopt;
    static const char* kDays[] = {"mon", "tue", "wed", "thu", "fri"};
    for (int i = 0; i < 5; ++i) {
        if (o.calendar_start == kDays[i]) return i;
    }
    throw crt::ConfigError("--calendar-start must be one of mon, tue, wed, thu, fri");
}

fs::path out_dir(const Options& o) {
    fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw crt::InternalError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_optimize(const Options& o) {
    single_varrho_only(o, "optimize");
    const auto sc = load(o);
    const auto cal = calendar_start(o);
    const auto dir = out_dir(o);
    const auto t0 = std::chrono::steady_clock::now();
    const auto plan = crt::solve_scenario(sc);
    const auto direct = crt::evaluate_schedule(sc, plan.schedule);
    spdlog::info("mode {}: objective {:.9e}, tumor BED {:.4f} Gy ({:.2f} s)", crt::to_string(sc.mode), plan.objective,
                 plan.tumor_bed, seconds_since(t0));
    crt::write_file(dir / "schedule.csv", crt::schedule_csv(plan.schedule, cal));
    crt::write_json(dir / "summary.json", crt::summary_json(sc, plan, direct));
    spdlog::info("wrote {} and {}", (dir / "schedule.csv").string(), (dir / "summary.json").string());
    return kOk;
}

int run_evaluate(const Options& o) {
    single_varrho_only(o, "evaluate");
    const auto sc = load(o);
    const auto dir = out_dir(o);
    crt::TreatmentSchedule schedule;
    if (!o.schedule.empty()) {
        schedule = crt::parse_schedule_csv(crt::read_text_file(o.schedule), o.schedule);
    } else if (sc.standard_regimen) {
        schedule = *sc.standard_regimen;
    } else {
        throw crt::ConfigError("evaluate: give --schedule or a standard_regimen in the config");
    }
    crt::Evaluation e;
    try {
        e = crt::evaluate_schedule(sc, schedule);
    } catch (const crt::InvalidArgument& err) {
        throw crt::ConfigError(std::string("evaluate: ") + err.what());
    }
    crt::dp::OptimalPlan plan;
    plan.schedule = e.schedule;
    plan.objective = e.objective;
    plan.tumor_bed = e.tumor_bed;
    plan.oar_beds = e.oar_beds;
    plan.sensitivities = e.sensitivities;
    spdlog::info("objective {:.9e}, tumor BED {:.4f} Gy, feasible: {}", e.objective, e.tumor_bed,
                 e.feasibility.feasible() ? "yes" : "no");
    for (const auto& c : e.feasibility.checks) {
        if (!c.pass) spdlog::warn("constraint {} violated: value {} vs limit {}", c.name, c.value, c.limit);
    }
    crt::write_json(dir / "summary.json", crt::summary_json(sc, plan, e));
    return kOk;
}

int run_sweep(const Options& o) {
    auto sc = load(o);
    const auto dir = out_dir(o);
    const auto values = !o.varrho.empty() ? o.varrho : sc.sweep_varrho;
    if (values.empty()) throw crt::ConfigError("sweep: give --varrho or a sweep.varrho list in the config");
    for (double v : values) {
        if (!(v >= 0 && v <= 1)) throw crt::ConfigError("sweep: varrho values must lie in [0,1]");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = crt::sweep_varrho(sc, values);
    for (const auto& r : rows) {
        spdlog::info("varrho {}: met_reduction {:.4f}, bed_reduction {:.4f}", r.varrho, r.met_reduction, r.bed_reduction);
    }
    spdlog::info("sweep of {} values took {:.2f} s", rows.size(), seconds_since(t0));
    crt::write_file(dir / "tradeoff.csv", crt::tradeoff_csv(rows));
    return kOk;
}

int run_compare(const Options& o) {
    single_varrho_only(o, "compare");
    const auto sc = load(o);
    const auto dir = out_dir(o);
    const auto c = crt::compare_standard(sc);
    spdlog::info("R_opt {:.9e}, R_std {:.9e}: met_reduction {:.4f}, bed_reduction {:.4f}", c.optimized.objective,
                 c.standard.objective, c.met_reduction, c.bed_reduction);
    crt::write_json(dir / "comparison.json", crt::comparison_json(sc, c));
    return kOk;
}

int run_calibrate(const Options& o) {
    const auto in = crt::parse_calibration(crt::read_text_file(o.config), o.config);
    const auto dir = out_dir(o);
    crt::Json j = crt::Json::object();
    if (in.kappa) {
        const auto& k = *in.kappa;
        const double kappa = crt::estimate_kappa(k.tcp_rt, k.tcp_crt, k.c_cis, k.total_dose);
        spdlog::info("kappa = {:.9e}", kappa);
        j["kappa"] = kappa;
    }
    if (in.theta_psi) {
        const auto est = crt::estimate_theta_psi(in.theta_psi->first, in.theta_psi->second);
        for (const auto& w : est.warnings) spdlog::warn("{}", w);
        spdlog::info("theta = {:.9e}, psi = {:.9e} (condition {:.3e})", est.theta, est.psi, est.condition);
        j["theta_psi"] = {{"theta", est.theta}, {"psi", est.psi}, {"condition", est.condition}, {"warnings", est.warnings}};
    }
    crt::write_json(dir / "parameters.json", j);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Chemoradiotherapy schedule optimizer"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--config", o.config, "Scenario file (YAML)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
    };
    auto solver_flags = [&](CLI::App* cmd) {
        cmd->add_option("--mode", o.mode, "Solver mode: 2d, 3d, 4d, 6d, evaluate (overrides the config)");
        cmd->add_option("--threads", o.threads, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
    };
    auto varrho_flag = [&](CLI::App* cmd, const char* help) {
        cmd->add_option("--varrho", o.varrho, help)->delimiter(',');
    };

    auto* optimize = app.add_subcommand("optimize", "Solve a scenario, write schedule.csv and summary.json");
    common(optimize);
    solver_flags(optimize);
    varrho_flag(optimize, "Tumor BED floor as a fraction of the standard BED (overrides the config)");
    optimize->add_option("--calendar-start", o.calendar_start,
                         "Add a calendar column to schedule.csv; first session falls on this weekday (mon..fri)");

    auto* sweep = app.add_subcommand("sweep", "Optimize over a list of varrho values, write tradeoff.csv");
    common(sweep);
    solver_flags(sweep);
    varrho_flag(sweep, "Comma-separated varrho values (default: sweep.varrho from the config)");

    auto* compare = app.add_subcommand("compare", "Optimize and compare with the standard regimen");
    common(compare);
    solver_flags(compare);
    varrho_flag(compare, "Tumor BED floor fraction (overrides the config)");

    auto* evaluate = app.add_subcommand("evaluate", "Score a schedule without optimizing, write summary.json");
    common(evaluate);
    evaluate->add_option("--mode", o.mode, "Scoring model: 6d uses the re-oxygenation sensitivities");
    varrho_flag(evaluate, "Tumor BED floor fraction for the feasibility report");
    evaluate->add_option("--schedule", o.schedule, "schedule.csv to score (default: the standard regimen)")
        ->check(CLI::ExistingFile);

    auto* calibrate = app.add_subcommand("calibrate", "Estimate kappa and/or (theta, psi), write parameters.json");
    common(calibrate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*optimize) return run_optimize(o);
        if (*sweep) return run_sweep(o);
        if (*compare) return run_compare(o);
        if (*evaluate) return run_evaluate(o);
        if (*calibrate) return run_calibrate(o);
    } catch (const crt::NoFeasibleSchedule& e) {
        spdlog::error("{}", e.what());
        return kInfeasible;
    } catch (const crt::ConfigError& e) {
        spdlog::error("{}", e.what());
        return kConfigError;
    } catch (const crt::InvalidArgument& e) {
        spdlog::error("{}", e.what());
        return kConfigError;
    } catch (const crt::GridMisaligned& e) {
        spdlog::error("{}", e.what());
        return kConfigError;
    } catch (const crt::InstanceTooLarge& e) {
        spdlog::error("{}", e.what());
        return kConfigError;
    } catch (const crt::SingularSystem& e) {
        spdlog::error("{}", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return kInternalError;
    }
    return kInternalError;
}
