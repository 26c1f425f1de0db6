#pragma once

#include "crt/errors.hpp"
#include "crt/experiment.hpp"
#include "crt/scenario.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace crt {

/// Shortest decimal that reads back to the same double; '.' separator
/// regardless of locale.
[[nodiscard]] inline std::string format_double(double x) {
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw InternalError("format_double: conversion failed");
    return std::string(buf.data(), end);
}

/// Maps session k to a weekday label, treatment given Monday to Friday
/// starting on `start_weekday` (0 = Monday). Output only: the model itself
/// indexes consecutive sessions.
[[nodiscard]] inline std::string calendar_label(int session, int start_weekday = 0) {
    static constexpr std::array<std::string_view, 5> kDays{"mon", "tue", "wed", "thu", "fri"};
    if (start_weekday < 0 || start_weekday > 4) throw InvalidArgument("calendar start must be a weekday (0..4)");
    const int slot = start_weekday + session - 1;
    return "w" + std::to_string(slot / 5 + 1) + "-" + std::string(kDays[static_cast<size_t>(slot % 5)]);
}

/// session,dose_gy,chemo_mgm2 with an optional trailing calendar column.
[[nodiscard]] inline std::string schedule_csv(const TreatmentSchedule& s, std::optional<int> calendar_start = {}) {
    std::string out = "session,dose_gy,chemo_mgm2";
    if (calendar_start) out += ",calendar";
    out += '\n';
    for (int i = 0; i < s.sessions(); ++i) {
        out += std::to_string(i + 1) + ',' + format_double(s.doses[static_cast<size_t>(i)]) + ',' +
               format_double(s.chemo[static_cast<size_t>(i)]);
        if (calendar_start) out += ',' + calendar_label(i + 1, *calendar_start);
        out += '\n';
    }
    return out;
}

/// Reads a schedule.csv back. Sessions must run 1..N in order; a trailing
/// calendar column is ignored.
[[nodiscard]] inline TreatmentSchedule parse_schedule_csv(std::string_view text, const std::string& source = "<csv>") {
    auto fail = [&](int line, const std::string& msg) -> void {
        throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
    };
    auto split = [](std::string_view line) {
        std::vector<std::string_view> cells;
        size_t start = 0;
        for (;;) {
            const size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return cells;
    };
    auto parse = [&](std::string_view cell, int line) {
        double x = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
        if (ec != std::errc{} || ptr != cell.data() + cell.size()) fail(line, "not a number: '" + std::string(cell) + "'");
        return x;
    };

    TreatmentSchedule s;
    int line_no = 0;
    bool header = false;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const auto cells = split(line);
        if (!header) {
            if (cells.size() < 3 || cells[0] != "session" || cells[1] != "dose_gy" || cells[2] != "chemo_mgm2") {
                fail(line_no, "expected header 'session,dose_gy,chemo_mgm2'");
            }
            header = true;
            continue;
        }
        if (cells.size() < 3) fail(line_no, "expected at least 3 columns");
        const double session = parse(cells[0], line_no);
        if (session != s.sessions() + 1) fail(line_no, "sessions must be numbered 1..N in order");
        s.doses.push_back(parse(cells[1], line_no));
        s.chemo.push_back(parse(cells[2], line_no));
    }
    if (!header) fail(line_no, "empty schedule file");
    if (s.sessions() == 0) fail(line_no, "schedule has no sessions");
    try {
        s.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return s;
}

[[nodiscard]] inline std::string tradeoff_csv(const std::vector<SweepRow>& rows) {
    std::string out = "varrho,R_opt,R_std,met_reduction,bed_opt,bed_std,bed_reduction\n";
    for (const auto& r : rows) {
        for (double x : {r.varrho, r.r_opt, r.r_std, r.met_reduction, r.bed_opt, r.bed_std}) out += format_double(x) + ',';
        out += format_double(r.bed_reduction) + '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

using Json = nlohmann::ordered_json;

[[nodiscard]] inline Json to_json(const TreatmentSchedule& s) { return Json{{"doses", s.doses}, {"chemo", s.chemo}}; }

[[nodiscard]] inline Json to_json(const dp::TableStats& st) {
    return Json{{"rows_per_stage", st.rows_per_stage},     {"transitions", st.transitions},
                {"pruned_dominated", st.pruned_dominated}, {"pruned_budget", st.pruned_budget},
                {"pruned_infeasible", st.pruned_infeasible}, {"pruned_bound", st.pruned_bound}};
}

[[nodiscard]] inline Json to_json(const FeasibilityReport& r) {
    Json checks = Json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"slack", c.slack}, {"pass", c.pass}});
    }
    return Json{{"feasible", r.feasible()}, {"checks", checks}};
}

[[nodiscard]] inline Json to_json(const std::vector<std::pair<std::string, double>>& named) {
    Json out = Json::object();
    for (const auto& [k, v] : named) out[k] = v;
    return out;
}

[[nodiscard]] inline Json to_json(const std::vector<Sensitivity>& path) {
    Json out = Json::array();
    for (const auto& s : path) out.push_back({{"alpha", s.alpha}, {"beta", s.beta}});
    return out;
}

[[nodiscard]] inline Json to_json(const Evaluation& e) {
    Json j{{"objective", e.objective},
           {"tumor_bed", e.tumor_bed},
           {"oar_beds", to_json(e.oar_beds)},
           {"schedule", to_json(e.schedule)},
           {"feasibility", to_json(e.feasibility)}};
    if (!e.sensitivities.empty()) j["sensitivities"] = to_json(e.sensitivities);
    return j;
}

/// The resolved scenario, defaults filled in.
[[nodiscard]] inline Json to_json(const Scenario& sc) {
    const auto& t = sc.tumor;
    Json sites = Json::array();
    for (const auto& s : sc.sites) sites.push_back({{"name", s.name}, {"p", s.p}, {"mu", s.mu}, {"omega", s.omega}});
    Json horizon{{"sessions", sc.horizon.sessions}, {"T", sc.horizon.T}};
    if (const auto& b = sc.horizon.brachy) {
        horizon["brachytherapy"] = {{"rest_days", b->rest_days}, {"days", b->days}, {"rate", b->rate},
                                    {"e_g", b->e_g}, {"sigma", b->sigma}};
    }
    const auto& c = sc.constraints;
    Json oars = Json::array();
    for (const auto& o : c.oars) {
        oars.push_back({{"name", o.name}, {"gamma", o.gamma}, {"ab_ratio", o.ab_ratio}, {"bed_cap", o.bed_cap}});
    }
    Json solver{{"mode", to_string(sc.mode)},
                {"threads", sc.options.threads},
                {"prune_dominated", sc.options.prune_dominated},
                {"prune_budget", sc.options.prune_budget},
                {"prune_bound", sc.options.prune_bound}};
    if (sc.mode == SolverMode::Static2D) {
        solver["fixed_chemo"] = to_string(sc.fixed_chemo_source);
        solver["fixed_chemo_vector"] = sc.resolved_fixed_chemo();
    }
    Json j{{"name", sc.name},
           {"tumor",
            {{"alpha", t.alpha}, {"beta", t.beta}, {"theta", t.theta}, {"psi", t.psi}, {"tau_d", t.tau_d},
             {"kickoff", t.kickoff}, {"x0", t.x0}, {"xi", t.xi}}},
           {"sites", sites},
           {"horizon", horizon},
           {"constraints",
            {{"oars", oars}, {"tumor_ab_ratio", c.tumor_ab_ratio}, {"bed_std", c.bed_std}, {"varrho", c.varrho},
             {"bed_floor", c.tumor_bed_floor()}, {"chemo_budget", c.chemo_budget}, {"chemo_max", c.chemo_max},
             {"dose_max", c.dose_max}}},
           {"grid", {{"d_step", sc.grid.d_step}, {"c_step", sc.grid.c_step}}},
           {"solver", solver}};
    if (const auto& m = sc.oxygen) {
        j["oxygen"] = {{"alpha_max", m->alpha_max}, {"beta_max", m->beta_max}, {"oer_alpha", m->oer_alpha},
                       {"oer_beta", m->oer_beta}, {"K", m->K}, {"y_max", m->y_max}, {"iota", m->iota}, {"rho", m->rho}};
    }
    if (sc.standard_regimen) j["standard_regimen"] = to_json(*sc.standard_regimen);
    return j;
}

/// summary.json of an optimize or evaluate run.
[[nodiscard]] inline Json summary_json(const Scenario& sc, const dp::OptimalPlan& plan, const Evaluation& direct) {
    Json j{{"objective", plan.objective},
           {"objective_direct", direct.objective},
           {"tumor_bed", plan.tumor_bed},
           {"oar_beds", to_json(plan.oar_beds)},
           {"schedule", to_json(plan.schedule)},
           {"feasibility", to_json(direct.feasibility)},
           {"stats", to_json(plan.stats)}};
    if (!plan.sensitivities.empty()) j["sensitivities"] = to_json(plan.sensitivities);
    j["config"] = to_json(sc);
    return j;
}

[[nodiscard]] inline Json comparison_json(const Scenario& sc, const Comparison& c) {
    return Json{{"optimized", to_json(c.optimized)},
                {"standard", to_json(c.standard)},
                {"solver_objective", c.solver_objective},
                {"met_reduction", c.met_reduction},
                {"bed_reduction", c.bed_reduction},
                {"stats", to_json(c.stats)},
                {"config", to_json(sc)}};
}

/// Writes bytes as-is (no newline translation).
inline void write_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InternalError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw InternalError("write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_file(path, j.dump(2) + '\n'); }

}  // namespace crt
