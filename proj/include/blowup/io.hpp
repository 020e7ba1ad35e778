#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "../../vendor/json.hpp"
#include "config.hpp"
#include "nonlinearity.hpp"
#include "pde.hpp"
#include "profiles.hpp"
#include "resolvent.hpp"
#include "similarity.hpp"

namespace blowup {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CSV: comma-separated, header row, 17-significant-digit floats
// ---------------------------------------------------------------------------

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

inline void write_text_file(const std::string& path, const std::string& body) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    if (!out) throw std::runtime_error("short write on " + path);
}

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
    if (header.empty() || columns.size() != header.size())
        throw std::invalid_argument("write_csv: header/column shape mismatch");
    std::size_t rows = columns.front().size();
    for (const auto& c : columns)
        if (c.size() != rows)
            throw std::invalid_argument("write_csv: ragged columns");
    std::string body;
    for (std::size_t j = 0; j < header.size(); ++j)
        body += (j ? "," : "") + header[j];
    body += "\n";
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j)
            body += (j ? "," : "") + csv_num(columns[j][i]);
        body += "\n";
    }
    write_text_file(path, body);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    const std::vector<double>& at(const std::string& name) const {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return columns[j];
        throw std::out_of_range("csv column not found: " + name);
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
    t.columns.resize(t.header.size());
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t j = 0;
        while (std::getline(ls, cell, ',')) {
            if (j >= t.columns.size())
                throw std::runtime_error("csv row wider than header: " + path);
            t.columns[j++].push_back(std::stod(cell));
        }
        if (j != t.columns.size())
            throw std::runtime_error("csv row narrower than header: " + path);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Manifest pieces
// ---------------------------------------------------------------------------

inline json config_echo_json(const ExperimentConfig& cfg) {
    json j = json::object();
    for (const auto& [key, value] : cfg.echo) j[key] = value;
    return j;
}

inline json defaulted_json(const ExperimentConfig& cfg) {
    json j = json::array();
    for (const auto& key : cfg.defaulted) j.push_back(key);
    return j;
}

// Every manifest starts with the same preamble: identity, full resolved
// config, and the explicit list of defaulted keys.
inline json manifest_preamble(const std::string& command,
                              const ExperimentConfig& cfg) {
    json j;
    j["command"] = command;
    j["run_id"] = run_id(cfg);
    j["seed"] = cfg.seed;
    j["config"] = config_echo_json(cfg);
    j["defaulted"] = defaulted_json(cfg);
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// Rebuilds the INI text a resolved config corresponds to; reloading it
// reproduces the config (and hence the run id) exactly, because numeric echo
// values carry 17 significant digits.
inline std::string config_to_ini(const ExperimentConfig& cfg) {
    std::string out;
    std::string current;
    for (const auto& [key, value] : cfg.echo) {
        std::size_t dot = key.find('.');
        std::string section = key.substr(0, dot);
        if (section != current) {
            if (!out.empty()) out += "\n";
            out += "[" + section + "]\n";
            current = section;
        }
        out += key.substr(dot + 1) + " = " + value + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run persistence
// ---------------------------------------------------------------------------

inline std::string run_directory(const ExperimentConfig& cfg) {
    return cfg.out_dir + "/run-" + run_id(cfg);
}

inline json save_run(const ExperimentConfig& cfg, const RunRecord& rec,
                     const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_csv(dir + "/m.csv", {"t", "m"}, {rec.m_time, rec.m_value});
    if (rec.has_estimate)
        write_csv(dir + "/estimate.csv", {"t", "implied_T"},
                  {rec.estimate.sample_t, rec.estimate.implied_T});
    json snaps = json::array();
    for (std::size_t k = 0; k < rec.snapshots.size(); ++k) {
        const SolutionState& s = rec.snapshots[k];
        std::string file = "snap-" + std::to_string(k) + ".csv";
        write_csv(dir + "/" + file, {"r", "u"}, {s.r, s.u});
        json row;
        row["k"] = k;
        row["t"] = s.t;
        row["m"] = s.u.front();
        row["file"] = file;
        snaps.push_back(row);
    }

    json man = manifest_preamble("solve", cfg);
    man["status"] = run_status_name(rec.status);
    man["has_estimate"] = rec.has_estimate;
    man["T_hat"] = rec.has_estimate ? json(rec.estimate.T_hat) : json(nullptr);
    man["spread"] = rec.has_estimate ? json(rec.estimate.spread) : json(nullptr);
    man["regrid_count"] = rec.regrid_count;
    man["whole_space_leak"] = rec.whole_space_leak;
    man["whole_space_ok"] = rec.whole_space_ok;
    man["snapshots"] = snaps;
    write_json_file(dir + "/manifest.json", man);
    return man;
}

// Reads a run directory back into a record. The manifest's embedded config
// echo is authoritative: it is replayed through the normal config path, so a
// loaded record is bit-identical to the one that was saved.
inline RunRecord load_run(const std::string& dir,
                          ExperimentConfig* cfg_out = nullptr) {
    std::ifstream in(dir + "/manifest.json", std::ios::binary);
    if (!in) throw std::runtime_error("no run manifest in " + dir);
    json man = json::parse(in);

    ExperimentConfig cfg;
    {
        std::string ini;
        std::string current;
        for (const auto& [key, value] : man.at("config").items()) {
            std::size_t dot = key.find('.');
            std::string section = key.substr(0, dot);
            if (section != current) {
                ini += "[" + section + "]\n";
                current = section;
            }
            ini += key.substr(dot + 1) + " = " + value.get<std::string>() + "\n";
        }
        std::vector<std::string> errors;
        cfg = load_config_text(ini, errors);
        if (!errors.empty())
            throw std::runtime_error("run manifest config replay failed: " +
                                     errors.front());
    }
    if (cfg_out) *cfg_out = cfg;

    RunRecord rec;
    rec.config = cfg.run;
    std::string status = man.at("status").get<std::string>();
    bool known = false;
    for (RunStatus st : {RunStatus::BlewUp, RunStatus::NoBlowupDetected,
                         RunStatus::DtUnderflow, RunStatus::StepBudgetExhausted})
        if (status == run_status_name(st)) {
            rec.status = st;
            known = true;
        }
    if (!known) throw std::runtime_error("unknown run status: " + status);
    rec.has_estimate = man.at("has_estimate").get<bool>();
    if (rec.has_estimate) {
        rec.estimate.T_hat = man.at("T_hat").get<double>();
        rec.estimate.spread = man.at("spread").get<double>();
        CsvTable est = read_csv(dir + "/estimate.csv");
        rec.estimate.sample_t = est.at("t");
        rec.estimate.implied_T = est.at("implied_T");
    }
    rec.regrid_count = man.at("regrid_count").get<int>();
    rec.whole_space_leak = man.at("whole_space_leak").get<double>();
    rec.whole_space_ok = man.at("whole_space_ok").get<bool>();

    CsvTable m = read_csv(dir + "/m.csv");
    rec.m_time = m.at("t");
    rec.m_value = m.at("m");

    for (const auto& row : man.at("snapshots")) {
        CsvTable snap = read_csv(dir + "/" + row.at("file").get<std::string>());
        SolutionState st;
        st.t = row.at("t").get<double>();
        st.r = snap.at("r");
        st.u = snap.at("u");
        rec.snapshots.push_back(std::move(st));
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline json trend_series_json(const TrendSeries& s) {
    json j;
    j["name"] = s.name;
    j["description"] = s.description;
    j["pass"] = s.pass;
    if (!s.note.empty()) j["note"] = s.note;
    j["x"] = s.x;
    j["value"] = s.value;
    return j;
}

inline json asymptotics_json(const AsymptoticsReport& rep) {
    json j;
    j["all_pass"] = rep.all_pass;
    j["C1"] = rep.C1;
    json series = json::array();
    for (const auto& s : rep.series) series.push_back(trend_series_json(s));
    j["series"] = series;
    return j;
}

inline json hypotheses_json(const HypothesisReport& rep) {
    json j;
    j["all_pass"] = rep.all_pass;
    json entries = json::array();
    for (const auto& e : rep.entries) {
        json row;
        row["name"] = e.name;
        row["pass"] = e.pass;
        if (!e.detail.empty()) row["detail"] = e.detail;
        entries.push_back(row);
    }
    j["entries"] = entries;
    return j;
}

inline json comparison_json(const ComparisonReport& rep) {
    json j;
    j["T_hat"] = rep.T_hat;
    json win;
    win["tau_lo"] = rep.window.tau_lo;
    win["tau_hi"] = std::isfinite(rep.window.tau_hi)
                        ? json(rep.window.tau_hi)
                        : json("inf");
    win["K"] = rep.window.K;
    win["x_min"] = rep.window.x_min;
    win["x_max"] = std::isfinite(rep.window.x_max) ? json(rep.window.x_max)
                                                   : json("inf");
    win["m_gate"] = rep.window.m_gate;
    win["upper_slack"] = rep.window.upper_slack;
    j["window"] = win;
    j["snapshots_used"] = rep.snapshot_indices;
    json entries = json::array();
    for (const auto& e : rep.entries) {
        json row;
        row["kind"] = profile_kind_name(e.kind);
        row["samples"] = e.samples;
        row["skipped"] = e.skipped;
        row["ratio_min"] = e.ratio_min;
        row["ratio_max"] = e.ratio_max;
        row["ratio_median"] = e.ratio_median;
        row["violation_fraction"] = e.violation_fraction;
        entries.push_back(row);
    }
    j["entries"] = entries;
    return j;
}

inline json profile_trend_json(const ProfileTrend& tr) {
    json j;
    j["exponent"] = tr.exponent;
    j["median_ratio"] = tr.median_ratio;
    j["sample_count"] = tr.sample_count;
    j["approaching_one"] = tr.approaching_one;
    return j;
}

// Ratio samples as CSV; the kind lands in its own leading text column.
inline void write_samples_csv(const std::string& path,
                              const std::vector<ComparisonSample>& samples) {
    std::string body = "kind,x,t,u,prediction,ratio\n";
    for (const auto& s : samples) {
        body += profile_kind_name(s.kind);
        body += "," + csv_num(s.x) + "," + csv_num(s.t) + "," + csv_num(s.u) +
                "," + csv_num(s.prediction) + "," + csv_num(s.ratio) + "\n";
    }
    write_text_file(path, body);
}

// ---------------------------------------------------------------------------
// Plot scripts (gnuplot text; every script sits next to the CSVs it reads)
// ---------------------------------------------------------------------------

inline void write_plot_m_vs_psi(const std::string& path) {
    write_text_file(path,
                    "# sup-norm history against the blow-up ODE envelope\n"
                    "set datafile separator comma\n"
                    "set key left top\n"
                    "set logscale y\n"
                    "set xlabel 't'\n"
                    "set ylabel 'amplitude'\n"
                    "plot 'psi.csv' skip 1 using 1:2 with lines title 'm(t)', \\\n"
                    "     'psi.csv' skip 1 using 1:3 with lines title "
                    "'psi(T-t)'\n");
}

inline void write_plot_neutral_mode(const std::string& path) {
    write_text_file(
        path,
        "# neutral-mode amplitude s*b(s) against its predicted limit\n"
        "set datafile separator comma\n"
        "set key right bottom\n"
        "set xlabel 's'\n"
        "set ylabel 's b(s)'\n"
        "plot 'spectral.csv' skip 1 using 1:6 with linespoints title 's b(s)', \\\n"
        "     'spectral.csv' skip 1 using 1:7 with lines title '1/(4 p c2)'\n");
}

inline void write_plot_profile_ratio(const std::string& path) {
    write_text_file(
        path,
        "# solution over predicted profile across the comparison window\n"
        "set datafile separator comma\n"
        "set key outside\n"
        "set xlabel 'x'\n"
        "set ylabel 'u / prediction'\n"
        "plot 1 with lines dashtype 2 title '', \\\n"
        "     'profile_ratios.csv' skip 1 using 2:6 with points pointtype 7 "
        "pointsize 0.3 title 'samples'\n");
}

}  // namespace blowup
