#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nonlinearity.hpp"
#include "pde.hpp"
#include "profiles.hpp"

namespace blowup {

// ---------------------------------------------------------------------------
// Flat INI experiment configs
// ---------------------------------------------------------------------------
//
// One file describes one experiment: a [nonlinearity] section names the
// reaction term, [run] the solver setup, [resolvent]/[analysis]/[verification]
// the diagnostics, [output] the destination. Keys are typed, unknown keys are
// hard errors (diagnostics always name section.key), and every key the file
// does not set is recorded as defaulted so manifests can say so explicitly.

struct IniFile {
    // section -> key -> value; insertion order is irrelevant because the
    // resolved echo is emitted from the schema, not from the file.
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::vector<std::string> errors;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

}  // namespace detail

inline IniFile parse_ini(const std::string& text) {
    IniFile ini;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) {
                ini.errors.push_back("line " + std::to_string(lineno) +
                                     ": malformed section header '" + s + "'");
                continue;
            }
            section = detail::trim(s.substr(1, s.size() - 2));
            ini.sections[section];  // empty sections are legal
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) {
            ini.errors.push_back("line " + std::to_string(lineno) +
                                 ": expected key = value, got '" + s + "'");
            continue;
        }
        if (section.empty()) {
            ini.errors.push_back("line " + std::to_string(lineno) +
                                 ": key outside any [section]");
            continue;
        }
        std::string key = detail::trim(s.substr(0, eq));
        std::string val = detail::trim(s.substr(eq + 1));
        if (key.empty()) {
            ini.errors.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        if (!ini.sections[section].emplace(key, val).second)
            ini.errors.push_back("line " + std::to_string(lineno) +
                                 ": duplicate key " + section + "." + key);
    }
    return ini;
}

// ---------------------------------------------------------------------------
// Resolved experiment configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    NonlinearitySpec spec;
    RunConfig run;

    // [resolvent]
    double x_lo = 0.0;  // 0 = auto: max(5, 2 * positivity threshold)
    double x_hi = 1e15;
    double quad_tol = 1e-12;
    double ladder_lo = 10.0;  // check_asymptotics ladder, in log X
    double ladder_hi = 60.0;
    double ladder_step = 2.5;

    // [analysis]
    double y_max = 12.0;
    double residual_radius = 2.0;
    int max_frames = 0;  // 0 = all frames the record supports

    // [verification]
    std::vector<std::string> checks;  // subset of the known check names
    double tau_lo = 0.0;
    double tau_hi = std::numeric_limits<double>::infinity();
    double window_K = 2.0;
    double m_gate = 0.0;  // 0 = auto: aux convexity gate
    double upper_slack = 1e-3;
    double upper_tau_hi = 1e-6;  // bound checks live in the late phase
    int trend_k_lo = 2;
    int trend_k_hi = 5;
    unsigned long long seed = 0x5eedULL;

    // [output]
    std::string out_dir = "out";

    // Bookkeeping for manifests: every key the schema knows with its final
    // value, and the subset the file never set.
    std::vector<std::pair<std::string, std::string>> echo;
    std::vector<std::string> defaulted;

    bool check_enabled(const std::string& name) const {
        for (const auto& c : checks)
            if (c == name || c == "all") return true;
        return false;
    }
};

namespace detail {

// Walks one section against a schema: typed getters consume keys, leftovers
// are unknown-key errors, and every getter records echo + defaulted rows.
class SectionReader {
  public:
    SectionReader(const IniFile& ini, std::string section,
                  ExperimentConfig& cfg, std::vector<std::string>& errors)
        : name_(std::move(section)), cfg_(cfg), errors_(errors) {
        auto it = ini.sections.find(name_);
        if (it != ini.sections.end()) pending_ = it->second;
    }

    bool has(const std::string& key) const { return pending_.count(key) > 0; }

    std::string raw(const std::string& key) {
        auto it = pending_.find(key);
        std::string v = it == pending_.end() ? std::string() : it->second;
        if (it != pending_.end()) pending_.erase(it);
        return v;
    }

    void real(const std::string& key, double& out, double lo, double hi,
              bool lo_open = false) {
        if (!take(key, out)) return;
        std::string v = raw(key);
        double parsed = 0.0;
        if (!parse_real(v, parsed)) {
            fail(key, "expected a number, got '" + v + "'");
            return;
        }
        bool ok = lo_open ? parsed > lo : parsed >= lo;
        ok = ok && parsed <= hi;
        if (!ok) {
            fail(key, "value " + v + " outside " + (lo_open ? "(" : "[") +
                          g17(lo) + ", " + g17(hi) + "]");
            return;
        }
        out = parsed;
        echo(key, g17(out));
    }

    void integer(const std::string& key, int& out, int lo, int hi) {
        double d = out;
        if (!take(key, d)) {
            return;
        }
        std::string v = raw(key);
        double parsed = 0.0;
        if (!parse_real(v, parsed) || parsed != std::floor(parsed)) {
            fail(key, "expected an integer, got '" + v + "'");
            return;
        }
        if (parsed < lo || parsed > hi) {
            fail(key, "value " + v + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
            return;
        }
        out = static_cast<int>(parsed);
        echo(key, std::to_string(out));
    }

    void big_integer(const std::string& key, long& out, long lo, long hi) {
        if (!has(key)) {
            record_default(key, std::to_string(out));
            return;
        }
        std::string v = raw(key);
        double parsed = 0.0;
        if (!parse_real(v, parsed) || parsed != std::floor(parsed)) {
            fail(key, "expected an integer, got '" + v + "'");
            return;
        }
        if (parsed < static_cast<double>(lo) || parsed > static_cast<double>(hi)) {
            fail(key, "value " + v + " out of range");
            return;
        }
        out = static_cast<long>(parsed);
        echo(key, std::to_string(out));
    }

    void boolean(const std::string& key, bool& out) {
        if (!has(key)) {
            record_default(key, out ? "true" : "false");
            return;
        }
        std::string v = raw(key);
        if (v == "true" || v == "1" || v == "yes")
            out = true;
        else if (v == "false" || v == "0" || v == "no")
            out = false;
        else {
            fail(key, "expected true/false, got '" + v + "'");
            return;
        }
        echo(key, out ? "true" : "false");
    }

    void word(const std::string& key, std::string& out,
              const std::vector<std::string>& allowed) {
        if (!has(key)) {
            record_default(key, out);
            return;
        }
        std::string v = raw(key);
        for (const auto& a : allowed)
            if (v == a) {
                out = v;
                echo(key, out);
                return;
            }
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(key, "expected one of {" + list + "}, got '" + v + "'");
    }

    void text(const std::string& key, std::string& out) {
        if (!has(key)) {
            record_default(key, out);
            return;
        }
        out = raw(key);
        echo(key, out);
    }

    void finish() {
        for (const auto& [key, value] : pending_)
            fail(key, "unknown key (value '" + value + "')");
        pending_.clear();
    }

    void fail(const std::string& key, const std::string& msg) {
        errors_.push_back(name_ + "." + key + ": " + msg);
    }

    void echo(const std::string& key, const std::string& value) {
        cfg_.echo.emplace_back(name_ + "." + key, value);
    }

    void record_default(const std::string& key, const std::string& value) {
        cfg_.echo.emplace_back(name_ + "." + key, value);
        cfg_.defaulted.push_back(name_ + "." + key);
    }

  private:
    bool take(const std::string& key, double& current) {
        if (!has(key)) {
            record_default(key, g17(current));
            return false;
        }
        return true;
    }

    static bool parse_real(const std::string& v, double& out) {
        if (v == "inf") {
            out = std::numeric_limits<double>::infinity();
            return true;
        }
        try {
            std::size_t pos = 0;
            out = std::stod(v, &pos);
            return pos == v.size();
        } catch (...) {
            return false;
        }
    }

    std::string name_;
    std::map<std::string, std::string> pending_;
    ExperimentConfig& cfg_;
    std::vector<std::string>& errors_;
};

inline const std::set<std::string>& known_check_names() {
    static const std::set<std::string> names = {
        "all", "global", "final", "spacetime", "explicit", "upper_h", "trend"};
    return names;
}

}  // namespace detail

// Resolves a parsed INI file against the schema. Parse or validation errors
// land in `errors`, each naming the offending section.key; the returned
// config is only meaningful when `errors` stays empty.
inline ExperimentConfig resolve_config(const IniFile& ini,
                                       std::vector<std::string>& errors) {
    ExperimentConfig cfg;
    errors.insert(errors.end(), ini.errors.begin(), ini.errors.end());

    static const std::set<std::string> known_sections = {
        "nonlinearity", "run", "resolvent", "analysis", "verification",
        "output"};
    for (const auto& [name, kv] : ini.sections)
        if (!known_sections.count(name))
            errors.push_back(name + ": unknown section");

    // [nonlinearity] delegates to the spec's own flat-key deserializer, with
    // an allowed-key screen so family-irrelevant parameters are rejected
    // instead of silently ignored.
    {
        std::map<std::string, std::string> kv;
        auto it = ini.sections.find("nonlinearity");
        if (it != ini.sections.end()) kv = it->second;
        if (!kv.count("family")) {
            errors.push_back("nonlinearity.family: missing required key");
        } else {
            Family fam;
            if (!family_from_name(kv.at("family"), fam)) {
                errors.push_back("nonlinearity.family: unknown family '" +
                                 kv.at("family") + "'");
            } else {
                std::set<std::string> allowed = {"family", "p", "alpha"};
                switch (fam) {
                    case Family::PurePower: break;
                    case Family::LogPower:
                        allowed.insert({"K", "a"});
                        break;
                    case Family::IteratedLog:
                        allowed.insert({"m", "K"});
                        break;
                    case Family::ExpLogPow:
                        allowed.insert({"nu"});
                        break;
                    case Family::OscillatingLogSin: break;
                    case Family::ExpLogCos:
                        allowed.insert({"nu", "gamma"});
                        break;
                    case Family::SinLogPow:
                        allowed.insert({"a", "nu"});
                        break;
                }
                bool keys_ok = true;
                for (const auto& [key, value] : kv)
                    if (!allowed.count(key)) {
                        errors.push_back("nonlinearity." + key +
                                         ": unknown key (value '" + value + "')");
                        keys_ok = false;
                    }
                if (keys_ok) {
                    std::vector<std::string> sub;
                    cfg.spec = from_kv(kv, sub);
                    for (const auto& e : sub)
                        errors.push_back("nonlinearity: " + e);
                    if (sub.empty()) {
                        for (const auto& [key, value] : to_kv(cfg.spec)) {
                            cfg.echo.emplace_back("nonlinearity." + key, value);
                            if (!kv.count(key))
                                cfg.defaulted.push_back("nonlinearity." + key);
                        }
                    }
                }
            }
        }
    }
    cfg.run.spec = cfg.spec;

    {
        detail::SectionReader r(ini, "run", cfg, errors);
        r.integer("n", cfg.run.n, 1, 16);
        std::string domain = cfg.run.domain.kind == DomainKind::Ball
                                 ? "ball"
                                 : "whole_space";
        r.word("domain", domain, {"ball", "whole_space"});
        cfg.run.domain.kind =
            domain == "ball" ? DomainKind::Ball : DomainKind::WholeSpace;
        r.real("radius", cfg.run.domain.R, 0.0, 1e6, true);
        std::string init = "plateau_gaussian";
        r.word("init", init, {"plateau_gaussian", "constant"});
        cfg.run.init.kind = init == "plateau_gaussian" ? InitKind::PlateauGaussian
                                                       : InitKind::Constant;
        r.real("amplitude", cfg.run.init.amplitude, 0.0, 1e12, true);
        r.real("width", cfg.run.init.width, 0.0, 1e6);
        r.integer("nodes", cfg.run.grid.nodes, 16, 2000000);
        r.real("grading", cfg.run.grid.grading, 0.0, 50.0);
        r.real("u_max", cfg.run.u_max, 1.0, 1e300, true);
        r.real("t_horizon", cfg.run.t_horizon, 0.0, 1e12, true);
        r.real("snapshots_per_decade", cfg.run.snapshots_per_decade, 0.0, 1e3,
               true);
        r.real("step_rel_tol", cfg.run.step_rel_tol, 0.0, 1.0, true);
        r.real("safety", cfg.run.dt.safety, 0.0, 1.0, true);
        r.real("dt_min", cfg.run.dt.dt_min, 0.0, 1.0, true);
        r.big_integer("max_steps", cfg.run.max_steps, 1000, 2000000000L);
        r.boolean("reaction", cfg.run.reaction_enabled);
        r.boolean("diffusion", cfg.run.diffusion_enabled);
        r.finish();
    }

    {
        detail::SectionReader r(ini, "resolvent", cfg, errors);
        r.real("x_lo", cfg.x_lo, 0.0, 1e100);
        r.real("x_hi", cfg.x_hi, 1.0, 1e300, true);
        r.real("quad_tol", cfg.quad_tol, 0.0, 1e-2, true);
        r.real("ladder_lo", cfg.ladder_lo, 1.0, 700.0);
        r.real("ladder_hi", cfg.ladder_hi, 1.0, 700.0);
        r.real("ladder_step", cfg.ladder_step, 0.0, 100.0, true);
        r.finish();
        if (cfg.ladder_hi <= cfg.ladder_lo)
            errors.push_back("resolvent.ladder_hi: must exceed ladder_lo");
        if (cfg.x_lo > 0.0 && cfg.x_hi <= cfg.x_lo)
            errors.push_back("resolvent.x_hi: must exceed x_lo");
    }

    {
        detail::SectionReader r(ini, "analysis", cfg, errors);
        r.real("y_max", cfg.y_max, 2.0, 64.0);
        r.real("residual_radius", cfg.residual_radius, 0.0, 64.0, true);
        r.integer("max_frames", cfg.max_frames, 0, 100000);
        r.finish();
        if (cfg.residual_radius > cfg.y_max)
            errors.push_back("analysis.residual_radius: must not exceed y_max");
    }

    {
        detail::SectionReader r(ini, "verification", cfg, errors);
        std::string checks = "all";
        r.text("checks", checks);
        cfg.checks.clear();
        std::istringstream cs(checks);
        std::string tok;
        while (std::getline(cs, tok, ',')) {
            tok = detail::trim(tok);
            if (tok.empty()) continue;
            if (!detail::known_check_names().count(tok))
                r.fail("checks", "unknown check '" + tok + "'");
            else
                cfg.checks.push_back(tok);
        }
        if (cfg.checks.empty()) r.fail("checks", "no checks selected");
        r.real("tau_lo", cfg.tau_lo, 0.0, 1e12);
        r.real("tau_hi", cfg.tau_hi, 0.0,
               std::numeric_limits<double>::infinity(), true);
        r.real("window_k", cfg.window_K, 0.0, 1e3, true);
        r.real("m_gate", cfg.m_gate, 0.0, 1e300);
        r.real("upper_slack", cfg.upper_slack, 0.0, 1.0, true);
        r.real("upper_tau_hi", cfg.upper_tau_hi, 0.0, 1e12, true);
        r.integer("trend_k_lo", cfg.trend_k_lo, 1, 15);
        r.integer("trend_k_hi", cfg.trend_k_hi, 2, 16);
        double seed = static_cast<double>(cfg.seed);
        r.real("seed", seed, 0.0, 9e15);
        if (seed != std::floor(seed))
            r.fail("seed", "expected an integer");
        else
            cfg.seed = static_cast<unsigned long long>(seed);
        r.finish();
        if (cfg.trend_k_hi <= cfg.trend_k_lo)
            errors.push_back("verification.trend_k_hi: must exceed trend_k_lo");
        if (cfg.tau_hi <= cfg.tau_lo)
            errors.push_back("verification.tau_hi: must exceed tau_lo");
    }

    {
        detail::SectionReader r(ini, "output", cfg, errors);
        r.text("dir", cfg.out_dir);
        r.finish();
        if (cfg.out_dir.empty()) errors.push_back("output.dir: must not be empty");
    }

    return cfg;
}

inline ExperimentConfig load_config_text(const std::string& text,
                                         std::vector<std::string>& errors) {
    return resolve_config(parse_ini(text), errors);
}

inline ExperimentConfig load_config_file(const std::string& path,
                                         std::vector<std::string>& errors) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        errors.push_back("cannot open config file: " + path);
        return {};
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_config_text(buf.str(), errors);
}

// Deterministic run identifier: FNV-1a over the resolved echo plus the seed,
// so identical configs land in identical directories.
inline std::string run_id(const ExperimentConfig& cfg) {
    unsigned long long h = 1469598103934665603ULL;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    };
    for (const auto& [key, value] : cfg.echo) {
        mix(key);
        mix(value);
    }
    mix(std::to_string(cfg.seed));
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", h);
    return std::string(buf, 12);
}

}  // namespace blowup
