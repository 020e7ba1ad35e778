#pragma once

// Reaction terms f(s) = s^p L(s) with slowly varying factor L, as a closed
// catalogue of analytic families. Every family carries exact first and second
// derivatives (no finite differencing inside the library), a positivity
// threshold s_min, and diagnostics for the slow-variation hypotheses that the
// downstream machinery (resolvent tables, convexity gates) relies on.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace blowup {

enum class Family {
    PurePower,         // L = 1
    LogPower,          // L = log^a(K+s), K > 1
    IteratedLog,       // L = log_m(K+s), K > exp^(m)(0)
    ExpLogPow,         // L = exp((log s)^nu), 0 < nu < 1/2
    OscillatingLogSin, // L = log(3+s)^{sin(log log(3+s))}
    ExpLogCos,         // L = exp((log s)^nu cos((log s)^gamma)), nu+gamma < 1/2
    SinLogPow,         // L = 1 + a sin((log(2+s))^nu), |a| < 1, 0 < nu < 1/2
};

struct NonlinearitySpec {
    Family family = Family::PurePower;
    double p = 2.0;      // growth exponent, p > 1
    double alpha = 0.6;  // slow-variation weight exponent, 1/2 < alpha < 1

    // family parameters; unused entries are ignored by the dispatch
    double K = 0.0;
    double a = 0.0;
    int m = 1;
    double nu = 0.0;
    double gamma = 0.0;

    static NonlinearitySpec pure_power(double p) {
        NonlinearitySpec s;
        s.family = Family::PurePower;
        s.p = p;
        return s;
    }
    static NonlinearitySpec log_power(double p, double K, double a) {
        NonlinearitySpec s;
        s.family = Family::LogPower;
        s.p = p;
        s.K = K;
        s.a = a;
        return s;
    }
    static NonlinearitySpec iterated_log(double p, int m, double K) {
        NonlinearitySpec s;
        s.family = Family::IteratedLog;
        s.p = p;
        s.m = m;
        s.K = K;
        return s;
    }
    static NonlinearitySpec exp_log_pow(double p, double nu) {
        NonlinearitySpec s;
        s.family = Family::ExpLogPow;
        s.p = p;
        s.nu = nu;
        // s L'/L ~ nu (log s)^{nu-1}: decay against log^{-alpha} needs
        // alpha < 1 - nu, so pick the midpoint of (1/2, 1 - nu).
        s.alpha = std::clamp(0.75 - nu / 2.0, 0.505, 0.95);
        return s;
    }
    static NonlinearitySpec oscillating_log_sin(double p) {
        NonlinearitySpec s;
        s.family = Family::OscillatingLogSin;
        s.p = p;
        return s;
    }
    static NonlinearitySpec exp_log_cos(double p, double nu, double gamma) {
        NonlinearitySpec s;
        s.family = Family::ExpLogCos;
        s.p = p;
        s.nu = nu;
        s.gamma = gamma;
        // s L'/L ~ -gamma (log s)^{nu+gamma-1} sin((log s)^gamma) + smaller:
        // needs alpha < 1 - nu - gamma, so pick the midpoint of that window.
        s.alpha = std::clamp(0.75 - (nu + gamma) / 2.0, 0.505, 0.95);
        return s;
    }
    static NonlinearitySpec sin_log_pow(double p, double a, double nu) {
        NonlinearitySpec s;
        s.family = Family::SinLogPow;
        s.p = p;
        s.a = a;
        s.nu = nu;
        s.alpha = std::clamp(0.75 - nu / 2.0, 0.505, 0.95);
        return s;
    }
};

struct LTriple {
    double L, Lp, Lpp;
};
struct FTriple {
    double f, fp, fpp;
};

inline const char* family_name(Family f) {
    switch (f) {
        case Family::PurePower: return "pure_power";
        case Family::LogPower: return "log_power";
        case Family::IteratedLog: return "iterated_log";
        case Family::ExpLogPow: return "exp_log_pow";
        case Family::OscillatingLogSin: return "oscillating_log_sin";
        case Family::ExpLogCos: return "exp_log_cos";
        case Family::SinLogPow: return "sin_log_pow";
    }
    return "?";
}

inline bool family_from_name(const std::string& name, Family& out) {
    for (Family f : {Family::PurePower, Family::LogPower, Family::IteratedLog,
                     Family::ExpLogPow, Family::OscillatingLogSin,
                     Family::ExpLogCos, Family::SinLogPow}) {
        if (name == family_name(f)) {
            out = f;
            return true;
        }
    }
    return false;
}

// Sobolev-critical exponent for the ambient dimension.
inline double sobolev_critical(int n) {
    if (n >= 3) return double(n + 2) / double(n - 2);
    return std::numeric_limits<double>::infinity();
}

// m-fold iterated exponential of 0: the positivity threshold for the offset
// of an m-fold iterated logarithm.
inline double iterated_exp_zero(int m) {
    double v = 0.0;
    for (int i = 0; i < m; ++i) v = std::exp(v);
    return v;
}

inline std::vector<std::string> parameter_violations(const NonlinearitySpec& sp) {
    std::vector<std::string> bad;
    if (!(sp.p > 1.0)) bad.push_back("p must exceed 1");
    if (!(sp.alpha > 0.5 && sp.alpha < 1.0))
        bad.push_back("alpha must lie in (1/2, 1)");
    switch (sp.family) {
        case Family::PurePower:
            break;
        case Family::LogPower:
            if (!(sp.K > 1.0)) bad.push_back("log_power needs K > 1");
            break;
        case Family::IteratedLog:
            if (sp.m < 1) bad.push_back("iterated_log needs m >= 1");
            else if (!(sp.K > iterated_exp_zero(sp.m)))
                bad.push_back("iterated_log needs K > exp^(m)(0)");
            break;
        case Family::ExpLogPow:
            if (!(sp.nu > 0.0 && sp.nu < 0.5))
                bad.push_back("exp_log_pow needs nu in (0, 1/2)");
            break;
        case Family::OscillatingLogSin:
            break;
        case Family::ExpLogCos:
            if (!(sp.nu > 0.0 && sp.gamma > 0.0 && sp.nu + sp.gamma < 0.5))
                bad.push_back("exp_log_cos needs nu, gamma > 0 with nu + gamma < 1/2");
            break;
        case Family::SinLogPow:
            if (!(std::abs(sp.a) < 1.0)) bad.push_back("sin_log_pow needs |a| < 1");
            if (!(sp.nu > 0.0 && sp.nu < 0.5))
                bad.push_back("sin_log_pow needs nu in (0, 1/2)");
            break;
    }
    return bad;
}

// Allocation-free validity test; evaluation hot paths call this instead of
// materializing the violation list.
inline bool spec_ok(const NonlinearitySpec& sp) {
    if (!(sp.p > 1.0) || !(sp.alpha > 0.5 && sp.alpha < 1.0)) return false;
    switch (sp.family) {
        case Family::PurePower:
        case Family::OscillatingLogSin:
            return true;
        case Family::LogPower:
            return sp.K > 1.0;
        case Family::IteratedLog:
            return sp.m >= 1 && sp.K > iterated_exp_zero(sp.m);
        case Family::ExpLogPow:
            return sp.nu > 0.0 && sp.nu < 0.5;
        case Family::ExpLogCos:
            return sp.nu > 0.0 && sp.gamma > 0.0 && sp.nu + sp.gamma < 0.5;
        case Family::SinLogPow:
            return std::abs(sp.a) < 1.0 && sp.nu > 0.0 && sp.nu < 0.5;
    }
    return false;
}

inline void require_valid(const NonlinearitySpec& sp) {
    if (spec_ok(sp)) return;
    auto bad = parameter_violations(sp);
    throw std::domain_error("nonlinearity: " +
                            (bad.empty() ? std::string("invalid parameters") : bad.front()));
}

// Threshold above which L and f are positive and twice differentiable in
// closed form. Families built from log s need log s bounded away from 0.
inline double positivity_threshold(const NonlinearitySpec& sp) {
    switch (sp.family) {
        case Family::LogPower:
            // for a < 0 keep log(K+s) >= 1 so negative powers stay tame
            return sp.a < 0.0 ? std::max(0.0, std::exp(1.0) - sp.K) : 0.0;
        case Family::ExpLogPow:
        case Family::ExpLogCos:
            return std::exp(1.0);
        default:
            return 0.0;
    }
}

inline LTriple eval_L(const NonlinearitySpec& sp, double s) {
    require_valid(sp);
    if (!(s >= positivity_threshold(sp)))
        throw std::domain_error("eval_L: s below positivity threshold");
    switch (sp.family) {
        case Family::PurePower:
            return {1.0, 0.0, 0.0};
        case Family::LogPower: {
            double q = sp.K + s, l = std::log(q);
            double La = std::pow(l, sp.a);
            double Lp = sp.a * std::pow(l, sp.a - 1.0) / q;
            double Lpp = sp.a * std::pow(l, sp.a - 2.0) * ((sp.a - 1.0) - l) / (q * q);
            return {La, Lp, Lpp};
        }
        case Family::IteratedLog: {
            // propagate (value, d1, d2) through m nested logarithms
            double q = sp.K + s;
            double v = std::log(q), d1 = 1.0 / q, d2 = -1.0 / (q * q);
            for (int j = 1; j < sp.m; ++j) {
                double nv = std::log(v);
                double nd1 = d1 / v;
                double nd2 = d2 / v - (d1 / v) * (d1 / v);
                v = nv;
                d1 = nd1;
                d2 = nd2;
            }
            return {v, d1, d2};
        }
        case Family::ExpLogPow: {
            double z = std::log(s);
            double u = std::pow(z, sp.nu);
            double up = sp.nu * std::pow(z, sp.nu - 1.0) / s;
            double upp = sp.nu * std::pow(z, sp.nu - 2.0) * ((sp.nu - 1.0) - z) / (s * s);
            double L = std::exp(u);
            return {L, L * up, L * (upp + up * up)};
        }
        case Family::OscillatingLogSin: {
            double q = 3.0 + s, l = std::log(q), tau = std::log(l);
            double tp = 1.0 / (q * l);
            double tpp = -(l + 1.0) / (q * q * l * l);
            double g = tau * std::sin(tau);
            double gt = std::sin(tau) + tau * std::cos(tau);
            double gtt = 2.0 * std::cos(tau) - tau * std::sin(tau);
            double gp = gt * tp;
            double gpp = gtt * tp * tp + gt * tpp;
            double L = std::exp(g);
            return {L, L * gp, L * (gpp + gp * gp)};
        }
        case Family::ExpLogCos: {
            double z = std::log(s);
            double zn = std::pow(z, sp.nu), zg = std::pow(z, sp.gamma);
            double c = std::cos(zg), si = std::sin(zg);
            double g = zn * c;
            double gz = sp.nu * std::pow(z, sp.nu - 1.0) * c -
                        sp.gamma * std::pow(z, sp.nu + sp.gamma - 1.0) * si;
            double gzz = sp.nu * (sp.nu - 1.0) * std::pow(z, sp.nu - 2.0) * c -
                         sp.gamma * (2.0 * sp.nu + sp.gamma - 1.0) *
                             std::pow(z, sp.nu + sp.gamma - 2.0) * si -
                         sp.gamma * sp.gamma * std::pow(z, sp.nu + 2.0 * sp.gamma - 2.0) * c;
            double gp = gz / s;
            double gpp = (gzz - gz) / (s * s);
            double L = std::exp(g);
            return {L, L * gp, L * (gpp + gp * gp)};
        }
        case Family::SinLogPow: {
            double q = 2.0 + s, l = std::log(q);
            double w = std::pow(l, sp.nu);
            double wp = sp.nu * std::pow(l, sp.nu - 1.0) / q;
            double wpp = sp.nu * std::pow(l, sp.nu - 2.0) * ((sp.nu - 1.0) - l) / (q * q);
            double L = 1.0 + sp.a * std::sin(w);
            double Lp = sp.a * std::cos(w) * wp;
            double Lpp = sp.a * (std::cos(w) * wpp - std::sin(w) * wp * wp);
            return {L, Lp, Lpp};
        }
    }
    throw std::logic_error("eval_L: unreachable");
}

// f = s^p L and its two derivatives, valid for s >= positivity threshold.
inline FTriple eval_f(const NonlinearitySpec& sp, double s) {
    if (s == 0.0 && positivity_threshold(sp) == 0.0) {
        // continuous limit at the origin (p > 1)
        double fpp0 = (sp.p == 2.0 && sp.family == Family::PurePower) ? 2.0 : 0.0;
        if (sp.p < 2.0) fpp0 = std::numeric_limits<double>::infinity();
        return {0.0, 0.0, fpp0};
    }
    LTriple l = eval_L(sp, s);
    double sp1 = std::pow(s, sp.p - 1.0);
    double f = sp1 * s * l.L;
    double fp = sp1 * (sp.p * l.L + s * l.Lp);
    double fpp = sp1 / s *
                 (sp.p * (sp.p - 1.0) * l.L + 2.0 * sp.p * s * l.Lp + s * (s * l.Lpp));
    return {f, fp, fpp};
}

// Value-and-slope surface defined for every s >= 0. Above the positivity
// threshold this is f itself; below, a power-law blend c(s) = f(t)*(s/t)^q
// with q = t f'(t)/f(t), which matches value and slope at t = s_min, is C^1,
// nonnegative, and vanishes at 0. (A cubic Hermite blend can undershoot zero
// when q > 3, so the power form is used instead.)
struct ExtendedF {
    double f, fp;
};

inline ExtendedF eval_f_extended(const NonlinearitySpec& sp, double s) {
    if (s < 0.0) throw std::domain_error("eval_f_extended: negative argument");
    double t = positivity_threshold(sp);
    if (s >= t || t == 0.0) {
        FTriple v = eval_f(sp, s);
        return {v.f, v.fp};
    }
    FTriple at = eval_f(sp, t);
    double q = t * at.fp / at.f;  // c(s) = f(t) (s/t)^q matches value and slope
    if (s == 0.0) return {0.0, q > 1.0 ? 0.0 : at.fp};
    return {at.f * std::pow(s / t, q), at.fp * std::pow(s / t, q - 1.0)};
}

struct SlowVariationIndex {
    double eta1;       // s L'/L
    double eta2;       // s^2 L''/L
    double weighted1;  // eta1 * log^alpha s   (hypothesis: -> 0)
    double weighted2;  // (s L'/L)' * s log s  (hypothesis: -> 0)
};

inline SlowVariationIndex slow_variation_index(const NonlinearitySpec& sp, double s) {
    if (!(s > std::max(1.0, positivity_threshold(sp))))
        throw std::domain_error("slow_variation_index: need s > 1");
    LTriple l = eval_L(sp, s);
    double eta1 = s * l.Lp / l.L;
    double eta2 = s * (s * l.Lpp) / l.L;
    double lg = std::log(s);
    double w1 = eta1 * std::pow(lg, sp.alpha);
    double w2 = (eta1 + eta2 - eta1 * eta1) * lg;
    return {eta1, eta2, w1, w2};
}

struct KaramataBound {
    double deviation;  // |L(lambda s)/L(s) - 1|
    double bound;      // 4 |log lambda| / log^alpha s
    double margin;     // bound - deviation
};

// Uniform slow-variation ratio bound on the admissible window
// |log lambda| <= (1/8) log^alpha s.
inline KaramataBound karamata_ratio_bound(const NonlinearitySpec& sp, double s,
                                          double lambda,
                                          double s_gate = std::exp(50.0)) {
    if (!(s >= s_gate))
        throw std::domain_error("karamata_ratio_bound: s below slow-variation gate");
    if (!(lambda > 0.0))
        throw std::domain_error("karamata_ratio_bound: lambda must be positive");
    double la = std::pow(std::log(s), sp.alpha);
    double ll = std::log(lambda);
    if (!(std::abs(ll) <= 0.125 * la))
        throw std::domain_error("karamata_ratio_bound: lambda outside window");
    double dev = std::abs(eval_L(sp, lambda * s).L / eval_L(sp, s).L - 1.0);
    double bound = 4.0 * std::abs(ll) / la;
    return {dev, bound, bound - dev};
}

// Smallest s with f(s) >= e^4 and f' >= 0 from there on (sampled on a
// geometric ladder, then refined by bisection to the exact crossing).
inline double aux_gate(const NonlinearitySpec& sp) {
    require_valid(sp);
    const double e4 = std::exp(4.0);
    double lo = std::max(positivity_threshold(sp), 1e-2);
    auto ok = [&](double s) {
        FTriple v = eval_f(sp, s);
        return v.f >= e4 && v.fp >= 0.0;
    };
    double hi = lo;
    int guard = 0;
    while (!ok(hi)) {
        hi *= 2.0;
        if (hi > 1e300 || ++guard > 1100)
            throw std::runtime_error("aux_gate: no admissible threshold below 1e300");
    }
    if (hi == lo) return lo;
    lo = hi / 2.0;
    // refine: the last failing point is lo; bisect the crossing
    for (int it = 0; it < 200 && (hi - lo) > 1e-13 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (ok(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

struct AuxConvexity {
    double phi;  // 1/(A + log f), in (0, 1/4] at and beyond the gate for A >= 0
    double F;    // f * phi
    double Fp;   // f' phi (1 - phi)
    double Fpp;  // second derivative; nonnegative in the gated region
};

inline AuxConvexity aux_convexity_check(const NonlinearitySpec& sp, double A,
                                        double s, double gate = -1.0) {
    if (!(A >= 0.0)) throw std::domain_error("aux_convexity_check: need A >= 0");
    if (gate < 0.0) gate = aux_gate(sp);
    if (!(s >= gate * (1.0 - 1e-12)))
        throw std::domain_error("aux_convexity_check: s below gate");
    FTriple v = eval_f(sp, s);
    double phi = 1.0 / (A + std::log(v.f));
    double F = v.f * phi;
    double Fp = v.fp * phi * (1.0 - phi);
    double Fpp = v.fpp * phi * (1.0 - phi) -
                 (v.fp * v.fp / v.f) * phi * phi * (1.0 - 2.0 * phi);
    return {phi, F, Fp, Fpp};
}

struct CheckEntry {
    std::string name;
    bool pass;
    std::string detail;
};

struct HypothesisReport {
    std::vector<CheckEntry> entries;
    bool all_pass = true;

    void add(std::string name, bool pass, std::string detail = "") {
        all_pass = all_pass && pass;
        entries.push_back({std::move(name), pass, std::move(detail)});
    }
};

namespace detail {

// Envelope comparison for slowly decaying, possibly oscillating series:
// the top-quarter max must fall below the bottom-quarter max, unless the
// whole series has already collapsed below an absolute floor.
inline bool envelope_decay(const std::vector<double>& v, double floor = 1e-6) {
    if (v.size() < 8) return false;
    std::size_t q = v.size() / 4;
    double bot = 0.0, top = 0.0, all = 0.0;
    for (std::size_t i = 0; i < q; ++i) bot = std::max(bot, std::abs(v[i]));
    for (std::size_t i = v.size() - q; i < v.size(); ++i)
        top = std::max(top, std::abs(v[i]));
    for (double x : v) all = std::max(all, std::abs(x));
    return all < floor || top < bot;
}

}  // namespace detail

// Structured hypothesis check: parameter constraints, subcriticality,
// positivity along a wide ladder, and decay of the slow-variation indices.
inline HypothesisReport validate_hypotheses(const NonlinearitySpec& sp, int n) {
    HypothesisReport rep;
    auto bad = parameter_violations(sp);
    rep.add("parameter constraints", bad.empty(),
            bad.empty() ? "" : bad.front());
    rep.add("dimension", n >= 1, n >= 1 ? "" : "n must be >= 1");
    if (!bad.empty() || n < 1) return rep;

    double ps = sobolev_critical(n);
    rep.add("subcritical exponent", sp.p < ps,
            "p = " + std::to_string(sp.p) + ", critical = " + std::to_string(ps));

    bool positive = true;
    double where = 0.0;
    double s0 = std::max(positivity_threshold(sp), 1e-2);
    const double s_cap = std::exp(600.0 / sp.p);  // keep s^p representable
    for (double s = s0 * (1.0 + 1e-9); s < s_cap; s *= 4.0) {
        FTriple v = eval_f(sp, s);
        LTriple l = eval_L(sp, s);
        if (!(v.f > 0.0) || !(l.L > 0.0) || !std::isfinite(v.fpp)) {
            positive = false;
            where = s;
            break;
        }
    }
    rep.add("positivity on ladder", positive,
            positive ? "" : "failure near s = " + std::to_string(where));

    // Oscillating families modulate on the scale of powers of log s, so the
    // ladders must reach deep before the envelope comparison is meaningful.
    // First derivatives of L stay representable essentially to the end of
    // double range; second derivatives (~ L / s^2) underflow past
    // log s ~ 350, which caps the second ladder.
    std::vector<double> w1, w2;
    for (double ls = 10.0; ls <= 650.0; ls += 1.5)
        w1.push_back(slow_variation_index(sp, std::exp(ls)).weighted1);
    for (double ls = 10.0; ls <= 340.0; ls += 1.5)
        w2.push_back(slow_variation_index(sp, std::exp(ls)).weighted2);
    rep.add("slow variation: s L'/L decays against log^-alpha",
            detail::envelope_decay(w1));
    rep.add("slow variation: (s L'/L)' decays against 1/(s log s)",
            detail::envelope_decay(w2));
    return rep;
}

// Flat key/value serialization -------------------------------------------

inline std::vector<std::pair<std::string, std::string>> to_kv(
    const NonlinearitySpec& sp) {
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("family", family_name(sp.family));
    kv.emplace_back("p", num(sp.p));
    kv.emplace_back("alpha", num(sp.alpha));
    switch (sp.family) {
        case Family::PurePower: break;
        case Family::LogPower:
            kv.emplace_back("K", num(sp.K));
            kv.emplace_back("a", num(sp.a));
            break;
        case Family::IteratedLog:
            kv.emplace_back("m", std::to_string(sp.m));
            kv.emplace_back("K", num(sp.K));
            break;
        case Family::ExpLogPow:
            kv.emplace_back("nu", num(sp.nu));
            break;
        case Family::OscillatingLogSin: break;
        case Family::ExpLogCos:
            kv.emplace_back("nu", num(sp.nu));
            kv.emplace_back("gamma", num(sp.gamma));
            break;
        case Family::SinLogPow:
            kv.emplace_back("a", num(sp.a));
            kv.emplace_back("nu", num(sp.nu));
            break;
    }
    return kv;
}

inline NonlinearitySpec from_kv(const std::map<std::string, std::string>& kv,
                                std::vector<std::string>& errors) {
    NonlinearitySpec sp;
    auto it = kv.find("family");
    if (it == kv.end()) {
        errors.push_back("missing key: family");
        return sp;
    }
    if (!family_from_name(it->second, sp.family)) {
        errors.push_back("unknown family: " + it->second);
        return sp;
    }
    auto get_num = [&](const std::string& key, double& out, bool required) {
        auto f = kv.find(key);
        if (f == kv.end()) {
            if (required) errors.push_back("missing key: " + key);
            return;
        }
        try {
            std::size_t pos = 0;
            out = std::stod(f->second, &pos);
            if (pos != f->second.size()) throw std::invalid_argument("trail");
        } catch (...) {
            errors.push_back("bad number for key: " + key);
        }
    };
    get_num("p", sp.p, true);
    bool alpha_given = kv.count("alpha") > 0;
    get_num("alpha", sp.alpha, false);
    switch (sp.family) {
        case Family::PurePower: break;
        case Family::LogPower:
            get_num("K", sp.K, true);
            get_num("a", sp.a, true);
            break;
        case Family::IteratedLog: {
            double md = 1;
            get_num("m", md, true);
            sp.m = static_cast<int>(md);
            if (sp.m != md) errors.push_back("m must be an integer");
            get_num("K", sp.K, true);
            break;
        }
        case Family::ExpLogPow:
            get_num("nu", sp.nu, true);
            break;
        case Family::OscillatingLogSin: break;
        case Family::ExpLogCos:
            get_num("nu", sp.nu, true);
            get_num("gamma", sp.gamma, true);
            break;
        case Family::SinLogPow:
            get_num("a", sp.a, true);
            get_num("nu", sp.nu, true);
            break;
    }
    // Keep the factory rule for the weight exponent when the key is absent:
    // the admissible window shrinks to (1/2, 1 - nu - gamma) for the exp/sin
    // families and the flat default sits on that boundary for some of them.
    if (!alpha_given) {
        switch (sp.family) {
            case Family::ExpLogPow:
            case Family::SinLogPow:
                sp.alpha = std::clamp(0.75 - sp.nu / 2.0, 0.505, 0.95);
                break;
            case Family::ExpLogCos:
                sp.alpha = std::clamp(0.75 - (sp.nu + sp.gamma) / 2.0, 0.505, 0.95);
                break;
            default: break;
        }
    }
    if (errors.empty())
        for (const auto& v : parameter_violations(sp)) errors.push_back(v);
    return sp;
}

}  // namespace blowup
