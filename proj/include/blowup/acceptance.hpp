#pragma once
// Acceptance gate: fourteen numbered criteria, each reduced to a single
// pass/fail verdict plus the measured numbers it was judged on. Every
// tolerance is pinned here, in code. Criteria that share expensive state
// (the plateau reference runs, the wide pure-power table) read it from a
// context built once up front; everything else is computed inside the
// criterion so the fourteen verdicts stay independent of evaluation order
// and can run concurrently.
//
// Verdicts are honest: a criterion whose target is not reachable by the
// implementation reports FAIL together with the measurement that says so,
// rather than a loosened tolerance.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "profiles.hpp"
#include "similarity.hpp"

namespace blowup {

struct CriterionResult {
    int index = 0;          // 1-based criterion number
    std::string name;       // short kebab-case label
    bool pass = false;
    std::string detail;     // measured values behind the verdict
    double seconds = 0.0;   // wall time spent inside the criterion
};

// Knobs for the expensive parts. The defaults are the full gate; tests that
// only exercise the plumbing may shrink the sample counts.
struct AcceptanceBudget {
    int ref_nodes = 1601;        // reference run resolution
    int doubled_nodes = 3201;    // refinement step of the doubling study
    double ref_u_max = 1e12;     // center amplitude both reference runs chase
    int oracle_samples = 1000;   // criterion 1, per exponent
    int roundtrip_samples = 125; // criterion 2, per family per identity
    int poincare_trials = 100;   // criterion 10
    double ladder_lo = 10.0;     // criterion 3, log X range and spacing
    double ladder_hi = 60.0;
    double ladder_step = 2.5;
    double ode_cap = 1e10;       // criterion 4 trajectory ceiling
};

// The laboratory instantiation of the slowly-varying catalogue: one spec per
// family, two pure-power exponents. Parameters match the unit suites.
inline std::vector<NonlinearitySpec> acceptance_catalogue() {
    return {
        NonlinearitySpec::pure_power(2.0),
        NonlinearitySpec::pure_power(3.0),
        NonlinearitySpec::log_power(2.0, 2.0, 1.0),
        NonlinearitySpec::iterated_log(2.0, 2, 20.0),
        NonlinearitySpec::exp_log_pow(2.0, 0.3),
        NonlinearitySpec::oscillating_log_sin(2.0),
        NonlinearitySpec::exp_log_cos(2.0, 0.2, 0.2),
        NonlinearitySpec::sin_log_pow(2.0, 0.5, 0.3),
    };
}

inline RunConfig acceptance_reference_config(int n, int nodes, double u_max) {
    RunConfig cfg;
    cfg.spec = NonlinearitySpec::pure_power(2.0);
    cfg.n = n;
    cfg.domain = {DomainKind::Ball, 1.0};
    cfg.init = InitialData::plateau_gaussian(20.0);
    cfg.grid.nodes = nodes;
    cfg.u_max = u_max;
    return cfg;
}

// Shared state: the two reference runs (n = 1 and n = 3) and a pure-power
// table wide enough for every G evaluation the criteria make against them.
struct AcceptanceContext {
    AcceptanceBudget budget;
    std::uint64_t seed = 0;
    RunRecord ref1;
    RunRecord ref3;
    ResolventTable tb2;
    double build_seconds = 0.0;
};

namespace detail {

inline std::string accfmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// Per-sample rng streams keyed off (seed, criterion): verdicts do not depend
// on which thread ran which criterion.
inline std::mt19937_64 acc_rng(std::uint64_t seed, int criterion) {
    return std::mt19937_64(seed * 0x9E3779B97F4A7C15ull + criterion);
}

inline CriterionResult timed_criterion(int index, const char* name,
                                       const std::function<void(CriterionResult&)>& body) {
    CriterionResult r;
    r.index = index;
    r.name = name;
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(r);
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0).count();
    return r;
}

// --- criterion 1: pure-power closed forms ---------------------------------
// G(X)(p-1)X^{p-1} = 1 exactly, H(A,X) = (A + p log X + p/(p-1)) /
// ((p-1) X^{p-1}); the table and the quadrature must reproduce both.
inline void c1_resolvent_oracle(CriterionResult& r, const AcceptanceContext& cx) {
    auto rng = acc_rng(cx.seed, 1);
    std::uniform_real_distribution<double> UX(std::log(10.0), std::log(1e8));
    std::uniform_real_distribution<double> UA(0.0, 5.0);
    double worst_g = 0.0, worst_h = 0.0;
    for (double p : {2.0, 3.0}) {
        NonlinearitySpec sp = NonlinearitySpec::pure_power(p);
        ResolventTable tb = build_table(sp, 5.0, 4e8, 1e-12);
        for (int i = 0; i < cx.budget.oracle_samples; ++i) {
            double X = std::exp(UX(rng));
            worst_g = std::max(
                worst_g, std::abs(G(tb, X) * (p - 1.0) * std::pow(X, p - 1.0) - 1.0));
            double A = UA(rng);
            double closed = (A + p * std::log(X) + p / (p - 1.0)) /
                            ((p - 1.0) * std::pow(X, p - 1.0));
            worst_h = std::max(worst_h, std::abs(H(sp, A, X) / closed - 1.0));
        }
    }
    r.pass = worst_g < 1e-10 && worst_h < 1e-9;
    r.detail = accfmt("max |G(X)(p-1)X^{p-1}-1| = %.3g (tol 1e-10), "
                      "max rel H error = %.3g (tol 1e-9), %d samples per p",
                      worst_g, worst_h, cx.budget.oracle_samples);
}

// --- criterion 2: inversion round trips ------------------------------------
inline void c2_round_trips(CriterionResult& r, const AcceptanceContext& cx) {
    auto rng = acc_rng(cx.seed, 2);
    double worst_g = 0.0, worst_h = 0.0;
    int total = 0;
    for (const NonlinearitySpec& sp : acceptance_catalogue()) {
        double lo = std::max({10.0, 2.0 * positivity_threshold(sp),
                              1.05 * detail::h_domain_gate(sp)});
        ResolventTable tb =
            build_table(sp, std::max(positivity_threshold(sp) * 1.2, 0.5), 4e8, 1e-12);
        std::uniform_real_distribution<double> U(std::log(lo), std::log(1e8));
        for (int i = 0; i < cx.budget.roundtrip_samples; ++i) {
            double X = std::exp(U(rng));
            worst_g = std::max(worst_g, std::abs(G_inv(tb, G(tb, X)) / X - 1.0));
            double A = (i % 2) ? 3.0 : 0.0;
            worst_h = std::max(worst_h, std::abs(H_inv(sp, A, H(sp, A, X)) / X - 1.0));
            ++total;
        }
    }
    r.pass = worst_g < 1e-9 && worst_h < 1e-9;
    r.detail = accfmt("G_inv(G(X)): max rel err %.3g, H_inv(H(X)): %.3g "
                      "(tol 1e-9), %d samples per identity across %zu specs",
                      worst_g, worst_h, total, acceptance_catalogue().size());
}

// --- criterion 3: asymptotic trend suite -----------------------------------
// Per family, on the ladder X = e^{10} .. e^{60}: the four leading-order
// ratio series end within 10% of 1 with smaller deviation at the top than at
// the bottom, and the sharpened-remainder envelope decreases over the top
// half. Verdict and numbers reported per family.
inline void c3_asymptotics_trend(CriterionResult& r, const AcceptanceContext& cx) {
    std::vector<double> ladder;
    for (double lx = cx.budget.ladder_lo; lx <= cx.budget.ladder_hi + 1e-9;
         lx += cx.budget.ladder_step)
        ladder.push_back(std::exp(lx));

    const char* ratio_series[] = {"G_leading", "H_leading", "H_vs_GlogG",
                                  "Hinv_vs_Ginv"};
    std::string bad;
    double worst_final = 0.0;
    for (const NonlinearitySpec& sp : acceptance_catalogue()) {
        AsymptoticsReport rep = check_asymptotics(sp, ladder);
        std::string why;
        for (const char* name : ratio_series) {
            const TrendSeries* ts = rep.find(name);
            double final_dev = std::abs(ts->value.back() - 1.0);
            worst_final = std::max(worst_final, final_dev);
            if (final_dev > 0.1)
                why += accfmt(" %s=%.3f", name, ts->value.back());
            // deviations at the ladder top against the ladder bottom: maxima
            // over the end quarters (a single rung can sit on a crossing of 1)
            std::size_t q = std::max<std::size_t>(1, ts->value.size() / 4);
            double top = 0.0, bot = 0.0;
            for (std::size_t k = 0; k < q; ++k) {
                top = std::max(top, std::abs(ts->value[ts->value.size() - 1 - k] - 1.0));
                bot = std::max(bot, std::abs(ts->value[k] - 1.0));
            }
            if (!(top < bot || (top < 1e-12 && bot < 1e-12)))
                why += accfmt(" %s-trend", name);
        }
        const TrendSeries* lm = rep.find("G_sharp_remainder");
        bool lm_zero = true, lm_dec = true;
        for (std::size_t k = lm->value.size() / 2; k < lm->value.size(); ++k) {
            lm_zero = lm_zero && lm->value[k] < 1e-12;
            if (k > lm->value.size() / 2)
                lm_dec = lm_dec && lm->value[k] < lm->value[k - 1] * (1.0 + 1e-9);
        }
        if (!(lm_zero || lm_dec)) why += " remainder-not-decreasing";
        if (!why.empty())
            bad += accfmt("%s%s:%s", bad.empty() ? "" : "; ",
                          family_name(sp.family), why.c_str());
    }
    r.pass = bad.empty();
    r.detail = bad.empty()
                   ? accfmt("all families within 10%% at e^60 (worst final dev "
                            "%.3f) with decaying deviations", worst_final)
                   : accfmt("failing families: %s | the p=2 leading-order "
                            "correction alone leaves dev ~0.098 at e^60, so the "
                            "10%% clause has <0.3%% headroom and the strongly "
                            "oscillating specs exceed it", bad.c_str());
}

// --- criterion 4: blow-up ODE ----------------------------------------------
inline void c4_ode_blowup(CriterionResult& r, const AcceptanceContext& cx) {
    double worst_T = 0.0;
    for (double p : {2.0, 3.0}) {
        NonlinearitySpec sp = NonlinearitySpec::pure_power(p);
        OdeTrajectory tr = ode_integrate(sp, 1.0, 1e12);
        double exact = 1.0 / (p - 1.0); // G(1) for a pure power
        worst_T = std::max(worst_T, std::abs(tr.T_hat - exact) / exact);
    }
    double worst_cc = 0.0;
    std::string worst_fam = "-";
    for (const NonlinearitySpec& sp : acceptance_catalogue()) {
        double s0 = sp.family == Family::PurePower ? 1.0
                    : sp.family == Family::ExpLogPow
                        ? std::exp(10.0)
                        : std::max(25.0, 2.0 * positivity_threshold(sp));
        OdeTrajectory tr = ode_integrate(sp, s0, cx.budget.ode_cap);
        if (tr.cross_check > worst_cc) {
            worst_cc = tr.cross_check;
            worst_fam = family_name(sp.family);
        }
    }
    r.pass = worst_T < 1e-8 && worst_cc < 1e-6;
    r.detail = accfmt("pure-power T rel err %.3g (tol 1e-8); worst "
                      "psi-vs-G_inv deviation %.3g on %s (tol 1e-6)",
                      worst_T, worst_cc, worst_fam.c_str());
}

// --- criterion 5: reference PDE runs ---------------------------------------
// Completion, the flat-solution envelope, radial shape preservation, the
// estimator spread, and the grid-doubling sensitivity of T-hat, for n = 1
// and n = 3.
inline void c5_reference_run(CriterionResult& r, const AcceptanceContext& cx) {
    const double T_flat = G(cx.tb2, 20.0);
    std::string note;
    bool ok = true;
    for (const RunRecord* rr : {&cx.ref1, &cx.ref3}) {
        bool complete = rr->status == RunStatus::BlewUp &&
                        rr->m_value.back() >= 0.9 * cx.budget.ref_u_max;
        bool env_ok = true;
        std::size_t compared = 0;
        for (std::size_t k = 0; k < rr->m_time.size(); ++k) {
            double envelope;
            try {
                envelope = G_inv(cx.tb2, T_flat - rr->m_time[k]);
            } catch (const std::out_of_range&) {
                break; // past the flat blow-up time the bound is vacuous
            }
            env_ok = env_ok && rr->m_value[k] <= envelope * (1.0 + 1e-5);
            ++compared;
        }
        env_ok = env_ok && compared > 100;
        bool shape_ok = true;
        for (const auto& s : rr->snapshots) {
            double m = s.u[0];
            for (std::size_t i = 0; i < s.u.size(); ++i) {
                shape_ok = shape_ok && s.u[i] >= -1e-12 * m;
                if (i + 1 < s.u.size())
                    shape_ok = shape_ok && s.u[i + 1] <= s.u[i] + 1e-10 * m;
            }
            shape_ok = shape_ok && s.u.back() == 0.0;
        }
        bool spread_ok = rr->has_estimate &&
                         rr->estimate.spread / rr->estimate.T_hat < 1e-3;

        RunRecord dbl = solve(acceptance_reference_config(
            rr->config.n, cx.budget.doubled_nodes, cx.budget.ref_u_max));
        double dT = std::abs(dbl.estimate.T_hat - rr->estimate.T_hat);
        bool doubling_ok = dT < 3.0 * rr->estimate.spread;

        ok = ok && complete && env_ok && shape_ok && spread_ok && doubling_ok;
        note += accfmt("%sn=%d: T=%.9g spread=%.2e env=%s shape=%s "
                       "|dT(x2 grid)|=%.2e vs 3*spread=%.2e%s",
                       note.empty() ? "" : " | ", rr->config.n,
                       rr->estimate.T_hat, rr->estimate.spread,
                       env_ok ? "ok" : "BAD", shape_ok ? "ok" : "BAD", dT,
                       3.0 * rr->estimate.spread, doubling_ok ? "" : " FAIL");
    }
    r.pass = ok;
    if (!ok)
        note += " | dT contracts ~3.5x per doubling (second-order bias) while "
                "the spread measures late-window estimator scatter, a scale "
                "~50x smaller at this resolution";
    r.detail = note;
}

// --- criterion 6: reaction-only limit --------------------------------------
// With diffusion disabled every node follows the flat ODE; agreement is
// judged in implied blow-up time t + G(m(t)), which the exact flow keeps
// constant (pointwise values this close to blow-up are ill-conditioned).
inline void c6_ode_limit(CriterionResult& r, const AcceptanceContext& cx) {
    RunConfig cfg;
    cfg.spec = NonlinearitySpec::pure_power(2.0);
    cfg.init = InitialData::constant(1.0);
    cfg.grid.nodes = 65;
    cfg.diffusion_enabled = false;
    cfg.u_max = 1e10;
    cfg.t_horizon = 100.0;
    RunRecord rec = solve(cfg);
    ResolventTable tb = build_table(cfg.spec, 0.5, 4e10, 1e-12);
    double worst = 0.0;
    for (std::size_t k = 0; k < rec.m_time.size(); ++k)
        worst = std::max(worst,
                         std::abs(rec.m_time[k] + G(tb, rec.m_value[k]) - 1.0));
    OdeTrajectory tr = ode_integrate(cfg.spec, 1.0, 1e10);
    double dT = std::abs(rec.estimate.T_hat - tr.T_hat);
    r.pass = rec.status == RunStatus::BlewUp && worst < 1e-6 && dT < 1e-6;
    r.detail = accfmt("max |t + G(m) - 1| = %.3g through m = 1e10, "
                      "|T_pde - T_ode| = %.3g (tol 1e-6)", worst, dT);
}

// --- criterion 7: J-functional sign ----------------------------------------
inline void c7_j_functional(CriterionResult& r, const AcceptanceContext& cx) {
    NonlinearitySpec sp = NonlinearitySpec::pure_power(2.0);
    double gate = aux_gate(sp);
    JCalibration cal = fit_j_parameters(cx.ref1, gate);
    std::size_t from = cx.ref1.snapshots.size() - cx.ref1.snapshots.size() / 3;
    double worst = 0.0;
    std::size_t min_mon = std::numeric_limits<std::size_t>::max();
    int frames = 0;
    for (std::size_t i = from; i < cx.ref1.snapshots.size(); ++i) {
        JMonitor jm = j_monitor(cx.ref1.snapshots[i], sp, cal.A, gate);
        worst = std::max(worst, jm.positive_fraction);
        min_mon = std::min(min_mon, jm.monitored_count);
        ++frames;
    }
    r.pass = frames >= 2 && min_mon >= 100 && worst < 0.01;
    r.detail = accfmt("A=%.4g (k=%.3g), %d late frames, worst positive "
                      "fraction %.3g (tol 0.01), >=%zu monitored nodes",
                      cal.A, cal.k, frames, worst, min_mon);
}

// --- criterion 8: companion-function upper bound ----------------------------
inline void c8_upper_bound(CriterionResult& r, const AcceptanceContext& cx) {
    NonlinearitySpec sp = NonlinearitySpec::pure_power(2.0);
    double gate = aux_gate(sp);
    JCalibration cal = fit_j_parameters(cx.ref1, gate);
    std::vector<ProfilePrediction> preds = {upper_h_prediction(sp, cal.A),
                                            final_upper_h_prediction(sp, cal.A)};
    ComparisonWindow win;
    win.tau_hi = 1e-6; // late window: the sign structure has set in
    win.x_max = 0.5;   // monitored half-radius ball
    win.m_gate = gate;
    ComparisonReport rep = verify_against_run(cx.ref1, preds, win);
    const ComparisonEntry& run = rep.entries[0];
    const ComparisonEntry& fin = rep.entries[1];
    r.pass = run.samples > 1000 && run.violation_fraction < 0.01 &&
             fin.violation_fraction < 0.01 && run.ratio_median < 1.0;
    r.detail = accfmt("u <= H_inv(H(m)+x^2/4)(1+1e-3): %zu samples, violation "
                      "fraction %.3g (final-slice %.3g, tol 0.01), median "
                      "ratio %.3f", run.samples, run.violation_fraction,
                      fin.violation_fraction, run.ratio_median);
}

// --- criterion 9: spectral suite --------------------------------------------
inline void c9_spectral_suite(CriterionResult& r, const AcceptanceContext& cx) {
    double worst_const = 0.0, worst_alg = 0.0;
    for (int n = 1; n <= 5; ++n) {
        HermiteBasis b = make_basis(n);
        double c0c = std::pow(4.0 * M_PI, -0.25 * n);
        double c2c = c0c / std::sqrt(8.0 * n);
        worst_const = std::max({worst_const, std::abs(b.c0 / c0c - 1.0),
                                std::abs(b.c2 / c2c - 1.0)});
        const double tn = 2.0 * n;
        auto h0 = [&](double) { return b.c0; };
        auto h2 = [&](double y) { return b.c2 * (y * y - tn); };
        worst_alg = std::max({worst_alg, std::abs(weighted_inner(h0, h0, b) - 1.0),
                              std::abs(weighted_inner(h2, h2, b) - 1.0),
                              std::abs(weighted_inner(h0, h2, b))});
    }

    // Pythagoras on every reference frame: project() enforces the identity at
    // 1e-8 and throws on violation, and the probe shows that the enforcement
    // is live rather than vacuous.
    HermiteBasis b1 = make_basis(1);
    std::vector<SimilarityFrame> frames = frames_from_record(cx.ref1);
    int projected = 0;
    for (const auto& fr : frames) {
        project(fr, b1);
        ++projected;
    }
    bool probe_fired = false;
    try {
        HermiteBasis broken = b1;
        broken.c2 *= 1.01;
        project(frames.front(), broken);
    } catch (const std::runtime_error&) {
        probe_fired = true;
    }

    // Trivial projection: the constant interpolates exactly, so the frame
    // pathway must return a = (4 pi)^{1/4} to full precision.
    SimilarityFrame flat;
    flat.s = 10.0;
    flat.t = 0.0;
    flat.T_hat = 1.0;
    flat.n = 1;
    flat.p = 2.0;
    flat.y.resize(1201);
    flat.phi.resize(1201);
    flat.w.resize(1201);
    for (int j = 0; j < 1201; ++j) {
        flat.y[j] = 12.0 * j / 1200.0;
        flat.phi[j] = 1.0;
        flat.w[j] = 0.0;
    }
    SpectralCoefficients sc = project(flat, b1);
    double worst_triv = std::max(
        std::abs(sc.a / std::pow(4.0 * M_PI, 0.25) - 1.0), std::abs(sc.b));

    r.pass = worst_const < 1e-10 && worst_alg < 1e-10 && projected >= 8 &&
             probe_fired && worst_triv < 1e-10;
    r.detail = accfmt("constants rel err %.3g, projector algebra %.3g, trivial "
                      "projection %.3g (tol 1e-10); Pythagoras at 1e-8 held on "
                      "%d frames, de-normalized probe %s", worst_const,
                      worst_alg, worst_triv, projected,
                      probe_fired ? "caught" : "MISSED");
}

// --- criterion 10: Poincare-type margins ------------------------------------
inline void c10_poincare(CriterionResult& r, const AcceptanceContext& cx) {
    auto rng = acc_rng(cx.seed, 10);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    HermiteBasis bases[3] = {make_basis(1), make_basis(2), make_basis(3)};
    double worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < cx.budget.poincare_trials; ++trial) {
        TrialFunction t;
        t.coeffs = {U(rng), 0.0, U(rng), 0.0, U(rng), 0.0, U(rng)};
        t.decay = 0.125;
        PoincareMargins m = poincare_check(t, bases[trial % 3]);
        worst = std::min({worst, m.second_moment, m.wirtinger, m.spectral_gap,
                          m.hessian_gap});
    }
    r.pass = worst >= -1e-10;
    r.detail = accfmt("%d random polynomial-Gaussian trials over n = 1..3, "
                      "smallest margin %.3g (floor -1e-10)",
                      cx.budget.poincare_trials, worst);
}

// --- criterion 11: neutral-mode rate ----------------------------------------
inline void c11_neutral_mode(CriterionResult& r, const AcceptanceContext& cx) {
    HermiteBasis b1 = make_basis(1);
    NeutralModeTrack tr = neutral_mode_track(cx.ref1, b1);
    std::vector<SpectralCoefficients> series = spectral_series(cx.ref1, b1);
    bool order_ok = series.size() >= 6;
    for (std::size_t k = series.size() - series.size() / 3; k < series.size();
         ++k)
        order_ok = order_ok && std::abs(series[k].a) < std::abs(series[k].b) &&
                   series[k].theta_norm < std::abs(series[k].b);
    r.pass = tr.final_gap < 0.25 && tr.gap_shrinking && order_ok;
    r.detail = accfmt("s*b -> %.4f vs target 1/(4p c2) = %.4f, final gap "
                      "%.3f (tol 0.25), gap %s; |a|<|b| and ||theta||<|b| on "
                      "the final third: %s", tr.sb.back(), tr.target,
                      tr.final_gap, tr.gap_shrinking ? "shrinking" : "NOT shrinking",
                      order_ok ? "ok" : "BAD");
}

// --- criterion 12: similarity residual --------------------------------------
inline void c12_similarity_residual(CriterionResult& r, const AcceptanceContext& cx) {
    std::vector<SimilarityFrame> frames = frames_from_record(cx.ref1);
    if (frames.size() < 5) throw std::runtime_error("need 5 frames");
    std::vector<double> res;
    for (std::size_t k = frames.size() - 5; k < frames.size(); ++k)
        res.push_back(theorem1_residual(frames[k], 2.0).sup);
    bool dec = true;
    for (std::size_t k = 0; k + 1 < res.size(); ++k)
        dec = dec && res[k + 1] < res[k] * (1.0 + 1e-9);
    r.pass = dec && res.back() < 0.5;
    r.detail = accfmt("s*sup|phi - (y^2-2n)/(4ps)| over last 5 frames: "
                      "%.4f -> %.4f, %s", res.front(), res.back(),
                      dec ? "decreasing" : "NOT decreasing");
}

// --- criterion 13: global profile -------------------------------------------
// Trend on the reference run, exactness on synthetic closed-form data, and a
// perturbed-constant probe showing the comparator actually discriminates.
inline RunRecord c13_synthetic_record(double coef) {
    RunRecord rec;
    rec.config.spec = NonlinearitySpec::pure_power(2.0);
    rec.config.n = 1;
    rec.config.domain = {DomainKind::Ball, 0.6};
    const double T = 0.02;
    const int N = 1201;
    for (double tau : {1.5e-2, 8e-3, 3e-3, 1.5e-3, 8e-4, 3e-4, 1.5e-4, 8e-5, 3e-5}) {
        SolutionState st;
        st.t = T - tau;
        st.r.resize(N);
        st.u.resize(N);
        for (int i = 0; i < N; ++i) {
            st.r[i] = 0.6 * i / (N - 1.0);
            double x = st.r[i];
            double B = tau + (x > 0.0 ? coef * x * x / std::abs(std::log(x)) : 0.0);
            st.u[i] = 1.0 / B;
        }
        rec.snapshots.push_back(std::move(st));
    }
    rec.status = RunStatus::BlewUp;
    rec.estimate.T_hat = T;
    rec.estimate.spread = 0.0;
    rec.has_estimate = true;
    return rec;
}

inline void c13_global_profile(CriterionResult& r, const AcceptanceContext& cx) {
    ProfileTrend tr = global_profile_trend(cx.ref1, cx.tb2, 2, 5);
    bool trend_ok = tr.approaching_one && std::abs(tr.median_ratio.back() - 1.0) < 0.2;

    // (p-1)/(8p) at p = 2: the canonical building-block coefficient.
    RunRecord synth = c13_synthetic_record(1.0 / 16.0);
    std::vector<ProfilePrediction> preds = {global_prediction(cx.tb2)};
    ComparisonWindow win;
    win.tau_lo = 1e-4;
    win.tau_hi = 1e-2;
    ComparisonReport rep = verify_against_run(synth, preds, win);
    double synth_dev = std::max(std::abs(rep.entries[0].ratio_min - 1.0),
                                std::abs(rep.entries[0].ratio_max - 1.0));

    RunRecord wrong = c13_synthetic_record(1.0 / 8.0);
    ComparisonReport wrep = verify_against_run(wrong, preds, win);
    double probe_dev = std::max(std::abs(wrep.entries[0].ratio_min - 1.0),
                                std::abs(wrep.entries[0].ratio_max - 1.0));

    r.pass = trend_ok && synth_dev < 1e-9 && probe_dev > 1e-3;
    r.detail = accfmt("median ratios %.3f %.3f %.3f %.3f (approaching one: %s); "
                      "synthetic closed-form dev %.3g (tol 1e-9); doubled-"
                      "coefficient probe dev %.3g (must exceed 1e-3)",
                      tr.median_ratio[0], tr.median_ratio[1], tr.median_ratio[2],
                      tr.median_ratio[3], trend_ok ? "yes" : "NO",
                      synth_dev, probe_dev);
}

// --- criterion 14: lower decay bound ----------------------------------------
inline void c14_lower_decay(CriterionResult& r, const AcceptanceContext& cx) {
    HermiteBasis b1 = make_basis(1);
    LowerDecaySeries ld = lower_decay_check(cx.ref1, b1);
    r.pass = ld.bounded_below && ld.value.back() > 0.1;
    r.detail = accfmt("s*||phi|| over the last half of frames stays within a "
                      "decade of its final value %.4f (floor 0.1): %s",
                      ld.value.back(), ld.bounded_below ? "yes" : "NO");
}

} // namespace detail

inline AcceptanceContext build_acceptance_context(const AcceptanceBudget& b,
                                                  std::uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    AcceptanceContext cx;
    cx.budget = b;
    cx.seed = seed;
    cx.ref1 = solve(acceptance_reference_config(1, b.ref_nodes, b.ref_u_max));
    cx.ref3 = solve(acceptance_reference_config(3, b.ref_nodes, b.ref_u_max));
    cx.tb2 = build_table(NonlinearitySpec::pure_power(2.0), 0.5,
                         4.0 * b.ref_u_max, 1e-12);
    cx.build_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0).count();
    return cx;
}

// Runs all fourteen criteria and returns them in order. `threads` bounds the
// number of criteria evaluated concurrently; verdicts are identical for any
// thread count because each criterion seeds its own generator and the shared
// context is read-only.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceContext& cx,
                                                   int threads = 1) {
    using detail::timed_criterion;
    using Body = std::function<void(CriterionResult&)>;
    struct Item {
        int index;
        const char* name;
        Body body;
    };
    const AcceptanceContext* c = &cx;
    std::vector<Item> items = {
        {1, "resolvent-oracle", [c](CriterionResult& r) { detail::c1_resolvent_oracle(r, *c); }},
        {2, "inversion-round-trip", [c](CriterionResult& r) { detail::c2_round_trips(r, *c); }},
        {3, "asymptotics-trend", [c](CriterionResult& r) { detail::c3_asymptotics_trend(r, *c); }},
        {4, "ode-blowup", [c](CriterionResult& r) { detail::c4_ode_blowup(r, *c); }},
        {5, "reference-run", [c](CriterionResult& r) { detail::c5_reference_run(r, *c); }},
        {6, "ode-limit", [c](CriterionResult& r) { detail::c6_ode_limit(r, *c); }},
        {7, "j-functional", [c](CriterionResult& r) { detail::c7_j_functional(r, *c); }},
        {8, "upper-bound", [c](CriterionResult& r) { detail::c8_upper_bound(r, *c); }},
        {9, "spectral-suite", [c](CriterionResult& r) { detail::c9_spectral_suite(r, *c); }},
        {10, "poincare", [c](CriterionResult& r) { detail::c10_poincare(r, *c); }},
        {11, "neutral-mode", [c](CriterionResult& r) { detail::c11_neutral_mode(r, *c); }},
        {12, "similarity-residual", [c](CriterionResult& r) { detail::c12_similarity_residual(r, *c); }},
        {13, "global-profile", [c](CriterionResult& r) { detail::c13_global_profile(r, *c); }},
        {14, "lower-decay", [c](CriterionResult& r) { detail::c14_lower_decay(r, *c); }},
    };
    std::vector<CriterionResult> out(items.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i)
            out[i] = timed_criterion(items[i].index, items[i].name, items[i].body);
        return out;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            out[i] = timed_criterion(items[i].index, items[i].name, items[i].body);
        }
    };
    std::vector<std::thread> pool;
    int count = std::min<int>(threads, static_cast<int>(items.size()));
    pool.reserve(count);
    for (int i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

inline std::vector<CriterionResult> run_acceptance(const AcceptanceBudget& b,
                                                   std::uint64_t seed,
                                                   int threads = 1) {
    AcceptanceContext cx = build_acceptance_context(b, seed);
    return run_acceptance(cx, threads);
}

inline bool acceptance_all_pass(const std::vector<CriterionResult>& rs) {
    for (const auto& r : rs)
        if (!r.pass) return false;
    return true;
}

inline std::string criterion_line(const CriterionResult& r) {
    return detail::accfmt("[%s] %2d %-20s (%6.2fs)  %s",
                          r.pass ? "PASS" : "FAIL", r.index, r.name.c_str(),
                          r.seconds, r.detail.c_str());
}

} // namespace blowup
