#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "interp.hpp"
#include "nonlinearity.hpp"
#include "pde.hpp"
#include "resolvent.hpp"

namespace blowup {

// ---------------------------------------------------------------------------
// Pointwise profile formulas
// ---------------------------------------------------------------------------

// Universal time-space argument fed to G^{-1}:
//
//     T - t + (p-1)/(8p) * |x|^2 / |log|x||.
//
// The same quantity is sometimes written with coefficient (p-1)/(4p) against
// |log |x|^2|; the two are identical, and this module canonicalizes on the
// |log|x|| form so the factor of two cannot be dropped twice or not at all.
// t = T is allowed as long as x != 0 (the final-time slice).
inline double building_block(double p, double x, double t, double T) {
    if (!(p > 1.0)) throw std::invalid_argument("building_block: need p > 1");
    if (!(t <= T)) throw std::invalid_argument("building_block: need t <= T");
    double ax = std::abs(x);
    if (!(ax < 1.0)) throw std::domain_error("building_block: need |x| < 1");
    double arg = T - t;
    if (ax > 0.0) arg += (p - 1.0) / (8.0 * p) * ax * ax / std::abs(std::log(ax));
    if (!(arg > 0.0))
        throw std::domain_error("building_block: degenerate argument (x = 0, t = T)");
    return arg;
}

// Global space-time profile G^{-1}(building block). For the pure power this
// has the closed form ((p-1) B)^{-1/(p-1)}, reproduced to table accuracy.
inline double global_profile(const ResolventTable& tb, double x, double t,
                             double T) {
    return G_inv(tb, building_block(tb.spec.p, x, t, T));
}

// Final profile u(x, T): the t = T slice of the global formula, equal to it
// bit for bit (the T - t term vanishes exactly).
inline double final_profile(const ResolventTable& tb, double x) {
    if (!(std::abs(x) > 0.0))
        throw std::domain_error("final_profile: the origin has no final value");
    return global_profile(tb, x, 0.0, 0.0);
}

// Refined profile on the intermediate scale xi = x / sqrt((T-t)|log(T-t)|):
//
//     G^{-1}((T - t) (1 + (p-1)/(4p) |xi|^2)).
//
// The statement is uniform only on |xi| <= K for fixed K; xi_max stands in
// for the caller's K. At xi = 0 this is exactly psi(t).
inline double spacetime_profile(const ResolventTable& tb, double xi, double t,
                                double T, double xi_max = 8.0) {
    const double p = tb.spec.p;
    if (!(t < T)) throw std::invalid_argument("spacetime_profile: need t < T");
    if (!(std::abs(xi) <= xi_max))
        throw std::domain_error("spacetime_profile: |xi| above the uniformity window");
    double arg = (T - t) * (1.0 + (p - 1.0) / (4.0 * p) * xi * xi);
    return G_inv(tb, arg);
}

// Fully explicit asymptotics: with beta = 1/(p-1) and kappa = beta^beta,
//
//     kappa * B^{-beta} * L(B^{-beta})^{-beta},
//
// B the building block. This is the leading form of G^{-1} applied to B; it
// agrees with global_profile exactly for the pure power (L = 1) and only as
// B -> 0 otherwise, with an error governed by how slowly L varies: the
// resolvent inversion evaluates L at the true profile height, the explicit
// formula at B^{-beta}, and the two heights differ by an L-sized factor.
inline double explicit_profile(const NonlinearitySpec& sp, double x, double t,
                               double T) {
    double B = building_block(sp.p, x, t, T);
    double beta = 1.0 / (sp.p - 1.0);
    double s = std::pow(B, -beta);
    double L = detail::safe_L(sp, s, "explicit_profile");
    return std::pow(beta, beta) * s * std::pow(L, -beta);
}

// Pointwise upper bound through the companion integral:
//
//     H^{-1}(H(m0) + |x|^2 / 4),      m0 = u(0, t).
//
// Passing m0 = +infinity selects the final-time variant H^{-1}(|x|^2/4),
// the limit of the bound as t -> T (H vanishes at infinity). Monotone
// decreasing in |x|, and never above the final-time variant at the same x:
// H(m0) >= 0 pushes the argument up and H^{-1} is decreasing.
inline double upper_H_profile(const NonlinearitySpec& sp, double A, double m0,
                              double x, double quad_tol = 1e-12) {
    double arg = 0.25 * x * x;
    if (std::isinf(m0) && m0 > 0.0) {
        if (!(arg > 0.0))
            throw std::domain_error("upper_H_profile: final-time variant needs x != 0");
        return H_inv(sp, A, arg, quad_tol);
    }
    return H_inv(sp, A, H(sp, A, m0, quad_tol) + arg, quad_tol);
}

// ---------------------------------------------------------------------------
// Run comparison
// ---------------------------------------------------------------------------

enum class ProfileKind { Global, Final, SpaceTime, Explicit, UpperH, FinalUpperH };

inline const char* profile_kind_name(ProfileKind k) {
    switch (k) {
        case ProfileKind::Global: return "global";
        case ProfileKind::Final: return "final";
        case ProfileKind::SpaceTime: return "spacetime";
        case ProfileKind::Explicit: return "explicit";
        case ProfileKind::UpperH: return "upper_h";
        case ProfileKind::FinalUpperH: return "final_upper_h";
    }
    return "unknown";
}

// One formula to hold against a run. Non-owning: the referenced table and
// spec must outlive the prediction. G-backed kinds read `table`; Explicit
// and the H-kinds read `spec`; the H-kinds also carry the companion
// constant A. T_hat left NaN means "use the run's own estimate".
struct ProfilePrediction {
    ProfileKind kind = ProfileKind::Global;
    double T_hat = std::numeric_limits<double>::quiet_NaN();
    double A = 0.0;
    const ResolventTable* table = nullptr;
    const NonlinearitySpec* spec = nullptr;
};

inline ProfilePrediction global_prediction(const ResolventTable& tb) {
    ProfilePrediction pr;
    pr.kind = ProfileKind::Global;
    pr.table = &tb;
    return pr;
}

inline ProfilePrediction final_prediction(const ResolventTable& tb) {
    ProfilePrediction pr;
    pr.kind = ProfileKind::Final;
    pr.table = &tb;
    return pr;
}

inline ProfilePrediction spacetime_prediction(const ResolventTable& tb) {
    ProfilePrediction pr;
    pr.kind = ProfileKind::SpaceTime;
    pr.table = &tb;
    return pr;
}

inline ProfilePrediction explicit_prediction(const NonlinearitySpec& sp) {
    ProfilePrediction pr;
    pr.kind = ProfileKind::Explicit;
    pr.spec = &sp;
    return pr;
}

inline ProfilePrediction upper_h_prediction(const NonlinearitySpec& sp, double A) {
    ProfilePrediction pr;
    pr.kind = ProfileKind::UpperH;
    pr.spec = &sp;
    pr.A = A;
    return pr;
}

inline ProfilePrediction final_upper_h_prediction(const NonlinearitySpec& sp,
                                                  double A) {
    ProfilePrediction pr;
    pr.kind = ProfileKind::FinalUpperH;
    pr.spec = &sp;
    pr.A = A;
    return pr;
}

// Sample window for verify_against_run. Snapshots whose tau = T_hat - t lies
// in [tau_lo, tau_hi) participate. G-backed kinds then keep grid nodes in
// the annulus
//
//     2 tau <= |x|^2 <= K^2 tau |log tau|
//
// (intersected with the [x_min, x_max] clip) - inside it the core has
// already passed, outside it nothing has happened yet. The H-kinds are
// pointwise bounds valid on a whole ball, so they skip the annulus and
// instead keep nodes with |x| <= x_max and u >= m_gate. Final and
// FinalUpperH read only the latest participating snapshot.
struct ComparisonWindow {
    double tau_lo = 0.0;
    double tau_hi = std::numeric_limits<double>::infinity();
    double K = 2.0;
    double x_min = 0.0;
    double x_max = std::numeric_limits<double>::infinity();
    double m_gate = 0.0;
    double upper_slack = 1e-3;  // headroom before an H-bound counts as violated
    bool keep_samples = false;
};

struct ComparisonSample {
    ProfileKind kind = ProfileKind::Global;
    double x = 0.0, t = 0.0, u = 0.0, prediction = 0.0, ratio = 0.0;
};

struct ComparisonEntry {
    ProfileKind kind = ProfileKind::Global;
    std::size_t samples = 0;
    std::size_t skipped = 0;  // out of inversion range or above the xi window
    double ratio_min = 0.0;
    double ratio_max = 0.0;
    double ratio_median = 0.0;
    double violation_fraction = 0.0;  // H-kinds; 0 for the others
};

struct ComparisonReport {
    ComparisonWindow window;
    double T_hat = 0.0;
    std::vector<std::size_t> snapshot_indices;
    std::vector<ComparisonEntry> entries;
    std::vector<ComparisonSample> samples;  // filled when keep_samples
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median_of: empty sample");
    std::sort(v.begin(), v.end());
    std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

// Log-log sampled companion integral for bulk bound evaluation: a direct
// H_inv call is ~10 adaptive quadratures, and run comparisons ask for tens
// of thousands of bound values. 64 nodes per decade keeps the interpolation
// error near 1e-8 relative, four orders below the comparison slack.
struct HTable {
    double A = 0.0;
    double x_gate = 0.0;  // domain gate (f >= e from here on)
    double h_top = 0.0;   // H at the gate: the largest representable argument
    double h_bot = 0.0;   // H at the far end of the grid
    MonotoneCubic lh_of_lx;
    MonotoneCubic lx_of_lh;  // inverse branch
    double value(double X) const { return std::exp(lh_of_lx(std::log(X))); }
    double inverse(double Y) const { return std::exp(lx_of_lh(std::log(Y))); }
};

inline HTable build_h_table(const NonlinearitySpec& sp, double A, double X_hi,
                            double quad_tol = 1e-10) {
    double X_lo = h_domain_gate(sp);
    if (!(X_hi > 4.0 * X_lo))
        throw std::invalid_argument("build_h_table: X_hi inside the domain gate");
    int n = static_cast<int>(std::ceil(64.0 * std::log10(X_hi / X_lo))) + 1;
    std::vector<double> lx(n), lh(n);
    double step = std::log(X_hi / X_lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
        lx[i] = std::log(X_lo) + i * step;
        lh[i] = std::log(H(sp, A, std::exp(lx[i]), quad_tol));
    }
    HTable out;
    out.A = A;
    out.x_gate = X_lo;
    out.h_top = std::exp(lh.front());
    out.h_bot = std::exp(lh.back());
    out.lh_of_lx = MonotoneCubic(lx, lh);
    // H is strictly decreasing, so the reversed pairs give the inverse branch
    // on an increasing grid.
    std::vector<double> rlh(lh.rbegin(), lh.rend());
    std::vector<double> rlx(lx.rbegin(), lx.rend());
    out.lx_of_lh = MonotoneCubic(std::move(rlh), std::move(rlx));
    return out;
}

inline bool is_h_kind(ProfileKind k) {
    return k == ProfileKind::UpperH || k == ProfileKind::FinalUpperH;
}

inline bool is_final_kind(ProfileKind k) {
    return k == ProfileKind::Final || k == ProfileKind::FinalUpperH;
}

}  // namespace detail

// Holds each prediction against the run's snapshots over the given window
// and reports ratio statistics of u / prediction. For the H-kinds the
// headline number is the violation fraction: how many gated nodes exceed
// the bound by more than the slack. Samples that fall outside a formula's
// inversion range are skipped and counted, not treated as errors: the
// window edges legitimately brush against table ends.
inline ComparisonReport verify_against_run(
    const RunRecord& rec, const std::vector<ProfilePrediction>& preds,
    const ComparisonWindow& win) {
    if (preds.empty())
        throw std::invalid_argument("verify_against_run: no predictions");
    if (!rec.has_estimate)
        throw std::invalid_argument("verify_against_run: record carries no estimate");
    if (!(win.tau_lo >= 0.0) || !(win.tau_hi > win.tau_lo))
        throw std::invalid_argument("verify_against_run: malformed tau window");
    if (!(win.K > 0.0) || !(win.x_min >= 0.0) || !(win.x_max > win.x_min))
        throw std::invalid_argument("verify_against_run: malformed spatial clip");

    const double T = rec.estimate.T_hat;
    ComparisonReport rep;
    rep.window = win;
    rep.T_hat = T;
    for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
        double tau = T - rec.snapshots[i].t;
        if (tau > 0.0 && tau >= win.tau_lo && tau < win.tau_hi)
            rep.snapshot_indices.push_back(i);
    }
    if (rep.snapshot_indices.empty())
        throw std::invalid_argument("verify_against_run: no snapshots in window");

    // H-tables are shared between predictions with the same spec and A.
    struct HKey {
        const NonlinearitySpec* spec;
        double A;
    };
    std::vector<HKey> h_keys;
    std::vector<detail::HTable> h_tables;
    double u0_peak = 0.0;
    for (std::size_t i : rep.snapshot_indices)
        u0_peak = std::max(u0_peak, rec.snapshots[i].u[0]);

    for (const ProfilePrediction& pr : preds) {
        if (detail::is_h_kind(pr.kind)) {
            if (!pr.spec)
                throw std::invalid_argument("verify_against_run: H-kind without spec");
            bool have = false;
            for (const HKey& k : h_keys)
                if (k.spec == pr.spec && k.A == pr.A) have = true;
            if (!have) {
                h_keys.push_back({pr.spec, pr.A});
                h_tables.push_back(
                    detail::build_h_table(*pr.spec, pr.A, 4.0 * u0_peak));
            }
        } else if (pr.kind == ProfileKind::Explicit) {
            if (!pr.spec)
                throw std::invalid_argument("verify_against_run: Explicit without spec");
        } else if (!pr.table) {
            throw std::invalid_argument("verify_against_run: G-kind without table");
        }
    }

    for (const ProfilePrediction& pr : preds) {
        double T_pred = std::isnan(pr.T_hat) ? T : pr.T_hat;
        const detail::HTable* ht = nullptr;
        for (std::size_t k = 0; k < h_keys.size(); ++k)
            if (h_keys[k].spec == pr.spec && h_keys[k].A == pr.A)
                ht = &h_tables[k];

        ComparisonEntry entry;
        entry.kind = pr.kind;
        std::vector<double> ratios;
        std::size_t violations = 0;

        std::vector<std::size_t> snaps = rep.snapshot_indices;
        if (detail::is_final_kind(pr.kind)) snaps = {rep.snapshot_indices.back()};

        for (std::size_t si : snaps) {
            const SolutionState& s = rec.snapshots[si];
            double tau = T - s.t;
            double ann_lo2 = 2.0 * tau;
            double ann_hi2 = win.K * win.K * tau * std::abs(std::log(tau));
            for (std::size_t j = 0; j < s.r.size(); ++j) {
                double x = s.r[j];
                if (x < win.x_min || x > win.x_max) continue;
                double prediction;
                if (detail::is_h_kind(pr.kind)) {
                    if (s.u[j] < win.m_gate) continue;
                    double arg = 0.25 * x * x;
                    if (pr.kind == ProfileKind::UpperH) {
                        double m0 = s.u[0];
                        if (m0 < ht->x_gate) {
                            ++entry.skipped;
                            continue;
                        }
                        arg += ht->value(m0);
                    }
                    if (!(arg >= ht->h_bot) || !(arg <= ht->h_top)) {
                        ++entry.skipped;
                        continue;
                    }
                    prediction = ht->inverse(arg);
                    if (s.u[j] > prediction * (1.0 + win.upper_slack)) ++violations;
                } else {
                    double x2 = x * x;
                    if (x2 < ann_lo2 || x2 > ann_hi2) continue;
                    try {
                        switch (pr.kind) {
                            case ProfileKind::Global:
                                prediction = global_profile(*pr.table, x, s.t, T_pred);
                                break;
                            case ProfileKind::Final:
                                prediction = final_profile(*pr.table, x);
                                break;
                            case ProfileKind::SpaceTime: {
                                double xi =
                                    x / std::sqrt(tau * std::abs(std::log(tau)));
                                prediction = spacetime_profile(
                                    *pr.table, xi, s.t, T_pred,
                                    std::max(8.0, win.K));
                                break;
                            }
                            default:
                                prediction =
                                    explicit_profile(*pr.spec, x, s.t, T_pred);
                        }
                    } catch (const std::out_of_range&) {
                        ++entry.skipped;
                        continue;
                    } catch (const std::domain_error&) {
                        ++entry.skipped;
                        continue;
                    }
                }
                double ratio = s.u[j] / prediction;
                ratios.push_back(ratio);
                if (win.keep_samples)
                    rep.samples.push_back(
                        {pr.kind, x, s.t, s.u[j], prediction, ratio});
            }
        }

        if (ratios.empty())
            throw std::runtime_error(
                std::string("verify_against_run: empty window for kind ") +
                profile_kind_name(pr.kind));
        entry.samples = ratios.size();
        entry.ratio_min = *std::min_element(ratios.begin(), ratios.end());
        entry.ratio_max = *std::max_element(ratios.begin(), ratios.end());
        entry.ratio_median = detail::median_of(ratios);
        if (detail::is_h_kind(pr.kind))
            entry.violation_fraction =
                static_cast<double>(violations) / static_cast<double>(entry.samples);
        rep.entries.push_back(entry);
    }
    return rep;
}

// Median u / global-prediction ratio over the shrinking windows
// tau in [10^-k, 10^-(k-1)), k = k_lo .. k_hi. The asymptotic statement
// carries no rate, so the verdict is a trend: each window's median must sit
// strictly closer to 1 than the previous one.
struct ProfileTrend {
    std::vector<int> exponent;
    std::vector<double> median_ratio;
    std::vector<std::size_t> sample_count;
    bool approaching_one = false;
};

inline ProfileTrend global_profile_trend(const RunRecord& rec,
                                         const ResolventTable& tb, int k_lo = 2,
                                         int k_hi = 5, double K = 2.0) {
    if (!(k_lo >= 1) || !(k_hi > k_lo))
        throw std::invalid_argument("global_profile_trend: malformed exponent range");
    std::vector<ProfilePrediction> preds = {global_prediction(tb)};
    ProfileTrend out;
    for (int k = k_lo; k <= k_hi; ++k) {
        ComparisonWindow win;
        win.tau_lo = std::pow(10.0, -k);
        win.tau_hi = std::pow(10.0, -(k - 1));
        win.K = K;
        ComparisonReport rep = verify_against_run(rec, preds, win);
        out.exponent.push_back(k);
        out.median_ratio.push_back(rep.entries[0].ratio_median);
        out.sample_count.push_back(rep.entries[0].samples);
    }
    out.approaching_one = true;
    for (std::size_t i = 1; i < out.median_ratio.size(); ++i)
        if (!(std::abs(out.median_ratio[i] - 1.0) <
              std::abs(out.median_ratio[i - 1] - 1.0)))
            out.approaching_one = false;
    return out;
}

}  // namespace blowup
