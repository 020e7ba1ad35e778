#pragma once
// Similarity-variable analysis of blow-up snapshots.
//
// A run that blows up at time T concentrates along the parabolic scales
// y = x / sqrt(T - t), s = -log(T - t). Rescaling u by the flat solution
// psi(t) = G_inv(T - t) gives w(y, s) = u / psi, and phi = 1 - w measures the
// departure from pure ODE blow-up. This header rescales snapshots into that
// frame and provides the spectral toolbox used to study phi:
//
//   * a weighted Hermite basis {H_0, H_2} orthonormal in L^2_rho,
//     rho = exp(-|y|^2/4), with a stored radial quadrature rule;
//   * projections phi = a H_0 + b H_2 + theta and the neutral-mode track
//     s * b(s) -> 1/(4 p c2);
//   * the convergence residual s * sup |phi - (|y|^2 - 2n)/(4 p s)|;
//   * weighted Poincare-type inequality margins for polynomial * Gaussian
//     trial functions;
//   * the lower-decay series s * ||phi(s)|| (bounded below iff the decay is
//     genuinely algebraic).
//
// Everything is computed at the estimated blow-up time T_hat; since
// s = -log(T_hat - t) is exquisitely sensitive to that estimate, the
// record-level trackers recompute at T_hat +- spread and attach the variation
// as an uncertainty band. Frames whose distance to T_hat is within a small
// multiple of the spread are excluded outright: their rescaling is noise.
//
// Quadrature conventions: inner products against analytic trial functions use
// the basis' stored composite Gauss-Legendre rule with the weight
// S_n rho r^{n-1} folded in; projections of interpolated frames use a rule
// whose panels are aligned with the frame grid, so the reported coefficients
// are insensitive to quadrature refinement (doubling either rule moves them
// at roundoff level only). The gradient of theta is pinned to fourth-order
// finite differences on the frame grid with one-sided boundary stencils.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "interp.hpp"
#include "nonlinearity.hpp"
#include "pde.hpp"
#include "quadrature.hpp"
#include "resolvent.hpp"

namespace blowup {

// ---------------------------------------------------------------------------
// Weighted Hermite basis

struct HermiteBasis {
    int n = 1;           // space dimension
    double y_max = 12.0; // radial truncation of the quadrature support
    double c0 = 0.0;     // H_0 = c0
    double c2 = 0.0;     // H_2 = c2 (|y|^2 - 2n)
    std::vector<double> nodes;   // radial nodes in (0, y_max)
    std::vector<double> weights; // Gauss-Legendre weights * S_n rho r^{n-1}
};

inline double sphere_area(int n) {
    return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

// Composite Gauss-Legendre rule of `panels` x `order` points on [0, y_max]
// with the full radial weight folded in, then the normalizations fixed so
// that ||H_0|| = ||H_2|| = 1 exactly under the stored rule.
inline HermiteBasis make_basis(int n, int panels = 96, double y_max = 12.0,
                               int order = 16) {
    if (n < 1 || n > 10)
        throw std::invalid_argument("basis: dimension must be in [1, 10]");
    if (panels < 8 || y_max < 8.0 || y_max > 40.0)
        throw std::invalid_argument("basis: bad quadrature parameters");
    CompositeRule rule = CompositeRule::build(0.0, y_max, panels, order);
    HermiteBasis b;
    b.n = n;
    b.y_max = y_max;
    b.nodes = rule.x;
    b.weights.resize(rule.w.size());
    const double S = sphere_area(n);
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        double r = rule.x[i];
        b.weights[i] = rule.w[i] * S * std::exp(-0.25 * r * r) *
                       std::pow(r, n - 1);
    }
    CompensatedSum mass, var;
    for (std::size_t i = 0; i < b.nodes.size(); ++i) {
        double r2 = b.nodes[i] * b.nodes[i];
        double h2 = r2 - 2.0 * n;
        mass.add(b.weights[i]);
        var.add(b.weights[i] * h2 * h2);
    }
    b.c0 = 1.0 / std::sqrt(mass.value());
    b.c2 = 1.0 / std::sqrt(var.value());
    return b;
}

struct HermiteConstants {
    double c0, c2;
};

// Quadrature values of the normalization constants; closed Gaussian-moment
// forms are c0 = (4 pi)^{-n/4} and c2 = (8n)^{-1/2} (4 pi)^{-n/4}.
inline HermiteConstants hermite_constants(int n) {
    HermiteBasis b = make_basis(n);
    return {b.c0, b.c2};
}

// Inner product of two functions sampled on the basis nodes.
inline double weighted_inner(const std::vector<double>& fa,
                             const std::vector<double>& fb,
                             const HermiteBasis& basis) {
    if (fa.size() != basis.nodes.size() || fb.size() != basis.nodes.size())
        throw std::invalid_argument("weighted inner product: grid mismatch");
    CompensatedSum acc;
    for (std::size_t i = 0; i < basis.nodes.size(); ++i)
        acc.add(basis.weights[i] * fa[i] * fb[i]);
    return acc.value();
}

// Inner product of two radial callables evaluated at the basis nodes.
template <class FA, class FB>
inline double weighted_inner(const FA& fa, const FB& fb,
                             const HermiteBasis& basis) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < basis.nodes.size(); ++i)
        acc.add(basis.weights[i] * fa(basis.nodes[i]) * fb(basis.nodes[i]));
    return acc.value();
}

// ---------------------------------------------------------------------------
// Similarity frames

struct SimilarityFrame {
    double s = 0.0;     // -log(T_hat - t)
    double t = 0.0;     // lab time of the source snapshot
    double T_hat = 0.0; // blow-up time used for the rescaling
    int n = 1;          // space dimension
    double p = 2.0;     // growth exponent of the nonlinearity
    std::vector<double> y;   // uniform radial grid on [0, Y_max]
    std::vector<double> w;   // u(y sqrt(T_hat - t), t) / psi(t), 0 past domain
    std::vector<double> phi; // 1 - w
};

namespace detail {

constexpr int kFrameCoreNodes = 200;   // snapshot nodes required in |y| <= 4
constexpr double kSpreadGuard = 100.0; // frames closer to T_hat are excluded

// Resolvent table sized from the record's maximum history range, adequate for
// psi(t) = G_inv(T_hat - t) across every usable snapshot.
inline ResolventTable similarity_table(const RunRecord& rec) {
    if (rec.m_value.empty())
        throw std::invalid_argument("similarity: record has no history");
    double m_lo = rec.m_value.front(), m_hi = m_lo;
    for (double v : rec.m_value) {
        m_lo = std::min(m_lo, v);
        m_hi = std::max(m_hi, v);
    }
    double floor = positivity_threshold(rec.config.spec) + 1e-9;
    double X_lo = std::max({floor, 0.25 * m_lo, 1e-6});
    double X_hi = std::min(std::max(4.0 * m_hi, 40.0 * X_lo),
                           0.5 * resolvent_x_cap(rec.config.spec.p));
    return build_table(rec.config.spec, X_lo, X_hi, 1e-12);
}

}  // namespace detail

// Rescale one snapshot to similarity variables around T_hat (the record's
// estimate unless overridden). w is interpolated onto a uniform y-grid and
// extended by zero beyond the domain image, the cut-off convention under
// which the convergence theorem is stated.
inline SimilarityFrame to_similarity(const RunRecord& rec,
                                     std::size_t snap_index, double Y_max,
                                     const ResolventTable& tb,
                                     double T_override =
                                         std::numeric_limits<double>::quiet_NaN(),
                                     int y_nodes = 1201) {
    if (snap_index >= rec.snapshots.size())
        throw std::invalid_argument("similarity: snapshot index out of range");
    if (!(Y_max > 1.0) || y_nodes < 9)
        throw std::invalid_argument("similarity: bad frame parameters");
    double T = std::isnan(T_override) ? (rec.has_estimate
                                             ? rec.estimate.T_hat
                                             : std::numeric_limits<double>::quiet_NaN())
                                      : T_override;
    if (!std::isfinite(T))
        throw std::invalid_argument("similarity: blow-up estimate unavailable");
    const SolutionState& snap = rec.snapshots[snap_index];
    if (!(snap.t < T))
        throw std::invalid_argument("similarity: snapshot at or past T_hat");

    double lambda = std::sqrt(T - snap.t);
    double core = 4.0 * lambda;
    std::size_t inside =
        std::upper_bound(snap.r.begin(), snap.r.end(), core) - snap.r.begin();
    if (inside < detail::kFrameCoreNodes)
        throw std::runtime_error(
            "similarity: unresolved core, " + std::to_string(inside) +
            " snapshot nodes inside |y| <= 4 (need " +
            std::to_string(detail::kFrameCoreNodes) + ")");

    double psi_t = G_inv(tb, T - snap.t);
    MonotoneCubic mc(snap.r, snap.u);
    double R_dom = snap.r.back();

    SimilarityFrame fr;
    fr.s = -std::log(T - snap.t);
    fr.t = snap.t;
    fr.T_hat = T;
    fr.n = rec.config.n;
    fr.p = rec.config.spec.p;
    fr.y.resize(y_nodes);
    fr.w.resize(y_nodes);
    fr.phi.resize(y_nodes);
    for (int j = 0; j < y_nodes; ++j) {
        double y = Y_max * j / (y_nodes - 1.0);
        double r = y * lambda;
        double w = r <= R_dom ? std::max(0.0, mc(r)) / psi_t : 0.0;
        fr.y[j] = y;
        fr.w[j] = w;
        fr.phi[j] = 1.0 - w;
    }
    return fr;
}

inline SimilarityFrame to_similarity(const RunRecord& rec,
                                     std::size_t snap_index, double Y_max) {
    return to_similarity(rec, snap_index, Y_max, detail::similarity_table(rec));
}

// All usable frames of a record: snapshots strictly before T_hat with a
// resolved core, excluding those within kSpreadGuard * spread of T_hat
// (there the rescaling is dominated by the estimate's own uncertainty).
inline std::vector<SimilarityFrame> frames_from_record(
    const RunRecord& rec, double Y_max, const ResolventTable& tb,
    double T_override = std::numeric_limits<double>::quiet_NaN()) {
    double T_sel = std::isnan(T_override)
                       ? (rec.has_estimate
                              ? rec.estimate.T_hat
                              : std::numeric_limits<double>::quiet_NaN())
                       : T_override;
    if (!std::isfinite(T_sel))
        throw std::invalid_argument("similarity: blow-up estimate unavailable");
    double spread = rec.has_estimate ? rec.estimate.spread : 0.0;
    double tau_min = std::max(detail::kSpreadGuard * spread,
                              32.0 * std::numeric_limits<double>::epsilon() * T_sel);
    std::vector<SimilarityFrame> frames;
    for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
        if (!(rec.snapshots[i].t < T_sel - tau_min)) continue;
        try {
            frames.push_back(to_similarity(rec, i, Y_max, tb, T_override));
        } catch (const std::runtime_error&) {
            // unresolved core at this frame's scale: skip, do not fabricate
        }
    }
    return frames;
}

inline std::vector<SimilarityFrame> frames_from_record(const RunRecord& rec,
                                                       double Y_max = 12.0) {
    return frames_from_record(rec, Y_max, detail::similarity_table(rec));
}

// ---------------------------------------------------------------------------
// Spectral decomposition

struct SpectralCoefficients {
    double s = 0.0;
    double a = 0.0;               // (phi, H_0)
    double b = 0.0;               // (phi, H_2)
    double theta_norm = 0.0;      // ||phi - a H_0 - b H_2||
    double theta_grad_norm = 0.0; // ||grad theta||
};

namespace detail {

// Composite Gauss-Legendre rule whose panels coincide with the frame's grid
// intervals, truncated at y_cap. Against a piecewise-cubic interpolant the
// per-panel integrand is cubic times an entire weight, so refining the rule
// moves nothing beyond roundoff.
struct FrameRule {
    std::vector<double> x, w;
};

inline FrameRule frame_rule(const std::vector<double>& y, int n, double y_cap,
                            int order) {
    std::vector<double> gx, gw;
    gauss_legendre(order, gx, gw);
    const double S = sphere_area(n);
    FrameRule fr;
    fr.x.reserve(y.size() * order);
    fr.w.reserve(y.size() * order);
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        double lo = y[i], hi = std::min(y[i + 1], y_cap);
        if (!(hi > lo)) break;
        double h = hi - lo;
        for (int j = 0; j < order; ++j) {
            double r = lo + 0.5 * h * (gx[j] + 1.0);
            fr.x.push_back(r);
            fr.w.push_back(0.5 * h * gw[j] * S * std::exp(-0.25 * r * r) *
                           std::pow(r, n - 1));
        }
    }
    return fr;
}

inline void check_frame(const SimilarityFrame& fr) {
    std::size_t m = fr.y.size();
    if (m < 9 || fr.w.size() != m || fr.phi.size() != m)
        throw std::invalid_argument("similarity: malformed frame");
    for (std::size_t i = 0; i + 1 < m; ++i)
        if (!(fr.y[i] < fr.y[i + 1]))
            throw std::invalid_argument("similarity: frame grid not increasing");
}

// Composite Simpson with a 3/8 tail for even node counts; used for the
// finite-difference gradient seminorm on the frame's own grid.
inline double simpson(const std::vector<double>& x,
                      const std::vector<double>& f, std::size_t count) {
    if (count < 4) throw std::invalid_argument("similarity: integral too short");
    double h = x[1] - x[0];
    for (std::size_t i = 1; i + 1 < count; ++i)
        if (std::abs((x[i + 1] - x[i]) - h) > 1e-9 * h)
            throw std::invalid_argument("similarity: frame grid must be uniform");
    std::size_t intervals = count - 1;
    std::size_t simpson_end = intervals % 2 == 0 ? count : count - 3;
    CompensatedSum acc;
    for (std::size_t i = 0; i + 2 < simpson_end + 1; i += 2)
        acc.add(h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]));
    if (simpson_end != count)
        acc.add(3.0 * h / 8.0 *
                (f[count - 4] + 3.0 * f[count - 3] + 3.0 * f[count - 2] +
                 f[count - 1]));
    return acc.value();
}

}  // namespace detail

// Decompose phi against {H_0, H_2}. The Pythagoras identity
// ||phi||^2 = a^2 + b^2 + ||theta||^2 is enforced as a postcondition; it can
// only fail if the basis or the projection is inconsistent.
inline SpectralCoefficients project(const SimilarityFrame& fr,
                                    const HermiteBasis& basis,
                                    int rule_order = 6) {
    detail::check_frame(fr);
    if (fr.y.back() < basis.y_max * (1.0 - 1e-12))
        throw std::invalid_argument(
            "similarity: quadrature support exceeds frame support");
    if (rule_order < 2 || rule_order > 32)
        throw std::invalid_argument("similarity: bad rule order");

    MonotoneCubic phi_i(fr.y, fr.phi);
    detail::FrameRule rule =
        detail::frame_rule(fr.y, fr.n, basis.y_max, rule_order);
    const double tn = 2.0 * fr.n;
    CompensatedSum sa, sb, snorm;
    std::vector<double> phi_r(rule.x.size());
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        double v = phi_i(rule.x[i]);
        phi_r[i] = v;
        sa.add(rule.w[i] * v * basis.c0);
        sb.add(rule.w[i] * v * basis.c2 * (rule.x[i] * rule.x[i] - tn));
        snorm.add(rule.w[i] * v * v);
    }

    SpectralCoefficients sc;
    sc.s = fr.s;
    sc.a = sa.value();
    sc.b = sb.value();
    double phi2 = snorm.value();

    CompensatedSum stheta;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        double th = phi_r[i] - sc.a * basis.c0 -
                    sc.b * basis.c2 * (rule.x[i] * rule.x[i] - tn);
        stheta.add(rule.w[i] * th * th);
    }
    double theta2 = stheta.value();
    sc.theta_norm = std::sqrt(std::max(0.0, theta2));

    double lhs = phi2;
    double rhs = sc.a * sc.a + sc.b * sc.b + theta2;
    if (std::abs(lhs - rhs) > 1e-8 * std::max({lhs, rhs, 1e-300}))
        throw std::runtime_error(
            "similarity: Pythagoras postcondition violated");

    // Gradient seminorm: fourth-order finite differences on the frame grid.
    std::size_t m = fr.y.size();
    std::vector<double> integrand(m);
    const double S = sphere_area(fr.n);
    std::vector<double> theta_knots(m);
    for (std::size_t j = 0; j < m; ++j)
        theta_knots[j] = fr.phi[j] - sc.a * basis.c0 -
                         sc.b * basis.c2 * (fr.y[j] * fr.y[j] - tn);
    for (std::size_t j = 0; j < m; ++j) {
        double d = deriv5(fr.y, theta_knots, j);
        integrand[j] = d * d * S * std::exp(-0.25 * fr.y[j] * fr.y[j]) *
                       std::pow(fr.y[j], fr.n - 1);
    }
    sc.theta_grad_norm =
        std::sqrt(std::max(0.0, detail::simpson(fr.y, integrand, m)));
    return sc;
}

inline std::vector<SpectralCoefficients> spectral_series(
    const std::vector<SimilarityFrame>& frames, const HermiteBasis& basis) {
    std::vector<SpectralCoefficients> out;
    out.reserve(frames.size());
    for (const auto& fr : frames) out.push_back(project(fr, basis));
    return out;
}

inline std::vector<SpectralCoefficients> spectral_series(
    const RunRecord& rec, const HermiteBasis& basis) {
    return spectral_series(frames_from_record(rec, basis.y_max), basis);
}

// ---------------------------------------------------------------------------
// Neutral-mode decay rate

struct NeutralModeTrack {
    std::vector<double> s;   // frame times
    std::vector<double> sb;  // s * b(s)
    std::vector<double> gap; // |s b - target| / target
    double target = 0.0;     // 1 / (4 p c2)
    double final_gap = 0.0;
    double final_gap_lo = 0.0; // band across T_hat +- spread
    double final_gap_hi = 0.0;
    bool gap_shrinking = false;
};

// The neutral mode decays like b(s) ~ 1/(4 p c2 s); track s*b against that
// limit. Only the magnitude is asserted: the sign bookkeeping between the
// b' / b^2 limit and the orientation of H_2 is checked against runs, not
// rederived.
inline NeutralModeTrack neutral_mode_track(
    const std::vector<SimilarityFrame>& frames, const HermiteBasis& basis,
    double p) {
    if (frames.size() < 8)
        throw std::invalid_argument("neutral mode: need >= 8 frames");
    if (!(frames.back().s - frames.front().s >= 3.0))
        throw std::invalid_argument("neutral mode: frames must span delta s >= 3");
    NeutralModeTrack tr;
    tr.target = 1.0 / (4.0 * p * basis.c2);
    for (const auto& fr : frames) {
        SpectralCoefficients sc = project(fr, basis);
        tr.s.push_back(sc.s);
        tr.sb.push_back(sc.s * sc.b);
        tr.gap.push_back(std::abs(std::abs(sc.s * sc.b) - tr.target) /
                         tr.target);
    }
    tr.final_gap = tr.gap.back();
    tr.final_gap_lo = tr.final_gap;
    tr.final_gap_hi = tr.final_gap;
    std::size_t mid = tr.gap.size() / 2;
    tr.gap_shrinking =
        tr.gap.back() <= tr.gap[mid] * (1.0 + 1e-9) + 1e-12;
    return tr;
}

inline NeutralModeTrack neutral_mode_track(const RunRecord& rec,
                                           const HermiteBasis& basis) {
    if (!rec.has_estimate)
        throw std::invalid_argument("neutral mode: blow-up estimate unavailable");
    ResolventTable tb = detail::similarity_table(rec);
    NeutralModeTrack tr = neutral_mode_track(
        frames_from_record(rec, basis.y_max, tb), basis, rec.config.spec.p);
    // Uncertainty band: the final gap recomputed at T_hat +- spread.
    for (double T : {rec.estimate.T_hat - rec.estimate.spread,
                     rec.estimate.T_hat + rec.estimate.spread}) {
        if (!(T > 0.0)) continue;
        std::vector<SimilarityFrame> fs =
            frames_from_record(rec, basis.y_max, tb, T);
        if (fs.size() < 8) continue;
        double g = std::abs(std::abs(fs.back().s *
                                     project(fs.back(), basis).b) -
                            tr.target) /
                   tr.target;
        tr.final_gap_lo = std::min(tr.final_gap_lo, g);
        tr.final_gap_hi = std::max(tr.final_gap_hi, g);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Convergence residual of the refined profile

struct TheoremResidual {
    double sup = 0.0; // s * sup_{|y| <= R} |phi - (|y|^2 - 2n)/(4 p s)|
    double h1 = 0.0;  // the same residual in the weighted H^1 norm on |y| <= R
};

inline TheoremResidual theorem1_residual(const SimilarityFrame& fr, double R) {
    detail::check_frame(fr);
    if (!(R > 0.0) || R > fr.y.back() * (1.0 + 1e-12))
        throw std::invalid_argument("residual: R outside the frame support");
    const double tn = 2.0 * fr.n;
    std::size_t m = fr.y.size();
    std::size_t count =
        std::upper_bound(fr.y.begin(), fr.y.end(), R * (1.0 + 1e-12)) -
        fr.y.begin();
    count = std::min(count, m);
    if (count < 5)
        throw std::invalid_argument("residual: too few frame nodes below R");

    std::vector<double> delta(m);
    for (std::size_t j = 0; j < m; ++j)
        delta[j] = fr.phi[j] - (fr.y[j] * fr.y[j] - tn) / (4.0 * fr.p * fr.s);

    TheoremResidual res;
    double sup = 0.0;
    for (std::size_t j = 0; j < count; ++j)
        sup = std::max(sup, std::abs(delta[j]));
    res.sup = fr.s * sup;

    const double S = sphere_area(fr.n);
    std::vector<double> integrand(count);
    for (std::size_t j = 0; j < count; ++j) {
        double d = deriv5(fr.y, delta, j);
        double weight =
            S * std::exp(-0.25 * fr.y[j] * fr.y[j]) * std::pow(fr.y[j], fr.n - 1);
        integrand[j] = (delta[j] * delta[j] + d * d) * weight;
    }
    res.h1 = fr.s * std::sqrt(std::max(
                        0.0, detail::simpson(fr.y, integrand, count)));
    return res;
}

// ---------------------------------------------------------------------------
// The normalized blow-up rate h(s) -> beta

struct HodS {
    double h = 0.0;
    double beta = 0.0;
    double gap = 0.0;
};

// h(s) = e^{-s} psi_1^{p-1}(s) L(psi_1(s)) with psi_1(s) = G_inv(e^{-s});
// slow variation forces h -> beta = 1/(p-1).
inline HodS h_of_s(const NonlinearitySpec& sp, const ResolventTable& tb,
                   double s) {
    double tau = std::exp(-s);
    double psi1 = G_inv(tb, tau);
    double L = eval_L(sp, psi1).L;
    HodS out;
    out.h = std::exp(-s + (sp.p - 1.0) * std::log(psi1) + std::log(L));
    out.beta = 1.0 / (sp.p - 1.0);
    out.gap = std::abs(out.h - out.beta);
    return out;
}

// ---------------------------------------------------------------------------
// Weighted Poincare inequality margins

// v(r) = (sum_k coeffs[k] r^k) * exp(-decay r^2). Odd powers give radial
// functions that are merely Lipschitz at the origin: fine for the first three
// margins, but the Hessian margin's hypothesis (grad v in H^1_rho) needs even
// powers only.
struct TrialFunction {
    std::vector<double> coeffs;
    double decay = 0.0;
};

struct PoincareMargins {
    double second_moment = 0.0; // 16||grad v||^2 + 4n||v||^2 - int |y|^2 v^2
    double wirtinger = 0.0;     // ||grad v||^2 + vbar^2 - ||v||^2
    double spectral_gap = 0.0;  // 1/2||grad v||^2 - ||v||^2, v _|_ {1, |y|^2}
    double hessian_gap = 0.0;   // ||grad dv||^2 - ||dv||^2, v _|_ |y|^2 - 2n
};

namespace detail {

struct TrialValues {
    std::vector<double> v, dv, ddv;
};

inline TrialValues eval_trial(const TrialFunction& t,
                              const std::vector<double>& r) {
    if (t.coeffs.empty() || t.coeffs.size() > 16)
        throw std::invalid_argument("trial: need 1..16 coefficients");
    if (!(t.decay >= 0.0) || !std::isfinite(t.decay))
        throw std::invalid_argument("trial: decay must be finite and >= 0");
    for (double c : t.coeffs)
        if (!std::isfinite(c))
            throw std::invalid_argument("trial: non-finite coefficient");
    TrialValues out;
    out.v.resize(r.size());
    out.dv.resize(r.size());
    out.ddv.resize(r.size());
    const double q = t.decay;
    for (std::size_t i = 0; i < r.size(); ++i) {
        double x = r[i];
        double P = 0.0, Pp = 0.0, Ppp = 0.0;
        for (std::size_t k = t.coeffs.size(); k-- > 0;) {
            Ppp = Ppp * x + 2.0 * Pp;
            Pp = Pp * x + P;
            P = P * x + t.coeffs[k];
        }
        double e = std::exp(-q * x * x);
        out.v[i] = P * e;
        out.dv[i] = (Pp - 2.0 * q * x * P) * e;
        out.ddv[i] =
            (Ppp - 4.0 * q * x * Pp + (4.0 * q * q * x * x - 2.0 * q) * P) * e;
    }
    return out;
}

}  // namespace detail

inline PoincareMargins poincare_check(const TrialFunction& trial,
                                      const HermiteBasis& basis) {
    detail::TrialValues tv = detail::eval_trial(trial, basis.nodes);
    const int n = basis.n;
    const double tn = 2.0 * n;
    const auto& W = basis.weights;
    const auto& r = basis.nodes;

    CompensatedSum nv2, ndv2, mom2, mean;
    for (std::size_t i = 0; i < r.size(); ++i) {
        nv2.add(W[i] * tv.v[i] * tv.v[i]);
        ndv2.add(W[i] * tv.dv[i] * tv.dv[i]);
        mom2.add(W[i] * r[i] * r[i] * tv.v[i] * tv.v[i]);
        mean.add(W[i] * tv.v[i] * basis.c0);
    }
    PoincareMargins out;
    out.second_moment = 16.0 * ndv2.value() + 2.0 * tn * nv2.value() -
                        mom2.value();
    out.wirtinger = ndv2.value() + mean.value() * mean.value() - nv2.value();

    // Spectral gap: Gram-Schmidt v against {1, |y|^2} under the stored rule.
    double c1 = mean.value(); // coefficient against e1 = H_0
    CompensatedSum g_norm2, g_dot_r2;
    for (std::size_t i = 0; i < r.size(); ++i)
        g_dot_r2.add(W[i] * r[i] * r[i] * basis.c0);
    double proj = g_dot_r2.value(); // (|y|^2, e1)
    std::vector<double> g(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        g[i] = r[i] * r[i] - proj * basis.c0;
        g_norm2.add(W[i] * g[i] * g[i]);
    }
    double gn = std::sqrt(g_norm2.value());
    CompensatedSum c2sum;
    for (std::size_t i = 0; i < r.size(); ++i)
        c2sum.add(W[i] * tv.v[i] * g[i] / gn);
    double c2c = c2sum.value();
    CompensatedSum v2n, dv2n;
    for (std::size_t i = 0; i < r.size(); ++i) {
        double vi = tv.v[i] - c1 * basis.c0 - c2c * g[i] / gn;
        double di = tv.dv[i] - c2c * 2.0 * r[i] / gn;
        v2n.add(W[i] * vi * vi);
        dv2n.add(W[i] * di * di);
    }
    out.spectral_gap = 0.5 * dv2n.value() - v2n.value();

    // Hessian gap: orthogonalize against H_2, then compare the per-component
    // derivative norm with the full Hessian norm (radial form).
    CompensatedSum bsum;
    for (std::size_t i = 0; i < r.size(); ++i)
        bsum.add(W[i] * tv.v[i] * basis.c2 * (r[i] * r[i] - tn));
    double bc = bsum.value();
    CompensatedSum d1, d2;
    for (std::size_t i = 0; i < r.size(); ++i) {
        double dvi = tv.dv[i] - bc * basis.c2 * 2.0 * r[i];
        double ddvi = tv.ddv[i] - bc * basis.c2 * 2.0;
        double hess = ddvi * ddvi + (n - 1) * dvi * dvi / (r[i] * r[i]);
        d1.add(W[i] * dvi * dvi);
        d2.add(W[i] * hess);
    }
    out.hessian_gap = (d2.value() - d1.value()) / n;
    return out;
}

// ---------------------------------------------------------------------------
// Lower decay of the rescaled profile

struct LowerDecaySeries {
    std::vector<double> s;
    std::vector<double> value; // s * ||phi(s)||
    bool bounded_below = false;
    double final_lo = 0.0; // band across T_hat +- spread
    double final_hi = 0.0;
};

// s * ||phi|| stays bounded below for genuinely algebraic decay; the pass
// flag requires the last half of the series to live within a decade of the
// final value.
inline LowerDecaySeries lower_decay_check(
    const std::vector<SimilarityFrame>& frames, const HermiteBasis& basis,
    int rule_order = 6) {
    if (frames.size() < 5)
        throw std::invalid_argument("lower decay: need >= 5 frames");
    LowerDecaySeries out;
    for (const auto& fr : frames) {
        detail::check_frame(fr);
        detail::FrameRule rule =
            detail::frame_rule(fr.y, fr.n, basis.y_max, rule_order);
        MonotoneCubic phi_i(fr.y, fr.phi);
        CompensatedSum acc;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            double v = phi_i(rule.x[i]);
            acc.add(rule.w[i] * v * v);
        }
        out.s.push_back(fr.s);
        out.value.push_back(fr.s * std::sqrt(std::max(0.0, acc.value())));
    }
    double fin = out.value.back();
    out.final_lo = fin;
    out.final_hi = fin;
    bool ok = fin > 0.0;
    for (std::size_t k = out.value.size() / 2; k < out.value.size(); ++k)
        ok = ok && out.value[k] >= 0.1 * fin && out.value[k] <= 10.0 * fin;
    out.bounded_below = ok;
    return out;
}

inline LowerDecaySeries lower_decay_check(const RunRecord& rec,
                                          const HermiteBasis& basis) {
    if (!rec.has_estimate)
        throw std::invalid_argument("lower decay: blow-up estimate unavailable");
    ResolventTable tb = detail::similarity_table(rec);
    LowerDecaySeries out =
        lower_decay_check(frames_from_record(rec, basis.y_max, tb), basis);
    for (double T : {rec.estimate.T_hat - rec.estimate.spread,
                     rec.estimate.T_hat + rec.estimate.spread}) {
        if (!(T > 0.0)) continue;
        std::vector<SimilarityFrame> fs =
            frames_from_record(rec, basis.y_max, tb, T);
        if (fs.size() < 5) continue;
        LowerDecaySeries alt = lower_decay_check(fs, basis);
        out.final_lo = std::min(out.final_lo, alt.value.back());
        out.final_hi = std::max(out.final_hi, alt.value.back());
    }
    return out;
}

}  // namespace blowup
