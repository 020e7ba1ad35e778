#pragma once
// Radial semilinear heat flow on a ball, driven toward blow-up:
//
//     u_t = u_rr + (n-1)/r u_r + f(u),   u(R,t) = 0,  u_r(0,t) = 0,
//
// with radially nonincreasing data. The solver is built for one purpose:
// producing trustworthy center histories m(t) = u(0,t) and late-time
// profiles deep into the blow-up regime (m up to ~1e12), where the
// self-similar core sqrt(T-t) has shrunk to ~1e-6 of the domain.
//
// Scheme: first-order Lie split per step, reaction first then diffusion.
//   - Reaction: classical RK4 on u' = f(u) per node, dt capped by
//     safety / max f'(u). The high-order substep matters: the reaction is
//     what the center history is made of, and a first-order substep would
//     leak O(dt) error into the implied blow-up time.
//   - Diffusion: backward Euler on the conservative finite-volume form
//     (r^{n-1} u_r)_r / r^{n-1}, tridiagonal solve. Unconditionally stable,
//     discrete maximum principle, exact symmetry flux at r = 0.
//   Reaction before diffusion keeps the discrete center value below the
//   pure-ODE envelope step by step.
//
// Grid: sinh-graded nodes r_i = R sinh(theta i/N) / sinh(theta), near-uniform
// spacing ~R theta/(N sinh theta) at the origin growing geometrically
// outward. The auto-grading rule sizes theta so ~220 nodes lie inside the
// smallest core the run will reach, estimated from the asymptotic
// G(U_max) ~ U_max^{1-p} / ((p-1) L(U_max)).
//
// Error control: step-doubling (one dt step vs two dt/2 steps), relative
// sup-norm target, accept the doubled-resolution composition. Monotonicity
// and positivity failures halve the step instead of being repaired.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "blowup/interp.hpp"
#include "blowup/nonlinearity.hpp"
#include "blowup/resolvent.hpp"

namespace blowup {

enum class DomainKind { Ball, WholeSpace };

// WholeSpace is realized as a Dirichlet ball of radius 1.25 * R: the
// truncation is honest only if the solution never notices the boundary,
// which solve() validates post hoc by tracking max u(R, t)/m(t) over the
// snapshots (at the nominal radius R, inside the enlarged ball).
struct Domain {
    DomainKind kind = DomainKind::Ball;
    double R = 1.0;
};

enum class InitKind { PlateauGaussian, Constant, Tabulated };

// Radially nonincreasing initial data. The plateau-Gaussian family is
//   u0(r) = amplitude * (g(r) - g(R_solve)) / (1 - g(R_solve)),
//   g(r) = exp(-max(0, r - width)^2 / width^2),
// exactly flat on [0, width], smoothly decaying beyond, pinned to zero at
// the solve radius. width = 0 requests the default R/2.
struct InitialData {
    InitKind kind = InitKind::PlateauGaussian;
    double amplitude = 20.0;
    double width = 0.0;
    std::vector<double> r, u;  // tabulated data only

    static InitialData plateau_gaussian(double amplitude, double width = 0.0) {
        InitialData d;
        d.kind = InitKind::PlateauGaussian;
        d.amplitude = amplitude;
        d.width = width;
        return d;
    }
    static InitialData constant(double amplitude) {
        InitialData d;
        d.kind = InitKind::Constant;
        d.amplitude = amplitude;
        return d;
    }
    static InitialData tabulated(std::vector<double> r, std::vector<double> u) {
        InitialData d;
        d.kind = InitKind::Tabulated;
        d.r = std::move(r);
        d.u = std::move(u);
        return d;
    }
};

struct GridSpec {
    int nodes = 1601;      // total node count including both endpoints
    double grading = 0.0;  // sinh strength theta; 0 = auto from u_max core rule
};

struct DtControl {
    double safety = 0.05;  // dt <= safety / max |f'(u)|
    double dt_min = 1e-30;
};

struct RunConfig {
    NonlinearitySpec spec;
    int n = 1;
    Domain domain;
    InitialData init;
    GridSpec grid;
    DtControl dt;
    double u_max = 1e12;              // stop once m(t) reaches this
    double t_horizon = 10.0;          // give up (no blow-up) at this time
    double snapshots_per_decade = 3;  // schedule uniform in log10(u_max/m)
    double step_rel_tol = 1e-6;       // step-doubling acceptance target
    bool reaction_enabled = true;
    bool diffusion_enabled = true;
    long max_steps = 2000000;
};

struct SolutionState {
    double t = 0.0;
    std::vector<double> r, u;
    double dt_last = 0.0;
};

struct BlowupEstimate {
    double T_hat = std::numeric_limits<double>::quiet_NaN();
    // Estimator series t_k -> t_k + G(m(t_k)) over the trailing half of the
    // m-history; each value is an independent prediction of the blow-up time.
    std::vector<double> sample_t, implied_T;
    double spread = std::numeric_limits<double>::quiet_NaN();  // last quarter
};

enum class RunStatus { BlewUp, NoBlowupDetected, DtUnderflow, StepBudgetExhausted };

inline const char* run_status_name(RunStatus s) {
    switch (s) {
        case RunStatus::BlewUp: return "blew_up";
        case RunStatus::NoBlowupDetected: return "no_blowup_detected";
        case RunStatus::DtUnderflow: return "dt_underflow";
        case RunStatus::StepBudgetExhausted: return "step_budget_exhausted";
    }
    return "unknown";
}

struct RunRecord {
    RunConfig config;
    std::vector<SolutionState> snapshots;
    std::vector<double> m_time, m_value;  // per accepted step
    RunStatus status = RunStatus::NoBlowupDetected;
    BlowupEstimate estimate;
    bool has_estimate = false;
    int regrid_count = 0;
    // WholeSpace truncation audit: max over snapshots of u(R, t)/m(t) at the
    // nominal radius. Ball runs report 0 / true.
    double whole_space_leak = 0.0;
    bool whole_space_ok = true;
};

namespace detail {

// Radius of the self-similar core sqrt(T - t) once m has reached `level`,
// from the leading asymptotic of G. Grid sizing only; 10% accuracy is plenty.
inline double core_radius_estimate(const NonlinearitySpec& sp, double level) {
    double lg = (1.0 - sp.p) * std::log(level) - std::log((sp.p - 1.0)) -
                std::log(eval_L(sp, level).L);
    lg = std::max(lg, -650.0);
    return std::exp(0.5 * lg);
}

constexpr int kCoreNodesTarget = 220;
constexpr int kCoreNodesMin = 200;

// The core target cannot exceed what the grid can spare: never ask for more
// than half the interior nodes, or small grids degenerate into a single
// cluster at the origin.
inline int core_target(int nodes) {
    return std::min(kCoreNodesTarget, (nodes - 1) / 2);
}
inline int core_floor(int nodes) {
    return core_target(nodes) * kCoreNodesMin / kCoreNodesTarget;
}

// Grading strength theta placing core_target(nodes) nodes inside radius rc:
// node i sits at R sinh(theta i/N)/sinh(theta), so the requirement is
// sinh(theta) = (R/rc) sinh(theta * target/N), solved by fixed point (the
// map contracts because target/N <= 1/2).
inline double auto_grading(const NonlinearitySpec& sp, double R, int nodes,
                           double u_max) {
    double rc = core_radius_estimate(sp, u_max);
    double N = static_cast<double>(nodes - 1);
    double target = core_target(nodes);
    if (N * rc >= target * R) return 0.0;  // uniform grid suffices
    double q = R / rc, c = target / N;
    double th = std::max(1.0, std::log(2.0 * q));
    for (int i = 0; i < 200; ++i) {
        double next = std::asinh(q * std::sinh(std::min(c * th, 700.0)));
        if (std::abs(next - th) < 1e-9 * th) {
            th = next;
            break;
        }
        th = std::min(next, 500.0);
    }
    return std::min(th, 60.0);
}

}  // namespace detail

// Sinh-graded node set on [0, R]; grading 0 gives the uniform grid.
inline std::vector<double> build_grid(int nodes, double grading, double R) {
    if (nodes < 9) throw std::invalid_argument("build_grid: need >= 9 nodes");
    if (!(R > 0.0)) throw std::invalid_argument("build_grid: R must be positive");
    if (!(grading >= 0.0 && grading <= 60.0))
        throw std::invalid_argument("build_grid: grading outside [0, 60]");
    std::size_t N = static_cast<std::size_t>(nodes) - 1;
    std::vector<double> r(N + 1);
    double sh = grading > 1e-6 ? std::sinh(grading) : 1.0;
    for (std::size_t i = 0; i <= N; ++i) {
        double x = static_cast<double>(i) / static_cast<double>(N);
        r[i] = grading > 1e-6 ? R * std::sinh(grading * x) / sh : R * x;
    }
    r[0] = 0.0;
    r[N] = R;
    return r;
}

namespace detail {

inline double solve_radius(const RunConfig& cfg) {
    return cfg.domain.kind == DomainKind::WholeSpace ? 1.25 * cfg.domain.R
                                                     : cfg.domain.R;
}

inline void validate_config(const RunConfig& cfg) {
    require_valid(cfg.spec);
    if (cfg.n < 1 || cfg.n > 9)
        throw std::invalid_argument("run config: dimension n outside [1, 9]");
    if (!(cfg.domain.R > 0.0) || !std::isfinite(cfg.domain.R))
        throw std::invalid_argument("run config: domain radius must be positive");
    if (cfg.grid.nodes < 9 || cfg.grid.nodes > 2000000)
        throw std::invalid_argument("run config: node count outside [9, 2e6]");
    if (!(cfg.grid.grading >= 0.0 && cfg.grid.grading <= 60.0))
        throw std::invalid_argument("run config: grading outside [0, 60]");
    if (!(cfg.dt.safety > 0.0 && cfg.dt.safety <= 0.5))
        throw std::invalid_argument("run config: dt safety outside (0, 0.5]");
    if (!(cfg.dt.dt_min > 0.0))
        throw std::invalid_argument("run config: dt_min must be positive");
    if (!(cfg.u_max > 0.0 && cfg.u_max <= 1e80))
        throw std::invalid_argument("run config: u_max outside (0, 1e80]");
    if (!(cfg.t_horizon > 0.0))
        throw std::invalid_argument("run config: time horizon must be positive");
    if (!(cfg.snapshots_per_decade >= 0.25 && cfg.snapshots_per_decade <= 64.0))
        throw std::invalid_argument("run config: snapshots per decade outside [0.25, 64]");
    if (!(cfg.step_rel_tol >= 1e-12 && cfg.step_rel_tol <= 1e-2))
        throw std::invalid_argument("run config: step tolerance outside [1e-12, 1e-2]");
    if (cfg.max_steps < 100)
        throw std::invalid_argument("run config: step budget too small");
}

inline void validate_profile(const std::vector<double>& u, bool need_nonconstant,
                             const char* who) {
    for (double v : u)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string(who) +
                                        ": initial data must be finite and >= 0");
    for (std::size_t i = 0; i + 1 < u.size(); ++i)
        if (u[i + 1] > u[i])
            throw std::invalid_argument(std::string(who) +
                                        ": initial data must be nonincreasing");
    if (need_nonconstant && !(u.front() > u.back()))
        throw std::invalid_argument(std::string(who) +
                                    ": whole-space data must be nonconstant");
}

}  // namespace detail

// Sample the configured initial data on the graded grid. Offending data is
// rejected, never repaired.
inline SolutionState init_state(const RunConfig& cfg) {
    detail::validate_config(cfg);
    double R = detail::solve_radius(cfg);
    double theta = cfg.grid.grading > 0.0
                       ? cfg.grid.grading
                       : detail::auto_grading(cfg.spec, R, cfg.grid.nodes, cfg.u_max);
    SolutionState st;
    st.r = build_grid(cfg.grid.nodes, theta, R);
    st.u.resize(st.r.size());
    bool whole = cfg.domain.kind == DomainKind::WholeSpace;

    switch (cfg.init.kind) {
        case InitKind::PlateauGaussian: {
            double A = cfg.init.amplitude;
            double w = cfg.init.width > 0.0 ? cfg.init.width : 0.5 * cfg.domain.R;
            if (!(A > 0.0) || !std::isfinite(A))
                throw std::invalid_argument("init_state: amplitude must be positive");
            if (!(w > 0.0 && w < R))
                throw std::invalid_argument("init_state: width outside (0, R)");
            auto g = [&](double r) {
                double x = std::max(0.0, r - w) / w;
                return std::exp(-x * x);
            };
            double floor = g(R);
            for (std::size_t i = 0; i < st.r.size(); ++i)
                st.u[i] = A * std::max(0.0, g(st.r[i]) - floor) / (1.0 - floor);
            st.u.back() = 0.0;
            break;
        }
        case InitKind::Constant: {
            double A = cfg.init.amplitude;
            if (!(A > 0.0) || !std::isfinite(A))
                throw std::invalid_argument("init_state: amplitude must be positive");
            if (whole)
                throw std::invalid_argument(
                    "init_state: constant data is not admissible on the whole space");
            std::fill(st.u.begin(), st.u.end(), A);
            break;
        }
        case InitKind::Tabulated: {
            if (cfg.init.r.size() != cfg.init.u.size() || cfg.init.r.size() < 4)
                throw std::invalid_argument("init_state: tabulated data needs >= 4 rows");
            for (std::size_t i = 0; i + 1 < cfg.init.r.size(); ++i)
                if (!(cfg.init.r[i] < cfg.init.r[i + 1]))
                    throw std::invalid_argument(
                        "init_state: tabulated radii must increase");
            if (cfg.init.r.front() > 1e-12 * R || cfg.init.r.back() < R * (1.0 - 1e-12))
                throw std::invalid_argument("init_state: tabulated data must cover [0, R]");
            detail::validate_profile(cfg.init.u, whole, "init_state");
            MonotoneCubic mc(cfg.init.r, cfg.init.u);
            for (std::size_t i = 0; i < st.r.size(); ++i)
                st.u[i] = std::max(0.0, mc(st.r[i]));
            break;
        }
    }
    detail::validate_profile(st.u, whole, "init_state");
    return st;
}

namespace detail {

// One solver instance: grid geometry, finite-volume weights, scratch
// vectors, and the split-step engine. Rebuilt on re-gridding.
class Stepper {
  public:
    Stepper(const RunConfig& cfg, const std::vector<double>& r) : cfg_(cfg) {
        set_grid(r);
    }

    void set_grid(const std::vector<double>& r) {
        r_ = r;
        std::size_t N = r_.size() - 1;
        wm_.assign(N, 0.0);
        wp_.assign(N, 0.0);
        double n = static_cast<double>(cfg_.n);
        for (std::size_t i = 0; i < N; ++i) {
            double rm = i == 0 ? 0.0 : 0.5 * (r_[i - 1] + r_[i]);
            double rp = 0.5 * (r_[i] + r_[i + 1]);
            double V = (std::pow(rp, n) - std::pow(rm, n)) / n;
            if (i > 0)
                wm_[i] = std::pow(rm, n - 1.0) / ((r_[i] - r_[i - 1]) * V);
            wp_[i] = std::pow(rp, n - 1.0) / ((r_[i + 1] - r_[i]) * V);
        }
        big_.resize(N + 1);
        half_.resize(N + 1);
        diag_.resize(N);
        rhs_.resize(N);
        scr_.resize(N);
    }

    const std::vector<double>& grid() const { return r_; }

    double max_slope(const std::vector<double>& u) const {
        double fp = 0.0;
        for (double v : u)
            fp = std::max(fp, std::abs(eval_f_extended(cfg_.spec, std::max(v, 0.0)).fp));
        return fp;
    }

    double dt_cap(const std::vector<double>& u) const {
        double fp = cfg_.reaction_enabled ? max_slope(u) : 0.0;
        return fp > 0.0 ? cfg_.dt.safety / fp : std::numeric_limits<double>::infinity();
    }

    // One accepted adaptive step. On entry *dt holds the proposal; on exit
    // the state holds the doubled-resolution composition, *dt the size
    // actually taken, and the return value the proposal for the next step.
    // Throws on dt underflow.
    double advance(std::vector<double>& u, double* dt, double dt_limit) {
        double cap = std::min(dt_cap(u), dt_limit);
        double h = std::min(*dt, cap);
        double m = std::max(u[0], 1e-300);
        for (int tries = 0; tries < 200; ++tries) {
            if (h < cfg_.dt.dt_min)
                throw std::runtime_error("step: dt underflow below dt_min");
            substep(u, h, big_);
            substep(u, 0.5 * h, half_);
            substep(half_, 0.5 * h, half_);
            double err = 0.0, sup = 1e-300;
            for (std::size_t i = 0; i < u.size(); ++i) {
                err = std::max(err, std::abs(big_[i] - half_[i]));
                sup = std::max(sup, half_[i]);
            }
            double rel = err / sup;
            if (rel > cfg_.step_rel_tol) {
                h *= std::max(0.25, 0.9 * std::sqrt(cfg_.step_rel_tol / rel));
                continue;
            }
            if (!shape_ok(half_, m)) {
                h *= 0.5;
                continue;
            }
            u.swap(half_);
            *dt = h;
            double grow = rel > 0.0 ? 0.9 * std::sqrt(cfg_.step_rel_tol / rel) : 2.0;
            return h * std::min(2.0, std::max(0.3, grow));
        }
        throw std::runtime_error("step: repeated rejection, no acceptable dt");
    }

  private:
    // Lie substep: reaction (RK4 per node), then diffusion (backward Euler).
    void substep(const std::vector<double>& in, double h, std::vector<double>& out) {
        if (&out != &in) out = in;
        if (cfg_.reaction_enabled) {
            for (double& v : out) {
                double y = std::max(v, 0.0);
                double k1 = rate(y);
                double k2 = rate(y + 0.5 * h * k1);
                double k3 = rate(y + 0.5 * h * k2);
                double k4 = rate(y + h * k3);
                v += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
            }
        }
        if (cfg_.diffusion_enabled) diffuse(out, h);
    }

    double rate(double v) const {
        return eval_f_extended(cfg_.spec, std::max(v, 0.0)).f;
    }

    // (I - h Lap) u_new = u, Dirichlet at R. Thomas elimination; the matrix
    // is strictly diagonally dominant, no pivoting required.
    void diffuse(std::vector<double>& u, double h) {
        std::size_t N = u.size() - 1;
        for (std::size_t i = 0; i < N; ++i) {
            diag_[i] = 1.0 + h * (wm_[i] + wp_[i]);
            rhs_[i] = u[i];
        }
        scr_[0] = -h * wp_[0] / diag_[0];
        rhs_[0] /= diag_[0];
        for (std::size_t i = 1; i < N; ++i) {
            double a = -h * wm_[i];
            double piv = diag_[i] - a * scr_[i - 1];
            scr_[i] = -h * wp_[i] / piv;
            rhs_[i] = (rhs_[i] - a * rhs_[i - 1]) / piv;
        }
        u[N] = 0.0;
        double carry = 0.0;
        for (std::size_t i = N; i-- > 0;) {
            rhs_[i] -= scr_[i] * carry;
            carry = rhs_[i];
            u[i] = rhs_[i];
        }
    }

    // Acceptance shape gate, at half the advertised tolerances so accepted
    // states satisfy the public invariants with headroom.
    bool shape_ok(const std::vector<double>& u, double m) const {
        double mono = 5e-11 * m, pos = -1e-13 * m;
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (u[i] < pos) return false;
            if (i + 1 < u.size() && u[i + 1] > u[i] + mono) return false;
        }
        return true;
    }

    RunConfig cfg_;
    std::vector<double> r_, wm_, wp_;
    std::vector<double> big_, half_, diag_, rhs_, scr_;
};

}  // namespace detail

// One accepted adaptive step from the given state. The spacingless public
// form; solve() drives the same engine with persistent workspace.
inline SolutionState step(const SolutionState& state, const RunConfig& cfg) {
    detail::validate_config(cfg);
    if (state.r.size() < 9 || state.r.size() != state.u.size())
        throw std::invalid_argument("step: malformed state");
    if (!(state.u[0] < cfg.u_max))
        throw std::invalid_argument("step: state already beyond u_max");
    detail::Stepper eng(cfg, state.r);
    SolutionState out = state;
    double dt = state.dt_last > 0.0 ? state.dt_last
                                    : 0.01 * std::min(eng.dt_cap(state.u), 1.0);
    eng.advance(out.u, &dt, std::numeric_limits<double>::infinity());
    out.t = state.t + dt;
    out.dt_last = dt;
    return out;
}

// Blow-up time estimator: every history point predicts T through
// T_k = t_k + G(m_k); report the median over the trailing quarter and the
// spread (max - min) over the same window. The full series over the
// trailing half is kept for plots. Requires a history that has climbed to
// at least m = 100; the solver pipeline only attaches estimates from 1e6 up,
// but the operation itself stays callable on short histories so truncation
// robustness can be probed directly.
inline BlowupEstimate estimate_T(const RunRecord& rec) {
    const auto& t = rec.m_time;
    const auto& m = rec.m_value;
    if (t.size() != m.size() || t.size() < 32)
        throw std::invalid_argument("estimate_T: insufficient history");
    double m_max = *std::max_element(m.begin(), m.end());
    if (!(m_max >= 100.0))
        throw std::invalid_argument("estimate_T: history never reaches m = 100");

    std::size_t K = t.size();
    std::size_t half = K / 2, quarter = K - K / 4;
    double m_lo = m_max, m_hi = 0.0;
    for (std::size_t k = half; k < K; ++k) {
        m_lo = std::min(m_lo, m[k]);
        m_hi = std::max(m_hi, m[k]);
    }
    double s_floor = positivity_threshold(rec.config.spec);
    double X_lo = std::max(s_floor * (1.0 + 1e-9), 0.45 * m_lo);
    double X_hi = std::min(std::max(4.0 * m_hi, 40.0 * X_lo),
                           resolvent_x_cap(rec.config.spec.p));
    ResolventTable tb = build_table(rec.config.spec, X_lo, X_hi, 1e-12);

    BlowupEstimate est;
    std::vector<double> window;
    for (std::size_t k = half; k < K; ++k) {
        if (m[k] < X_lo * 1.000001) continue;
        double Tk = t[k] + G(tb, m[k]);
        est.sample_t.push_back(t[k]);
        est.implied_T.push_back(Tk);
        if (k >= quarter) window.push_back(Tk);
    }
    if (window.size() < 4)
        throw std::invalid_argument("estimate_T: trailing window too small");
    std::vector<double> med = window;
    std::nth_element(med.begin(), med.begin() + med.size() / 2, med.end());
    est.T_hat = med[med.size() / 2];
    est.spread = *std::max_element(window.begin(), window.end()) -
                 *std::min_element(window.begin(), window.end());
    return est;
}

// Integrate until m reaches u_max, the time horizon passes, or the step
// collapses; aborts surface in the record status, not as exceptions.
inline RunRecord solve(const RunConfig& cfg) {
    RunRecord rec;
    rec.config = cfg;
    SolutionState st = init_state(cfg);
    detail::Stepper eng(cfg, st.r);
    CompensatedSum clock;
    double m = st.u[0];
    double m_peak = m;

    double decade = 1.0 / cfg.snapshots_per_decade;
    double next_q = (std::floor(std::log10(std::max(m, 1e-300)) / decade) + 1.0) * decade;
    double next_t = cfg.t_horizon / 8.0;
    auto snapshot = [&]() {
        if (!rec.snapshots.empty() && rec.snapshots.back().t == st.t) return;
        if (rec.snapshots.size() >= 4096) return;
        st.r = eng.grid();
        rec.snapshots.push_back(st);
    };
    st.t = 0.0;
    snapshot();
    rec.m_time.push_back(0.0);
    rec.m_value.push_back(m);

    double proposal = 0.01 * std::min(eng.dt_cap(st.u), cfg.t_horizon);
    long accepted = 0;
    rec.status = RunStatus::StepBudgetExhausted;
    while (accepted < cfg.max_steps) {
        if (m >= cfg.u_max) {
            rec.status = RunStatus::BlewUp;
            break;
        }
        double remaining = cfg.t_horizon - clock.value();
        if (remaining <= 1e-14 * cfg.t_horizon) {
            rec.status = RunStatus::NoBlowupDetected;
            break;
        }
        double dt = proposal;
        try {
            proposal = eng.advance(st.u, &dt, remaining);
        } catch (const std::runtime_error&) {
            rec.status = RunStatus::DtUnderflow;
            break;
        }
        clock.add(dt);
        st.t = clock.value();
        st.dt_last = dt;
        ++accepted;
        m = st.u[0];
        m_peak = std::max(m_peak, m);
        rec.m_time.push_back(st.t);
        rec.m_value.push_back(m);

        bool snap = false;
        while (std::log10(std::max(m, 1e-300)) >= next_q) {
            snap = true;
            next_q += decade;
        }
        if (st.t >= next_t) {
            snap = true;
            while (next_t <= st.t) next_t += cfg.t_horizon / 8.0;
        }
        if (snap) snapshot();

        // Core resolution audit: if the shrinking parabolic core has fewer
        // than the floor of nodes inside it, rebuild the grid against the
        // final core and carry the profile over by monotone interpolation.
        if ((accepted & 63) == 0 && cfg.diffusion_enabled) {
            double rc = detail::core_radius_estimate(cfg.spec, std::max(m, 10.0));
            const auto& r = eng.grid();
            std::size_t inside =
                std::upper_bound(r.begin(), r.end(), rc) - r.begin();
            if (inside < static_cast<std::size_t>(
                             detail::core_floor(static_cast<int>(r.size()))) &&
                m > 10.0) {
                double R = r.back();
                double theta =
                    detail::auto_grading(cfg.spec, R, static_cast<int>(r.size()), cfg.u_max);
                std::vector<double> rn = build_grid(static_cast<int>(r.size()), theta, R);
                MonotoneCubic mc(r, st.u);
                std::vector<double> un(rn.size());
                for (std::size_t i = 0; i < rn.size(); ++i)
                    un[i] = std::max(0.0, mc(rn[i]));
                un.back() = 0.0;
                st.u = std::move(un);
                eng.set_grid(rn);
                ++rec.regrid_count;
            }
        }
    }
    st.r = eng.grid();
    snapshot();

    if (cfg.domain.kind == DomainKind::WholeSpace) {
        double leak = 0.0;
        for (const auto& s : rec.snapshots) {
            std::size_t j =
                std::lower_bound(s.r.begin(), s.r.end(), cfg.domain.R) - s.r.begin();
            j = std::min(j, s.r.size() - 1);
            leak = std::max(leak, s.u[j] / std::max(s.u[0], 1e-300));
        }
        rec.whole_space_leak = leak;
        rec.whole_space_ok = leak < 1e-8;
    }
    if (m_peak >= 1e6 && rec.m_time.size() >= 32) {
        rec.estimate = estimate_T(rec);
        rec.has_estimate = true;
    }
    return rec;
}

// Sign monitor for J(r) = u_r + r f(u) / (2 (A + log f(u))), the quantity
// whose nonpositivity on { u >= M_gate, r <= R/2 } drives the final-profile
// lower bound. u_r comes from the 5-point Lagrange stencil. Off-set nodes
// report NaN. positive_fraction counts monitored nodes with J above
// rel_tol * max |J|, so discretization noise around J ~ 0 at the center
// does not register as a sign violation.
struct JMonitor {
    std::vector<double> r, J;
    std::vector<unsigned char> monitored;
    std::size_t monitored_count = 0;
    double positive_fraction = 0.0;
};

inline JMonitor j_monitor(const SolutionState& st, const NonlinearitySpec& sp,
                          double A, double M_gate, double rel_tol = 1e-9) {
    if (st.r.size() < 9 || st.r.size() != st.u.size())
        throw std::invalid_argument("j_monitor: malformed state");
    if (!(A >= 0.0)) throw std::invalid_argument("j_monitor: A must be >= 0");
    if (!(M_gate > 0.0) || !(eval_f_extended(sp, M_gate).f > 1.0))
        throw std::invalid_argument("j_monitor: gate must satisfy f(M_gate) > 1");
    double R = st.r.back();
    JMonitor out;
    out.r = st.r;
    out.J.assign(st.r.size(), std::numeric_limits<double>::quiet_NaN());
    out.monitored.assign(st.r.size(), 0);
    double peak = 0.0;
    for (std::size_t i = 0; i < st.r.size(); ++i) {
        if (st.u[i] < M_gate) continue;
        double ur = deriv5(st.r, st.u, i);
        double f = eval_f_extended(sp, st.u[i]).f;
        double denom = A + std::log(f);
        out.J[i] = ur + (denom > 0.0 ? st.r[i] * f / (2.0 * denom) : 0.0);
        if (st.r[i] <= 0.5 * R) {
            out.monitored[i] = 1;
            ++out.monitored_count;
            peak = std::max(peak, std::abs(out.J[i]));
        }
    }
    if (out.monitored_count == 0)
        throw std::runtime_error("j_monitor: empty monitored set");
    std::size_t positive = 0;
    for (std::size_t i = 0; i < st.r.size(); ++i)
        if (out.monitored[i] && out.J[i] > rel_tol * peak) ++positive;
    out.positive_fraction =
        static_cast<double>(positive) / static_cast<double>(out.monitored_count);
    return out;
}

// Calibrates the monitor's A from a completed run: k is the steepest
// profile slope ratio -u_r/r over the mid-time snapshot (restricted to
// r >= 1e-3 R, where the stencil is above the roundoff floor), and A is
// k^{-1} times the largest of the three f-suprema that bound the reaction
// along the monitored region's parabolic boundary: the whole profile at
// mid-time, the gate value, and the half-radius ring over the late phase.
// k is reported, not asserted: callers should check k > 0 (A is +inf
// otherwise, which degrades J to plain u_r).
struct JCalibration {
    double k = 0.0;
    double A = std::numeric_limits<double>::infinity();
    double f_mid_sup = 0.0, f_gate = 0.0, f_ring_sup = 0.0;
    std::size_t mid_snapshot = 0;
};

inline JCalibration fit_j_parameters(const RunRecord& rec, double M_gate) {
    if (!rec.has_estimate)
        throw std::invalid_argument("fit_j_parameters: record carries no estimate");
    if (rec.snapshots.size() < 3)
        throw std::invalid_argument("fit_j_parameters: need >= 3 snapshots");
    double T = rec.estimate.T_hat;
    std::size_t mid = rec.snapshots.size();
    for (std::size_t i = 0; i < rec.snapshots.size(); ++i)
        if (rec.snapshots[i].t >= 0.5 * T) {
            mid = i;
            break;
        }
    if (mid >= rec.snapshots.size())
        throw std::invalid_argument("fit_j_parameters: no snapshot past T/2");

    const SolutionState& s = rec.snapshots[mid];
    double R = s.r.back();
    JCalibration out;
    out.mid_snapshot = mid;
    out.k = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.r.size(); ++i) {
        if (s.r[i] < 1e-3 * R || s.r[i] > 0.5 * R) continue;
        out.k = std::min(out.k, -deriv5(s.r, s.u, i) / s.r[i]);
    }
    for (double v : s.u)
        out.f_mid_sup = std::max(out.f_mid_sup, eval_f_extended(rec.config.spec, v).f);
    out.f_gate = eval_f_extended(rec.config.spec, M_gate).f;
    for (std::size_t i = mid; i < rec.snapshots.size(); ++i) {
        const SolutionState& w = rec.snapshots[i];
        std::size_t j =
            std::lower_bound(w.r.begin(), w.r.end(), 0.5 * R) - w.r.begin();
        j = std::min(j, w.r.size() - 1);
        out.f_ring_sup =
            std::max(out.f_ring_sup, eval_f_extended(rec.config.spec, w.u[j]).f);
    }
    double sup = std::max({out.f_mid_sup, out.f_gate, out.f_ring_sup});
    out.A = out.k > 0.0 && std::isfinite(out.k)
                ? sup / out.k
                : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace blowup
