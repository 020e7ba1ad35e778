#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "blowup/nonlinearity.hpp"
#include "blowup/pde.hpp"
#include "blowup/resolvent.hpp"

using namespace blowup;

namespace {

NonlinearitySpec pp2() { return NonlinearitySpec::pure_power(2.0); }
NonlinearitySpec pp3() { return NonlinearitySpec::pure_power(3.0); }

RunConfig reference_config() {
    RunConfig cfg;
    cfg.spec = pp2();
    cfg.n = 1;
    cfg.domain = {DomainKind::Ball, 1.0};
    cfg.init = InitialData::plateau_gaussian(20.0);
    cfg.grid.nodes = 1601;
    cfg.u_max = 1e10;
    return cfg;
}

// The p=2 plateau run is shared across several cases; solve it once.
const RunRecord& reference_run() {
    static const RunRecord rec = solve(reference_config());
    return rec;
}

void check_shape(const SolutionState& s, bool dirichlet) {
    double m = s.u[0];
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        REQUIRE(s.u[i] >= -1e-12 * m);
        if (i + 1 < s.u.size()) REQUIRE(s.u[i + 1] <= s.u[i] + 1e-10 * m);
    }
    if (dirichlet) REQUIRE(s.u.back() == 0.0);
}

}  // namespace

TEST_CASE("graded grid and initial data") {
    RunConfig cfg = reference_config();
    cfg.u_max = 1e12;
    SolutionState st = init_state(cfg);

    REQUIRE(st.r.size() == 1601);
    REQUIRE(st.r.front() == 0.0);
    REQUIRE(st.r.back() == 1.0);
    for (std::size_t i = 0; i + 1 < st.r.size(); ++i) REQUIRE(st.r[i] < st.r[i + 1]);

    // Grading rule: enough nodes inside the final self-similar core.
    double rc = std::sqrt(1e-12);  // G(u_max) for the pure square
    std::size_t inside = 0;
    while (inside < st.r.size() && st.r[inside] <= rc) ++inside;
    REQUIRE(inside >= 200);

    REQUIRE(st.u[0] == 20.0);
    REQUIRE(st.u.back() == 0.0);
    check_shape(st, true);

    SECTION("constant data is admissible on a ball") {
        cfg.init = InitialData::constant(7.0);
        SolutionState c = init_state(cfg);
        REQUIRE(c.u.front() == 7.0);
        REQUIRE(c.u.back() == 7.0);
    }
    SECTION("constant data is rejected on the whole space") {
        cfg.domain = {DomainKind::WholeSpace, 1.0};
        cfg.init = InitialData::constant(7.0);
        REQUIRE_THROWS_AS(init_state(cfg), std::invalid_argument);
    }
    SECTION("tabulated data is sampled monotonically") {
        cfg.init = InitialData::tabulated({0.0, 0.3, 0.7, 1.0}, {5.0, 4.0, 2.0, 0.0});
        SolutionState tswq = init_state(cfg);
        REQUIRE(tswq.u[0] == Catch::Approx(5.0).margin(1e-12));
        check_shape(tswq, true);
    }
    SECTION("increasing tabulated data is rejected, not repaired") {
        cfg.init = InitialData::tabulated({0.0, 0.3, 0.7, 1.0}, {1.0, 2.0, 3.0, 4.0});
        REQUIRE_THROWS_AS(init_state(cfg), std::invalid_argument);
    }
    SECTION("negative tabulated data is rejected") {
        cfg.init = InitialData::tabulated({0.0, 0.3, 0.7, 1.0}, {5.0, 4.0, -0.1, 0.0});
        REQUIRE_THROWS_AS(init_state(cfg), std::invalid_argument);
    }
}

TEST_CASE("config validation rejects bad requests") {
    RunConfig cfg = reference_config();

    cfg.n = 0;
    REQUIRE_THROWS_AS(init_state(cfg), std::invalid_argument);
    cfg = reference_config();
    cfg.grid.nodes = 5;
    REQUIRE_THROWS_AS(init_state(cfg), std::invalid_argument);
    cfg = reference_config();
    cfg.dt.safety = 0.0;
    REQUIRE_THROWS_AS(init_state(cfg), std::invalid_argument);
    cfg = reference_config();
    cfg.u_max = 1e99;
    REQUIRE_THROWS_AS(init_state(cfg), std::invalid_argument);
    cfg = reference_config();
    cfg.init.amplitude = -3.0;
    REQUIRE_THROWS_AS(init_state(cfg), std::invalid_argument);
    cfg = reference_config();
    cfg.init.width = 2.0;  // wider than the ball
    REQUIRE_THROWS_AS(init_state(cfg), std::invalid_argument);
}

TEST_CASE("single accepted steps advance the state") {
    RunConfig cfg = reference_config();
    cfg.grid.nodes = 201;
    SolutionState st = init_state(cfg);

    SolutionState s1 = step(st, cfg);
    REQUIRE(s1.t > 0.0);
    REQUIRE(s1.dt_last == s1.t);
    REQUIRE(s1.u[0] > st.u[0]);  // reaction wins at the flat center
    check_shape(s1, true);

    SolutionState s2 = step(s1, cfg);
    REQUIRE(s2.t > s1.t);

    SolutionState bad = st;
    bad.u.assign(st.r.size(), 2e10);  // beyond u_max
    std::sort(bad.u.rbegin(), bad.u.rend());
    REQUIRE_THROWS_AS(step(bad, cfg), std::invalid_argument);

    SolutionState tiny;
    tiny.r = {0.0, 0.5, 1.0};
    tiny.u = {1.0, 0.5, 0.0};
    REQUIRE_THROWS_AS(step(tiny, cfg), std::invalid_argument);
}

TEST_CASE("pure diffusion contracts the sup norm") {
    RunConfig cfg = reference_config();
    cfg.reaction_enabled = false;
    cfg.grid.nodes = 401;
    cfg.grid.grading = 6.0;  // graded but not core-driven: no core to chase
    cfg.t_horizon = 0.02;
    cfg.u_max = 1e6;

    RunRecord rec = solve(cfg);
    REQUIRE(rec.status == RunStatus::NoBlowupDetected);
    REQUIRE(rec.m_value.size() > 10);
    // Contraction holds up to tridiagonal roundoff: the implicit solve at
    // large dt/h^2 carries ~1e-12..1e-11 relative elimination noise.
    for (std::size_t k = 1; k < rec.m_value.size(); ++k)
        REQUIRE(rec.m_value[k] <= rec.m_value[k - 1] * (1.0 + 1e-10));
    for (const auto& s : rec.snapshots) check_shape(s, true);
}

TEST_CASE("reaction-only trajectories match direct integration") {
    // With diffusion switched off every node follows u' = f(u); the center
    // history must agree with the resolvent integrator. The comparison is in
    // implied blow-up time: t_k + G(m_k) is constant along the exact flow,
    // and pointwise value comparison at fixed t is ill-posed this close to
    // blow-up (d log u / dT ~ f(u)/u overwhelms double precision).
    RunConfig cfg;
    cfg.spec = pp2();
    cfg.init = InitialData::constant(1.0);
    cfg.grid.nodes = 65;
    cfg.diffusion_enabled = false;
    cfg.u_max = 1e10;
    cfg.t_horizon = 100.0;

    RunRecord rec = solve(cfg);
    REQUIRE(rec.status == RunStatus::BlewUp);

    ResolventTable tb = build_table(pp2(), 0.5, 4e10, 1e-12);
    for (std::size_t k = 0; k < rec.m_time.size(); ++k) {
        double implied = rec.m_time[k] + G(tb, rec.m_value[k]);
        REQUIRE(std::abs(implied - 1.0) < 1e-6);
    }
    REQUIRE(rec.has_estimate);
    REQUIRE(std::abs(rec.estimate.T_hat - 1.0) < 1e-6);
    REQUIRE(rec.estimate.spread < 2e-6);

    SECTION("cubic nonlinearity") {
        cfg.spec = pp3();
        RunRecord r3 = solve(cfg);
        REQUIRE(r3.status == RunStatus::BlewUp);
        ResolventTable t3 = build_table(pp3(), 0.5, 4e10, 1e-12);
        for (std::size_t k = 0; k < r3.m_time.size(); ++k) {
            double implied = r3.m_time[k] + G(t3, r3.m_value[k]);
            REQUIRE(std::abs(implied - 0.5) < 5e-7);
        }
        REQUIRE(std::abs(r3.estimate.T_hat - 0.5) < 5e-7);
    }
}

TEST_CASE("reference run honors the ode envelope and shape invariants") {
    const RunRecord& rec = reference_run();
    REQUIRE(rec.status == RunStatus::BlewUp);
    REQUIRE(rec.m_value.back() >= 1e10);

    // m(t) <= Psi(t) (1 + 1e-5), Psi the flat solution from m(0) = 20.
    // Once t passes Psi's blow-up time the envelope is vacuous.
    ResolventTable tb = build_table(pp2(), 10.0, 1e9, 1e-12);
    double T_flat = G(tb, 20.0);
    std::size_t compared = 0;
    for (std::size_t k = 0; k < rec.m_time.size(); ++k) {
        double envelope;
        try {
            envelope = G_inv(tb, T_flat - rec.m_time[k]);
        } catch (const std::out_of_range&) {
            break;
        }
        REQUIRE(rec.m_value[k] <= envelope * (1.0 + 1e-5));
        ++compared;
    }
    REQUIRE(compared > 100);

    for (const auto& s : rec.snapshots) check_shape(s, true);
    for (std::size_t i = 1; i < rec.snapshots.size(); ++i)
        REQUIRE(rec.snapshots[i].t > rec.snapshots[i - 1].t);
    REQUIRE(rec.snapshots.size() >= 8);

    // Late-phase center history climbs strictly.
    std::size_t K = rec.m_value.size();
    for (std::size_t k = K - K / 4; k < K; ++k)
        REQUIRE(rec.m_value[k] > rec.m_value[k - 1]);

    REQUIRE(rec.has_estimate);
    REQUIRE(rec.estimate.T_hat >= T_flat * (1.0 - 1e-9));  // diffusion only delays
    REQUIRE(rec.estimate.T_hat >= rec.m_time.back());
    REQUIRE(rec.estimate.T_hat < 1.0);
    REQUIRE(std::isfinite(rec.estimate.spread));
    REQUIRE(rec.estimate.spread / rec.estimate.T_hat < 1e-3);
    REQUIRE(rec.regrid_count == 0);  // auto grading sized the core up front
}

TEST_CASE("no blow-up detected for small data") {
    RunConfig cfg;
    cfg.spec = pp2();
    cfg.init = InitialData::plateau_gaussian(1e-3);
    cfg.grid.nodes = 201;
    cfg.u_max = 10.0;
    cfg.t_horizon = 10.0;

    RunRecord rec = solve(cfg);
    REQUIRE(rec.status == RunStatus::NoBlowupDetected);
    REQUIRE(!rec.has_estimate);
    REQUIRE(rec.m_time.back() == Catch::Approx(10.0).epsilon(1e-9));
    REQUIRE(rec.m_value.back() < 1e-3);  // data decays under the Dirichlet loss
}

TEST_CASE("dimension three stays monotone and blows up") {
    RunConfig cfg = reference_config();
    cfg.n = 3;
    RunRecord rec = solve(cfg);
    REQUIRE(rec.status == RunStatus::BlewUp);
    for (const auto& s : rec.snapshots) check_shape(s, true);
    REQUIRE(rec.has_estimate);
    REQUIRE(rec.estimate.spread / rec.estimate.T_hat < 1e-3);
    // Extra diffusive loss in higher dimension can only postpone blow-up.
    REQUIRE(rec.estimate.T_hat > reference_run().estimate.T_hat);
}

TEST_CASE("estimator robustness on truncated histories") {
    RunConfig cfg = reference_config();
    cfg.u_max = 1e3;
    RunRecord rec = solve(cfg);
    REQUIRE(rec.status == RunStatus::BlewUp);
    REQUIRE(!rec.has_estimate);  // pipeline gate sits at 1e6

    BlowupEstimate est = estimate_T(rec);
    REQUIRE(std::isfinite(est.T_hat));
    REQUIRE(std::isfinite(est.spread));
    REQUIRE(est.T_hat > rec.m_time.back());
    // Diffusion still bites at m ~ 1e3, so the implied times drift far more
    // than in the deep window of the full reference run.
    REQUIRE(est.spread > 10.0 * reference_run().estimate.spread);

    RunRecord stub;
    stub.config = cfg;
    stub.m_time.assign(10, 0.0);
    stub.m_value.assign(10, 50.0);
    REQUIRE_THROWS_AS(estimate_T(stub), std::invalid_argument);

    stub.m_time.assign(64, 0.0);
    stub.m_value.assign(64, 50.0);  // never reaches m = 100
    REQUIRE_THROWS_AS(estimate_T(stub), std::invalid_argument);
}

TEST_CASE("grid doubling leaves the estimate essentially unchanged") {
    RunConfig cfg = reference_config();
    cfg.u_max = 1e8;
    cfg.grid.nodes = 801;
    RunRecord coarse = solve(cfg);
    cfg.grid.nodes = 1601;
    RunRecord fine = solve(cfg);
    REQUIRE(coarse.status == RunStatus::BlewUp);
    REQUIRE(fine.status == RunStatus::BlewUp);
    double shift = std::abs(coarse.estimate.T_hat - fine.estimate.T_hat);
    REQUIRE(shift < 1e-4 * fine.estimate.T_hat);
}

TEST_CASE("re-gridding engages on a deliberately coarse start") {
    RunConfig cfg = reference_config();
    cfg.u_max = 1e8;
    cfg.grid.nodes = 801;
    cfg.grid.grading = 3.0;  // far too weak for a 1e-4 core
    RunRecord rec = solve(cfg);
    REQUIRE(rec.status == RunStatus::BlewUp);
    REQUIRE(rec.regrid_count >= 1);
    for (const auto& s : rec.snapshots) check_shape(s, true);
    REQUIRE(rec.has_estimate);
}

TEST_CASE("whole-space truncation audit") {
    RunConfig cfg;
    cfg.spec = pp2();
    // The Gaussian tail spreads like exp(-d^2 / (w^2 + 4t)) under the heat
    // flow, so the audit radius must sit several widened widths out.
    cfg.domain = {DomainKind::WholeSpace, 4.5};
    cfg.init = InitialData::plateau_gaussian(20.0, 0.5);
    cfg.grid.nodes = 1201;
    cfg.u_max = 1e6;

    RunRecord rec = solve(cfg);
    REQUIRE(rec.status == RunStatus::BlewUp);
    REQUIRE(rec.snapshots.front().r.back() == Catch::Approx(5.625));  // enlarged ball
    REQUIRE(rec.whole_space_ok);
    REQUIRE(rec.whole_space_leak < 1e-8);

    SECTION("a tight truncation radius is flagged, not hidden") {
        cfg.domain = {DomainKind::WholeSpace, 1.0};
        RunRecord bad = solve(cfg);
        REQUIRE(!bad.whole_space_ok);
        REQUIRE(bad.whole_space_leak > 1e-8);
    }
}

TEST_CASE("j monitor signs and calibration") {
    // Synthetic Gaussian: |u_r| = 2 a r u dwarfs r f/(2(A + log f)) on the
    // whole monitored set, so every off-center J is negative and the center
    // value vanishes to stencil accuracy. Keep a modest so the one-sided
    // five-point derivative at r = 0 (error ~ h^5 u^(6) ~ a^3 h^5 u) stays
    // far below the positivity tolerance of 1e-6 * peak.
    std::vector<double> r = build_grid(1601, 0.0, 1.0);
    SolutionState st;
    st.r = r;
    st.u.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        st.u[i] = 1e4 * std::exp(-500.0 * r[i] * r[i]);

    double gate = aux_gate(pp2());
    JMonitor jm = j_monitor(st, pp2(), 0.0, gate, 1e-6);
    REQUIRE(jm.monitored_count >= 40);
    REQUIRE(jm.positive_fraction == 0.0);
    double peak = 0.0;
    for (std::size_t i = 0; i < jm.J.size(); ++i)
        if (jm.monitored[i]) peak = std::max(peak, std::abs(jm.J[i]));
    REQUIRE(std::abs(jm.J[0]) <= 1e-6 * peak);

    REQUIRE_THROWS_AS(j_monitor(st, pp2(), -1.0, gate), std::invalid_argument);
    SolutionState low = st;
    for (double& v : low.u) v *= 1e-4;  // everything below the gate
    REQUIRE_THROWS_AS(j_monitor(low, pp2(), 0.0, gate), std::runtime_error);

    SECTION("fitted A keeps the late-run monitor nonpositive") {
        const RunRecord& rec = reference_run();
        JCalibration cal = fit_j_parameters(rec, gate);
        REQUIRE(cal.k > 0.0);
        REQUIRE(std::isfinite(cal.A));
        REQUIRE(cal.A > 0.0);
        std::size_t from = rec.snapshots.size() - rec.snapshots.size() / 3;
        std::size_t frames = 0;
        for (std::size_t i = from; i < rec.snapshots.size(); ++i) {
            JMonitor late = j_monitor(rec.snapshots[i], pp2(), cal.A, gate);
            REQUIRE(late.monitored_count >= 100);
            REQUIRE(late.positive_fraction < 0.01);
            ++frames;
        }
        REQUIRE(frames >= 2);
    }
}

TEST_CASE("determinism of repeated solves") {
    RunConfig cfg = reference_config();
    cfg.grid.nodes = 201;
    cfg.u_max = 1e6;
    RunRecord a = solve(cfg);
    RunRecord b = solve(cfg);
    REQUIRE(a.m_value.size() == b.m_value.size());
    for (std::size_t k = 0; k < a.m_value.size(); ++k) {
        REQUIRE(a.m_value[k] == b.m_value[k]);
        REQUIRE(a.m_time[k] == b.m_time[k]);
    }
    REQUIRE(a.estimate.T_hat == b.estimate.T_hat);
}
