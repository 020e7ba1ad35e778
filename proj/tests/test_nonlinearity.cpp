#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "blowup/nonlinearity.hpp"

using namespace blowup;

namespace {

std::vector<NonlinearitySpec> catalogue() {
    return {
        NonlinearitySpec::pure_power(2.0),
        NonlinearitySpec::pure_power(3.0),
        NonlinearitySpec::log_power(2.0, 2.0, 1.0),
        NonlinearitySpec::log_power(2.0, 2.0, -1.5),
        NonlinearitySpec::iterated_log(2.0, 2, 20.0),
        NonlinearitySpec::exp_log_pow(2.0, 0.3),
        NonlinearitySpec::oscillating_log_sin(2.0),
        NonlinearitySpec::exp_log_cos(2.0, 0.2, 0.2),
        NonlinearitySpec::sin_log_pow(2.0, 0.5, 0.3),
    };
}

}  // namespace

TEST_CASE("power-log evaluation matches hand-computed values") {
    auto sp = NonlinearitySpec::log_power(2.0, 2.0, 1.0);
    FTriple v = eval_f(sp, 1.0);
    REQUIRE(v.f == Catch::Approx(1.0986122886681097).epsilon(1e-14));
    REQUIRE(v.fp == Catch::Approx(2.5305579106695527).epsilon(1e-14));

    auto sq = NonlinearitySpec::log_power(2.0, 2.0, 2.0);
    LTriple l = eval_L(sq, std::exp(1.0) - 2.0);
    REQUIRE(l.L == Catch::Approx(1.0).epsilon(1e-14));
    REQUIRE(l.Lp == Catch::Approx(0.7357588823428846).epsilon(1e-13));
}

TEST_CASE("pure power is the trivial slowly varying factor") {
    auto sp = NonlinearitySpec::pure_power(3.0);
    REQUIRE(eval_f(sp, 0.0).f == 0.0);
    REQUIRE(eval_f(sp, 2.0).f == Catch::Approx(8.0));
    REQUIRE(eval_f(sp, 2.0).fp == Catch::Approx(12.0));
    REQUIRE(eval_f(sp, 2.0).fpp == Catch::Approx(12.0));
    REQUIRE(eval_L(sp, 5.0).L == 1.0);
    REQUIRE(eval_L(sp, 5.0).Lp == 0.0);
}

TEST_CASE("analytic derivatives agree with finite differences") {
    std::mt19937 rng(20240517);
    std::uniform_real_distribution<double> uexp(1.5, 18.0);
    for (const auto& sp : catalogue()) {
        for (int trial = 0; trial < 200; ++trial) {
            double s = std::exp(uexp(rng));
            double h = s * 1e-6;
            FTriple lo = eval_f(sp, s - h), hi = eval_f(sp, s + h);
            FTriple at = eval_f(sp, s);
            double fd1 = (hi.f - lo.f) / (2.0 * h);
            double fd2 = (hi.fp - lo.fp) / (2.0 * h);
            REQUIRE(fd1 == Catch::Approx(at.fp).epsilon(1e-5));
            REQUIRE(fd2 == Catch::Approx(at.fpp).epsilon(1e-5));

            LTriple la = eval_L(sp, s);
            double ld1 = (eval_L(sp, s + h).L - eval_L(sp, s - h).L) / (2.0 * h);
            if (std::abs(la.Lp) > 1e-300 * la.L)
                REQUIRE(ld1 == Catch::Approx(la.Lp).epsilon(2e-5));
        }
    }
}

TEST_CASE("positivity thresholds and the sub-threshold extension") {
    auto sp = NonlinearitySpec::exp_log_pow(2.0, 0.3);
    double t = positivity_threshold(sp);
    REQUIRE(t == Catch::Approx(std::exp(1.0)));
    REQUIRE_THROWS_AS(eval_L(sp, 2.0), std::domain_error);

    // extension: continuous and C^1 at the threshold, zero at the origin
    ExtendedF below = eval_f_extended(sp, t * (1.0 - 1e-9));
    FTriple above = eval_f(sp, t);
    REQUIRE(below.f == Catch::Approx(above.f).epsilon(1e-7));
    REQUIRE(below.fp == Catch::Approx(above.fp).epsilon(1e-6));
    REQUIRE(eval_f_extended(sp, 0.0).f == 0.0);
    double prev = 0.0;
    for (double s = 0.1; s < t; s += 0.2) {
        ExtendedF v = eval_f_extended(sp, s);
        REQUIRE(v.f > prev);   // monotone and positive below the threshold
        REQUIRE(v.fp >= 0.0);
        prev = v.f;
    }

    auto neg = NonlinearitySpec::log_power(2.0, 1.2, -1.5);
    REQUIRE(positivity_threshold(neg) == Catch::Approx(std::exp(1.0) - 1.2));
    // families positive from the origin need no extension
    REQUIRE(positivity_threshold(NonlinearitySpec::sin_log_pow(2.0, 0.5, 0.3)) == 0.0);
}

TEST_CASE("slow variation index collapses like 1/log for the log family") {
    auto sp = NonlinearitySpec::log_power(2.0, 2.0, 1.0);
    auto ix = slow_variation_index(sp, std::exp(20.0));
    REQUIRE(ix.eta1 * 20.0 == Catch::Approx(1.0).epsilon(1e-6));
    REQUIRE(std::abs(ix.weighted1 - std::pow(20.0, 0.6) / 20.0) < 1e-6);
}

TEST_CASE("slow-variation ratio bound holds on the admissible window") {
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> us(50.0, 200.0);
    std::uniform_real_distribution<double> uu(-1.0, 1.0);
    for (const auto& sp : catalogue()) {
        for (int trial = 0; trial < 1000; ++trial) {
            double logs = us(rng);
            double s = std::exp(logs);
            double window = 0.125 * std::pow(logs, sp.alpha);
            double lambda = std::exp(window * uu(rng));
            auto kb = karamata_ratio_bound(sp, s, lambda);
            REQUIRE(kb.margin >= 0.0);
        }
    }
    auto sp = NonlinearitySpec::log_power(2.0, 2.0, 1.0);
    REQUIRE_THROWS_AS(karamata_ratio_bound(sp, std::exp(60.0), 1e9),
                      std::domain_error);
    REQUIRE_THROWS_AS(karamata_ratio_bound(sp, 100.0, 1.01), std::domain_error);
}

TEST_CASE("convexity gate and the damped reaction term") {
    auto pp = NonlinearitySpec::pure_power(2.0);
    double gate = aux_gate(pp);
    REQUIRE(gate == Catch::Approx(std::exp(2.0)).epsilon(1e-10));

    auto at_gate = aux_convexity_check(pp, 0.0, std::exp(2.0));
    REQUIRE(at_gate.phi == Catch::Approx(0.25).epsilon(1e-12));

    std::mt19937 rng(99);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    for (const auto& sp : catalogue()) {
        double M = aux_gate(sp);
        for (int trial = 0; trial < 50; ++trial) {
            double s = M * std::exp(40.0 * ur(rng));
            double A = 10.0 * ur(rng);
            auto ac = aux_convexity_check(sp, A, s, M);
            REQUIRE(ac.phi > 0.0);
            REQUIRE(ac.phi <= 0.25 + 1e-15);
            REQUIRE(ac.F > 0.0);
            // derivative identity against finite differences of F itself
            double h = s * 1e-7;
            auto lo = aux_convexity_check(sp, A, s - h, M);
            auto hi = aux_convexity_check(sp, A, s + h, M);
            double fd = (hi.F - lo.F) / (2.0 * h);
            REQUIRE(fd == Catch::Approx(ac.Fp).epsilon(1e-5));
        }
    }

    // convexity along the documented ladder
    auto lp = NonlinearitySpec::log_power(2.0, 2.0, 1.0);
    double M = aux_gate(lp);
    for (double ls = 5.0; ls <= 30.0; ls += 1.0) {
        auto ac = aux_convexity_check(lp, 5.0, std::exp(ls), M);
        REQUIRE(ac.Fpp >= 0.0);
    }
    REQUIRE_THROWS_AS(aux_convexity_check(pp, -1.0, 100.0), std::domain_error);
    REQUIRE_THROWS_AS(aux_convexity_check(pp, 0.0, 1.0), std::domain_error);
}

TEST_CASE("hypothesis validation accepts the catalogue, flags bad parameters") {
    for (const auto& sp : catalogue()) {
        auto rep = validate_hypotheses(sp, 1);
        CAPTURE(family_name(sp.family));
        for (const auto& e : rep.entries) {
            CAPTURE(e.name, e.detail);
            REQUIRE(e.pass);
        }
    }
    // subcriticality in dimension 3: p = 2 passes, p = 6 does not
    REQUIRE(validate_hypotheses(NonlinearitySpec::pure_power(2.0), 3).all_pass);
    REQUIRE_FALSE(validate_hypotheses(NonlinearitySpec::pure_power(6.0), 3).all_pass);

    auto bad = validate_hypotheses(NonlinearitySpec::exp_log_cos(2.0, 0.3, 0.3), 1);
    REQUIRE_FALSE(bad.all_pass);
    REQUIRE_FALSE(bad.entries.front().pass);

    REQUIRE_FALSE(validate_hypotheses(NonlinearitySpec::log_power(2.0, 0.5, 1.0), 1)
                      .all_pass);
    REQUIRE(iterated_exp_zero(3) == Catch::Approx(15.154262241479264).epsilon(1e-14));
}

TEST_CASE("flat key-value serialization round-trips") {
    for (const auto& sp : catalogue()) {
        auto kv = to_kv(sp);
        std::map<std::string, std::string> m(kv.begin(), kv.end());
        std::vector<std::string> errors;
        NonlinearitySpec back = from_kv(m, errors);
        CAPTURE(family_name(sp.family));
        REQUIRE(errors.empty());
        REQUIRE(back.family == sp.family);
        REQUIRE(back.p == sp.p);
        REQUIRE(back.K == sp.K);
        REQUIRE(back.a == sp.a);
        REQUIRE(back.m == sp.m);
        REQUIRE(back.nu == sp.nu);
        REQUIRE(back.gamma == sp.gamma);
    }

    std::vector<std::string> errors;
    from_kv({{"family", "cubic_spline"}}, errors);
    REQUIRE_FALSE(errors.empty());

    errors.clear();
    from_kv({{"family", "log_power"}, {"p", "2.0"}, {"K", "two"}, {"a", "1"}},
            errors);
    REQUIRE_FALSE(errors.empty());

    errors.clear();
    from_kv({{"family", "exp_log_cos"}, {"p", "2"}, {"nu", "0.3"}, {"gamma", "0.3"}},
            errors);
    REQUIRE_FALSE(errors.empty());  // parameter constraint violated
}

TEST_CASE("critical exponent by dimension") {
    REQUIRE(std::isinf(sobolev_critical(1)));
    REQUIRE(std::isinf(sobolev_critical(2)));
    REQUIRE(sobolev_critical(3) == Catch::Approx(5.0));
    REQUIRE(sobolev_critical(4) == Catch::Approx(3.0));
    REQUIRE(sobolev_critical(6) == Catch::Approx(2.0));
}
