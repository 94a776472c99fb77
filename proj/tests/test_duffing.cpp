#include "oracles.hpp"

#include "twomode/duffing.hpp"
#include "twomode/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace twomode;

TEST_CASE("Duffing simulation basics")
{
    const DuffingTrajectory rest = duffing_simulate(0.0, 1.0, 50.0);
    for (const auto& s : rest.states) {
        CHECK(s.x == 0.0);
    }
    CHECK_FALSE(rest.escape_time.has_value());

    const DuffingTrajectory hit = duffing_simulate(0.2, 1.0, 400.0);
    REQUIRE(hit.escape_time.has_value());
    CHECK(std::abs(hit.states.back().x) >= 1.0 - 1e-3);

    // Linear envelope F / |delta| for a small drive away from resonance.
    const DuffingTrajectory lin = duffing_simulate(0.01, 1.2, 200.0);
    double mx = 0.0;
    for (const auto& s : lin.states) {
        mx = std::max(mx, std::abs(s.x));
    }
    CHECK(mx == doctest::Approx(0.01 / 0.2).epsilon(0.2));
}

TEST_CASE("Duffing energy conservation and drive-sign symmetry")
{
    DuffingOptions opt;
    opt.start = {0.5, 0.1};
    opt.sample_stride = 1000;
    const DuffingTrajectory tr = duffing_simulate(0.0, 1.0, 1000.0, opt);
    const double e0 = duffing_energy(opt.start);
    double worst = 0.0;
    for (const auto& s : tr.states) {
        worst = std::max(worst, std::abs(duffing_energy(s) - e0));
    }
    CHECK(worst <= 1e-9);

    DuffingThresholdConfig c;
    c.bisection_iters = 10;
    for (double w : {0.85, 1.1}) {
        const double up = duffing_threshold_numeric(w, c);
        c.sign = -1.0;
        const double down = duffing_threshold_numeric(w, c);
        c.sign = 1.0;
        CHECK(up == doctest::Approx(down).epsilon(1e-12));
    }
}

TEST_CASE("linear threshold estimate")
{
    CHECK(duffing_linear_threshold(0.0) == 0.0);
    CHECK(duffing_linear_threshold(0.1) == 0.1);
    CHECK(duffing_linear_threshold(-0.05) == 0.05);
}

TEST_CASE("slow flow: free phase drift and early-time expansions")
{
    const SlowFlowHistory free = slow_flow_integrate(0.0, 0.3, 10.0);
    for (std::size_t i = 0; i < free.t.size(); ++i) {
        CHECK(free.states[i].amp == 0.0);
        CHECK(free.states[i].phi == doctest::Approx(kPi - 0.15 * free.t[i]).epsilon(1e-12));
    }
    const double f = 0.05;
    SlowFlowConfig cfg;
    cfg.dt = 1e-3;
    const SlowFlowHistory h = slow_flow_integrate(f, 0.0, 10.0, cfg);
    for (std::size_t i = 1; i < h.t.size(); i += 1000) {
        const double t = h.t[i];
        CHECK(h.states[i].amp == doctest::Approx(f * t / 2).epsilon(1e-2));
        CHECK(kPi - h.states[i].phi == doctest::Approx(f * f * t * t * t / 128).epsilon(1e-2));
    }
    // Below -3/16 the phase only grows while the amplitude is small.
    SlowFlowConfig stop;
    stop.stop_amp = 1.0;
    const SlowFlowHistory g = slow_flow_integrate(0.05, -0.25, 200.0, stop);
    for (std::size_t i = 1; i < g.t.size(); ++i) {
        CHECK(g.states[i].phi > g.states[i - 1].phi);
    }
}

TEST_CASE("linear slow flow reproduces the beat envelope")
{
    for (double delta : {0.2, -0.3}) {
        SlowFlowConfig cfg;
        cfg.variant = SlowFlowVariant::Linear;
        cfg.dt = 1e-3;
        const double f = 0.01;
        const SlowFlowHistory h = slow_flow_integrate(f, delta, 2 * kTwoPi / std::abs(delta), cfg);
        // A(t) = (F/|delta|) |sin(delta t / 2)|.
        CHECK(h.max_amp() == doctest::Approx(f / std::abs(delta)).epsilon(1e-2));
    }
}

TEST_CASE("analytic resonance threshold")
{
    const double series = oracle::resonance_series();
    CHECK(resonance_integral() == doctest::Approx(series).epsilon(1e-12));
    CHECK(resonance_integral(8) == doctest::Approx(resonance_integral(16)).epsilon(1e-6));
    CHECK(resonance_integral() < 3 * std::cbrt(kPi / 2));
    CHECK(resonance_threshold_analytic() == doctest::Approx(27.0 / 16.0 / (series * series * series)).epsilon(1e-12));
    CHECK(std::abs(resonance_threshold_analytic() - 0.0666) <= 5e-4);
    CHECK(resonance_threshold_analytic() == resonance_threshold_analytic());
}

TEST_CASE("slow-flow threshold at resonance from the conserved quantity")
{
    // K = delta A / 2 + A^3 / 32 - (F / 2) sin phi is conserved by the slow
    // flow; from (0, pi) the amplitude reaches 1 at phi = pi / 2 exactly
    // when F = |delta + 1/16| for delta near 0.
    for (double delta : {-0.02, 0.0, 0.03}) {
        CHECK(slow_flow_threshold(delta) == doctest::Approx(std::abs(delta + 1.0 / 16)).epsilon(1e-6));
    }
    SlowFlowThresholdConfig bad;
    bad.f_hi = 1e-6;
    bad.max_doublings = 1;
    CHECK_THROWS_AS(slow_flow_threshold(0.0, bad), Error);
}

TEST_CASE("numeric threshold large-detuning wing")
{
    DuffingThresholdConfig c;
    c.bisection_iters = 10;
    CHECK(duffing_threshold_numeric(1.3, c) == doctest::Approx(0.3).epsilon(0.4));
}

TEST_CASE("Duffing curve rows")
{
    DuffingThresholdConfig c;
    c.bisection_iters = 6;
    const std::vector<double> w{1.1, 0.9};
    const auto rows = duffing_threshold_curve(w, c, {}, 1, false);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].omega == 0.9);
    CHECK(std::isnan(rows[0].f_numeric));
    CHECK(rows[0].f_linear == doctest::Approx(0.1));
    CHECK(rows[1].f_slow_flow > 0.0);
}
