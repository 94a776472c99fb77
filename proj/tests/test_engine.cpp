#include "oracles.hpp"

#include "twomode/engine.hpp"
#include "twomode/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace twomode;

namespace {

const ModelParams P = ModelParams::paper_standard();

double vshape(const PhaseState& s)
{
    return std::sqrt(std::max(0.0, 1 - s.delta * s.delta)) * std::cos(s.theta / 2);
}

} // namespace

TEST_CASE("fixed point stays put")
{
    const Trajectory tr = integrate(P, Drive{}, {P.delta0(), 0.0}, 100.0, {.dt = 1e-3, .sample_stride = 1000});
    for (std::size_t i = 0; i < tr.size(); ++i) {
        CHECK(std::abs(tr.delta[i] - P.delta0()) < 1e-10);
        CHECK(std::abs(tr.theta[i]) < 1e-10);
    }
}

TEST_CASE("energy drift over t = 1000 at dt = 1e-3")
{
    const Trajectory tr = integrate(P, Drive{}, {0.0, kPi / 2}, 1000.0, {.dt = 1e-3, .sample_stride = 100});
    double drift = 0.0;
    for (double e : tr.energy) {
        drift = std::max(drift, std::abs(e));
    }
    CHECK(drift <= 1e-8);
    CHECK(tr.max_energy_drift <= 1e-8);
    CHECK(tr.t.back() == doctest::Approx(1000.0));
}

TEST_CASE("time reversal Theta -> -Theta returns the reflected start")
{
    for (PhaseState s0 : {PhaseState{0.0, kPi / 2}, PhaseState{-0.5, 0.3}, PhaseState{0.7, 2.0}}) {
        const Trajectory fwd = integrate(P, Drive{}, s0, 50.0);
        const PhaseState mid = fwd.state(fwd.size() - 1);
        const Trajectory back = integrate(P, Drive{}, {mid.delta, -mid.theta}, 50.0);
        const PhaseState end = back.state(back.size() - 1);
        CHECK(std::abs(end.delta - s0.delta) <= 1e-6);
        CHECK(std::abs(end.theta + s0.theta) <= 1e-6);
    }
}

TEST_CASE("driven trajectory agrees with a direct RK4 in (Delta, Theta)")
{
    const HarmonicDrive h{0.15, 2.5, 0.4};
    const PhaseState s0{-0.4, 0.5};
    const Trajectory tr = integrate(P, Drive(h), s0, 20.0, {.dt = 1e-3, .sample_stride = 20000});
    const PhaseState ref = oracle::rk4_phase(P, [&](double t) { return h.at(t).f; }, s0, 20.0, 1e-4);
    CHECK(tr.delta.back() == doctest::Approx(ref.delta).epsilon(1e-6));
    CHECK(tr.theta.back() == doctest::Approx(ref.theta).epsilon(1e-6));
}

TEST_CASE("identical inputs give identical trajectories")
{
    const HarmonicDrive h{0.2, 2.887, 0.0};
    const Trajectory a = integrate(P, Drive(h), {P.delta0(), 0.0}, 30.0);
    const Trajectory b = integrate(P, Drive(h), {P.delta0(), 0.0}, 30.0);
    CHECK(a.delta == b.delta);
    CHECK(a.theta == b.theta);
}

TEST_CASE("orbit frequency against the phase-area derivative")
{
    struct Case {
        double e;
        Branch b;
    };
    for (const Case c : {Case{-3.8, Branch::WellLeft}, Case{-3.7, Branch::WellLeft}, Case{-3.5, Branch::WellLeft},
                         Case{-3.4, Branch::Upper}, Case{-0.356, Branch::Upper}, Case{0.0, Branch::Upper},
                         Case{5.0, Branch::Upper}}) {
        const double ref = oracle::area_frequency(P, c.e, c.b != Branch::Upper);
        CHECK_MESSAGE(libration_frequency(P, c.e, c.b) == doctest::Approx(ref).epsilon(1e-5), c.e);
    }
}

TEST_CASE("frequency examples near the ends of the well")
{
    CHECK(libration_frequency(P, P.e_minus() + 1e-6, Branch::WellLeft) == doctest::Approx(P.omega0()).epsilon(1e-2));
    // 1e-3 lies inside the default exclusion band; narrow it for this point.
    OrbitOptions close;
    close.sep_exclusion = 1e-5;
    CHECK(libration_frequency(P, P.e_sep() - 1e-3, Branch::WellLeft, close) < 0.5 * P.omega0());
    CHECK(orbit_period(P, P.e_sep() - 1e-3, Branch::WellLeft) == doctest::Approx(kTwoPi / libration_frequency(P, P.e_sep() - 1e-3, Branch::WellLeft, close)).epsilon(1e-3));
    CHECK(libration_frequency(P, -0.356, Branch::Upper) == doctest::Approx(2.887).epsilon(0.02));
    for (double e : {-3.8, -3.6, -3.5}) {
        CHECK(libration_frequency(P, e, Branch::WellLeft) == doctest::Approx(libration_frequency(P, e, Branch::WellRight)).epsilon(1e-10));
    }
    double prev = 1e9;
    for (int i = 1; i < 40; ++i) {
        const double e = P.e_minus() + P.well_depth() * i / 40.0;
        const double w = libration_frequency(P, e, Branch::WellLeft);
        CHECK(w < prev);
        prev = w;
    }
}

TEST_CASE("orbit errors outside the branch")
{
    auto code = [](auto fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    CHECK(code([] { periodic_orbit(P, 0.0, Branch::WellLeft); }) == ErrorCode::EnergyOutOfRange);
    CHECK(code([] { periodic_orbit(P, -3.6, Branch::Upper); }) == ErrorCode::EnergyOutOfRange);
    CHECK(code([] { periodic_orbit(P, P.e_sep() - 1e-6, Branch::WellLeft); }) == ErrorCode::PeriodNotConverged);
}

TEST_CASE("periodic orbit samples lie on the energy level")
{
    const PeriodicOrbit o = periodic_orbit(P, -3.6, Branch::WellRight);
    CHECK(o.period > 0.0);
    for (const auto& s : o.states) {
        CHECK(h0_energy(s, P) == doctest::Approx(-3.6).epsilon(1e-8));
        CHECK(std::abs(std::remainder(s.theta - kTwoPi, 4 * kPi)) < kPi);
    }
}

TEST_CASE("inverse-frequency integral equals the phase-area difference over 2 pi")
{
    const double lo = -3.8, hi = -3.55;
    const double ref = (oracle::sublevel_area(P, hi, -kPi, kPi) - oracle::sublevel_area(P, lo, -kPi, kPi)) / kTwoPi;
    CHECK(inverse_frequency_integral(P, lo, hi, Branch::WellLeft) == doctest::Approx(ref).epsilon(1e-6));
    // Whole well, up to the separatrix.
    const double well = oracle::sublevel_area(P, P.e_sep(), -kPi, kPi) / kTwoPi;
    CHECK(inverse_frequency_integral(P, P.e_minus(), P.e_sep(), Branch::WellLeft) == doctest::Approx(well).epsilon(1e-5));
    // Upper branch from the separatrix.
    auto upper_area = [](double e) { return oracle::sublevel_area(P, e, 0.0, 4 * kPi); };
    const double up = (upper_area(1.0) - upper_area(P.e_sep())) / kTwoPi;
    CHECK(inverse_frequency_integral(P, P.e_sep(), 1.0, Branch::Upper) == doctest::Approx(up).epsilon(1e-5));
}

TEST_CASE("orbit_fourier: constants, Parseval and synthesis")
{
    const PeriodicOrbit o = periodic_orbit(P, 0.0, Branch::Upper);
    const FourierSeries one = orbit_fourier(o, [](const PhaseState&) { return 1.0; }, 16);
    CHECK(one.coeffs[0].real() == doctest::Approx(1.0));
    for (std::size_t k = 1; k <= 16; ++k) {
        CHECK(std::abs(one.coeffs[k]) < 1e-12);
    }
    const FourierSeries en = orbit_fourier(o, [](const PhaseState& s) { return h0_energy(s, P); }, 16);
    CHECK(std::abs(en.coeffs[0].real()) < 1e-8);
    for (std::size_t k = 1; k <= 16; ++k) {
        CHECK(std::abs(en.coeffs[k]) < 1e-8);
    }

    for (double e : {-3.7, 0.0, 5.0}) {
        const PeriodicOrbit orb = periodic_orbit(P, e, e < P.e_sep() ? Branch::WellLeft : Branch::Upper);
        const FourierSeries v = orbit_fourier(orb, vshape, 256);
        double mean_sq = 0.0;
        for (const auto& s : orb.states) {
            mean_sq += vshape(s) * vshape(s);
        }
        mean_sq /= static_cast<double>(orb.states.size());
        double sum = std::norm(v.coeffs[0]);
        for (std::size_t k = 1; k <= 256; ++k) {
            sum += 2.0 * std::norm(v.coeffs[k]);
        }
        CHECK(sum == doctest::Approx(mean_sq).epsilon(1e-6));
        CHECK_FALSE(v.alias_warning);

        const FourierSeries v64 = orbit_fourier(orb, vshape, 64);
        double worst = 0.0;
        for (std::size_t i = 0; i < orb.states.size(); i += 7) {
            const double t = static_cast<double>(i) * orb.sample_dt();
            worst = std::max(worst, std::abs(v64.synthesize(t) - vshape(orb.states[i])));
        }
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("separatrix orbit")
{
    for (Loop loop : {Loop::Left, Loop::Right}) {
        const SeparatrixOrbit so = separatrix_orbit(P, loop, 1e-6);
        CHECK(std::abs(so.states.front().delta + 1.0) <= 1e-6 + 1e-12);
        CHECK(std::abs(so.states.back().delta + 1.0) <= 1e-6 + 1e-12);
        CHECK(so.t.front() < 0.0);
        CHECK(so.t.back() > 0.0);
        double worst = 0.0;
        for (const auto& s : so.states) {
            worst = std::max(worst, std::abs(h0_energy(s, P) - P.e_sep()));
        }
        CHECK(worst <= 1e-8);
        CHECK(std::abs(vshape(so.states.front())) < 2e-3);
        CHECK(std::abs(vshape(so.states.back())) < 2e-3);
    }
}
