#include "oracles.hpp"

#include "twomode/error.hpp"
#include "twomode/noise.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace twomode;

namespace {

const ModelParams P = ModelParams::paper_standard();

template <typename Fn>
ErrorCode code_of(Fn fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

/// (1/2) int (dV/dt)^2 dt over one period from the direct RK4 and the
/// chain rule, with the period taken from the phase area.
double diffusion_oracle(const PhaseState& start, bool well)
{
    const double e = h0_energy(start, P);
    const double period = oracle::area_period(P, e, well);
    const double dt = period / 20000.0;
    auto vdot = [](const PhaseState& s) {
        const PhaseRate r = eom_rhs(s, P, {});
        const double sq = std::sqrt(1 - s.delta * s.delta);
        return -s.delta / sq * std::cos(s.theta / 2) * r.d_delta - 0.5 * sq * std::sin(s.theta / 2) * r.d_theta;
    };
    double acc = 0.5 * vdot(start) * vdot(start);
    double last = 0.0;
    oracle::rk4_phase(P, [](double) { return 0.0; }, start, period, dt, [&](double, const PhaseState& s) {
        last = vdot(s) * vdot(s);
        acc += last;
    });
    acc -= 0.5 * last;
    return 0.5 * acc * dt;
}

ProfileConfig small_grid()
{
    ProfileConfig c;
    c.well_cells = 10;
    c.upper_cells = 30;
    return c;
}

} // namespace

TEST_CASE("diffusion coefficient against the direct time integral")
{
    // Well orbit through Theta = 0 and an upper orbit through (0, pi/2).
    const double e = -3.7;
    const double a = P.a() + P.b(), b = P.omega(), c = -P.b() - e;
    const PhaseState well_start{(-b + std::sqrt(b * b - 4 * a * c)) / (2 * a), 0.0};
    CHECK(diffusion_coefficient(P, e, Branch::WellLeft) == doctest::Approx(diffusion_oracle(well_start, true)).epsilon(1e-5));
    CHECK(diffusion_coefficient(P, 0.0, Branch::Upper) == doctest::Approx(diffusion_oracle({0.0, kPi / 2}, false)).epsilon(1e-5));
}

TEST_CASE("diffusion coefficient: both methods, limits, sign")
{
    for (double e : {-3.8, -3.6, -3.4, 0.0, 4.0}) {
        const Branch br = e < P.e_sep() ? Branch::WellLeft : Branch::Upper;
        const double dt = diffusion_coefficient(P, e, br, DiffusionMethod::TimeIntegral);
        const double df = diffusion_coefficient(P, e, br, DiffusionMethod::FourierSum);
        CHECK(dt > 0.0);
        CHECK_MESSAGE(df == doctest::Approx(dt).epsilon(1e-4), e);
    }
    CHECK(diffusion_coefficient(P, P.e_minus() + 1e-6, Branch::WellLeft) < 1e-4 * diffusion_coefficient(P, -3.6, Branch::WellLeft));
    CHECK(diffusion_coefficient(P, -3.6, Branch::WellLeft) == doctest::Approx(diffusion_coefficient(P, -3.6, Branch::WellRight)).epsilon(1e-10));
    CHECK(to_string(DiffusionMethod::FourierSum) == "fourier-sum");
}

TEST_CASE("band-limited diffusion")
{
    const double e = P.e_sep() + separatrix_offset(P);
    const double full = diffusion_coefficient(P, e, Branch::Upper, DiffusionMethod::FourierSum);
    CHECK(diffusion_coefficient_bandlimited(P, e, Branch::Upper, INFINITY) == doctest::Approx(full).epsilon(1e-12));
    double prev = 0.0;
    for (double cut : {0.5, 1.0, 2.0, 2.9, 5.0, 20.0, 200.0}) {
        const double d = diffusion_coefficient_bandlimited(P, e, Branch::Upper, cut);
        CHECK(d >= prev);
        CHECK(d <= full * (1 + 1e-12));
        prev = d;
    }
    CHECK(diffusion_coefficient_bandlimited(P, 2.0, Branch::Upper, 1.0) == 0.0);
    CHECK(diffusion_coefficient_bandlimited(P, -3.8, Branch::WellLeft, 2.0) == 0.0);
    CHECK(code_of([] { diffusion_coefficient_bandlimited(P, 0.0, Branch::Upper, -1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("locking energy")
{
    const double eh = locking_energy(P, 2.5);
    CHECK(eh > P.e_sep());
    CHECK(libration_frequency(P, eh, Branch::Upper) == doctest::Approx(2.5).epsilon(1e-8));
    const double w_edge = libration_frequency(P, P.e_sep() + separatrix_offset(P), Branch::Upper);
    const double near = locking_energy(P, w_edge * 1.01);
    CHECK(near > P.e_sep());
    CHECK(near - P.e_sep() < 0.05 * P.energy_span());
    CHECK(code_of([] { locking_energy(P, 100.0); }) == ErrorCode::RootNotBracketed);
}

TEST_CASE("white noise statistics and spectrum")
{
    const double dt = 0.01, s0 = 0.5;
    const std::size_t n = 1 << 20;
    const NoisePath w = white_noise_path(3, dt, n, s0);
    REQUIRE(w.samples.size() == n);
    const double mean = std::accumulate(w.samples.begin(), w.samples.end(), 0.0) / static_cast<double>(n);
    const double sigma = std::sqrt(kTwoPi * s0 / dt);
    CHECK(std::abs(mean) <= 5 * sigma / std::sqrt(static_cast<double>(n)));

    const std::size_t m = 256;
    const std::vector<double> first(w.samples.begin(), w.samples.begin() + 512 * m);
    const auto s = oracle::periodogram(first, dt, m);
    double avg = 0.0;
    for (std::size_t k = 1; k < m / 2; ++k) {
        avg += s[k];
    }
    avg /= static_cast<double>(m / 2 - 1);
    CHECK(avg == doctest::Approx(s0).epsilon(0.05));
    for (std::size_t k = 1; k < m / 2; k += 8) {
        CHECK(s[k] == doctest::Approx(s0).epsilon(0.25));
    }

    const double cut = 2.887;
    const NoisePath c = white_noise_path(3, dt, 1 << 17, s0, cut);
    const auto sc = oracle::periodogram(c.samples, dt, 4096);
    const double dw = kTwoPi / (4096 * dt);
    double below = 0.0, above = 0.0;
    int nb = 0, na = 0;
    for (std::size_t k = 1; k < sc.size(); ++k) {
        const double wk = static_cast<double>(k) * dw;
        if (wk < 0.8 * cut) {
            below += sc[k];
            ++nb;
        } else if (wk > 1.2 * cut) {
            above = std::max(above, sc[k]);
            ++na;
        }
    }
    CHECK(below / nb == doctest::Approx(s0).epsilon(0.1));
    CHECK(above < 0.01 * s0);

    CHECK(code_of([] { white_noise_path(1, 0.1, 100, 1.0, 40.0); }) == ErrorCode::CutoffAboveNyquist);
    const NoisePath again = white_noise_path(3, dt, 1000, s0);
    CHECK(std::equal(again.samples.begin(), again.samples.end(), w.samples.begin()));
}

TEST_CASE("Langevin runs")
{
    auto zero = std::make_shared<const NoisePath>(white_noise_path(1, 0.01, 1001, 0.0));
    const Trajectory calm = langevin_simulate(P, zero, {0.0, kPi / 2}, 10.0, {.dt = 1e-3});
    const Trajectory ref = integrate(P, Drive{}, {0.0, kPi / 2}, 10.0, {.dt = 1e-3});
    CHECK(calm.delta.back() == doctest::Approx(ref.delta.back()).epsilon(1e-12));
    CHECK(calm.theta.back() == doctest::Approx(ref.theta.back()).epsilon(1e-12));

    auto noisy = std::make_shared<const NoisePath>(white_noise_path(9, 0.01, 2001, 0.01));
    const Trajectory a = langevin_simulate(P, noisy, {P.delta0(), 0.0}, 20.0, {.dt = 1e-2});
    const Trajectory b = langevin_simulate(P, noisy, {P.delta0(), 0.0}, 20.0, {.dt = 1e-2});
    CHECK(a.delta == b.delta);
    CHECK(a.energy.back() != doctest::Approx(P.e_minus()));

    CHECK(code_of([&] { langevin_simulate(P, noisy, {P.delta0(), 0.0}, 30.0, {.dt = 1e-2}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { langevin_simulate(P, noisy, {P.delta0(), 0.0}, 5.0, {.dt = 0.003}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("Fokker-Planck: stationary state, conservation, symmetry")
{
    const DiffusionProfile prof = make_diffusion_profile(P, small_grid());
    CHECK(prof.well_cells() == 10);
    CHECK(prof.upper_cells() == 30);
    for (double d : prof.well_d) {
        CHECK(d >= 0.0);
    }
    // The face at the junction carries the one-sided values with ratio near 2.
    CHECK(prof.upper_d.front() / prof.well_d.back() > 1.5);

    const BranchedDensity st = stationary_density(prof);
    CHECK(total_mass(prof, st) == doctest::Approx(1.0).epsilon(1e-12));
    const double dt = 0.9 * fp_stable_dt(prof);
    const BranchedDensity later = fp_evolve(prof, st, 1.0, dt);
    CHECK(sup_distance(later, st) <= 1e-6);
    CHECK(later.t == doctest::Approx(1.0));

    const BranchedDensity frozen = fp_evolve(prof.scaled(0.0), point_density(prof, FpBranch::WellLeft), 1.0, dt);
    CHECK(sup_distance(frozen, point_density(prof, FpBranch::WellLeft)) == 0.0);

    BranchedDensity w = point_density(prof, FpBranch::WellLeft);
    CHECK(branch_mass(prof, w, FpBranch::WellRight) == 0.0);
    w = fp_evolve(prof, w, 0.05, dt);
    CHECK(branch_mass(prof, w, FpBranch::WellRight) > 0.0);
    for (int k = 0; k < 5; ++k) {
        w = fp_evolve(prof, w, 0.5, dt);
        CHECK(total_mass(prof, w) == doctest::Approx(1.0).epsilon(1e-8));
    }
    w = fp_evolve(prof, w, 40.0, dt);
    CHECK(branch_mass(prof, w, FpBranch::WellLeft) == doctest::Approx(branch_mass(prof, w, FpBranch::WellRight)).epsilon(1e-6));
    CHECK(sup_distance(w, st) < 1e-6);
    CHECK(w.clipped_mass <= 1e-10);

    CHECK(code_of([&] { fp_evolve(prof, st, 1.0, 2.0 * fp_stable_dt(prof)); }) == ErrorCode::CFLViolation);
}

TEST_CASE("stationary density is w = g c / Omega")
{
    const DiffusionProfile prof = make_diffusion_profile(P, small_grid());
    const BranchedDensity st = stationary_density(prof);
    // Cell average of c / Omega: c * int dE / Omega / width, on each branch.
    const double c = st[FpBranch::Upper][3] * (prof.upper_edges[4] - prof.upper_edges[3]) / prof.upper_inv_omega[3];
    for (std::size_t i = 0; i < prof.well_cells(); ++i) {
        const double width = prof.well_edges[i + 1] - prof.well_edges[i];
        CHECK(st[FpBranch::WellLeft][i] == doctest::Approx(c * prof.well_inv_omega[i] / width).epsilon(1e-12));
        CHECK(st[FpBranch::WellRight][i] == st[FpBranch::WellLeft][i]);
    }
    const double e = 0.5 * (prof.well_edges[4] + prof.well_edges[5]);
    CHECK(prof.well_inv_omega[4] / (prof.well_edges[5] - prof.well_edges[4]) == doctest::Approx(1.0 / libration_frequency(P, e, Branch::WellLeft)).epsilon(1e-3));
}

TEST_CASE("noise transfer time scaling")
{
    const DiffusionProfile prof = make_diffusion_profile(P, small_grid());
    const double t1 = noise_transfer_time(P, prof);
    CHECK(t1 > 0.0);
    CHECK(noise_transfer_time(P, prof.scaled(2.0)) == doctest::Approx(t1 / 2).epsilon(1e-12));
    // All frequencies and the noise level times c: energies scale by c and T by 1/c.
    const double c = 3.0;
    const ModelParams q = ModelParams::from_frequencies(c * P.omega(), c * P.a(), c * P.b());
    ProfileConfig cfg = small_grid();
    cfg.s0 = c;
    CHECK(noise_transfer_time(q, make_diffusion_profile(q, cfg)) == doctest::Approx(t1 / c).epsilon(1e-6));
    CHECK(code_of([&] { noise_transfer_time(P, prof.scaled(0.0)); }) == ErrorCode::DegenerateProfile);
}

TEST_CASE("stationary well occupancy")
{
    const WellOccupancy o = well_occupancy_stationary(P);
    CHECK(o.total == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(2 * o.one_well + o.upper == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(o.one_well == doctest::Approx(oracle::one_well_area_fraction(P)).epsilon(1e-5));
    CHECK(o.one_well > 0.005);
    CHECK(o.one_well < 0.10);
    // A wider well (larger B at fixed Omega, A) holds more probability.
    const ModelParams wide = ModelParams::from_frequencies(5.388, 1.902, 3.0);
    CHECK(wide.well_depth() > P.well_depth());
    CHECK(well_occupancy_stationary(wide).one_well > o.one_well);
}
