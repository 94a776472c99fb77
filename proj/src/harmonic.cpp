#include "twomode/harmonic.hpp"

#include "twomode/error.hpp"
#include "twomode/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace twomode {

double default_crossing_margin(const ModelParams& p)
{
    return 0.05 * p.well_depth();
}

namespace {

Region::Kind opposite(Region::Kind k)
{
    return k == Region::Kind::LeftLoop ? Region::Kind::RightLoop : Region::Kind::LeftLoop;
}

Region::Kind start_loop(const PhaseState& s, const ModelParams& p, double margin)
{
    const Region r = classify_region(s, p, margin);
    if (!r.is_loop()) {
        std::ostringstream msg;
        msg << "start (" << s.delta << ", " << s.theta << ") is " << to_string(r.kind)
            << ", not a loop core";
        throw Error(ErrorCode::BadInitialRegion, msg.str());
    }
    return r.kind;
}

} // namespace

std::optional<double> crossing_time(const Trajectory& traj, const ModelParams& p, double margin)
{
    if (traj.size() == 0) {
        return std::nullopt;
    }
    const Region::Kind target = opposite(start_loop(traj.state(0), p, margin));
    for (std::size_t i = 1; i < traj.size(); ++i) {
        if (classify_region(traj.state(i), p, margin).kind == target) {
            return traj.t[i];
        }
    }
    return std::nullopt;
}

std::optional<double> detect_crossing(const ModelParams& p, const HarmonicDrive& drive,
                                      const PhaseState& state0, double t_max, double margin,
                                      double dt)
{
    const Region::Kind target = opposite(start_loop(state0, p, margin));
    std::optional<double> hit;
    integrate_until(p, Drive(drive), state0, t_max, dt, [&](const FlowState& s) {
        if (classify_region(s.phase(), p, margin).kind == target) {
            hit = s.t;
            return false;
        }
        return true;
    });
    return hit;
}

ThresholdResult threshold_amplitude(const ModelParams& p, double omega, double phi,
                                    const ThresholdScanConfig& cfg,
                                    std::optional<PhaseState> state0)
{
    if (!(omega > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "drive frequency must be positive");
    }
    if (!(cfg.f_lo >= 0.0 && cfg.f_lo < cfg.f_hi) || cfg.bisection_iters < 0) {
        throw Error(ErrorCode::InvalidArgument, "need 0 <= F_lo < F_hi");
    }
    const double t_max = cfg.horizon(omega);
    if (!(t_max > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "detection horizon must be positive");
    }
    const PhaseState s0 = state0.value_or(PhaseState{p.delta0(), 0.0});
    const double margin = cfg.margin_fraction * p.well_depth();
    auto crosses = [&](double f) {
        return detect_crossing(p, HarmonicDrive{f, omega, phi}, s0, t_max, margin, cfg.dt);
    };

    double lo = cfg.f_lo;
    double hi = cfg.f_hi;
    if (lo > 0.0) {
        int shrink = 0;
        while (crosses(lo)) {
            if (++shrink > cfg.max_doublings) {
                lo = 0.0;
                break;
            }
            hi = lo;
            lo *= 0.5;
        }
    }
    std::optional<double> t_hi = crosses(hi);
    for (int k = 0; !t_hi; ++k) {
        if (k >= cfg.max_doublings) {
            std::ostringstream msg;
            msg << "no crossing up to F = " << hi << " at omega = " << omega;
            throw Error(ErrorCode::BracketFailed, msg.str());
        }
        lo = hi;
        hi *= 2.0;
        t_hi = crosses(hi);
    }
    for (int it = 0; it < cfg.bisection_iters; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (auto t = crosses(mid)) {
            hi = mid;
            t_hi = t;
        } else {
            lo = mid;
        }
    }
    return {omega, phi, 0.5 * (lo + hi), lo, hi, *t_hi};
}

std::vector<ThresholdResult> threshold_curve(const ModelParams& p, std::span<const double> omegas,
                                             double phi, const ThresholdScanConfig& cfg,
                                             std::size_t workers)
{
    std::vector<ThresholdResult> out(omegas.size());
    parallel_for(omegas.size(), workers, [&](std::size_t i) {
        try {
            out[i] = threshold_amplitude(p, omegas[i], phi, cfg);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::BracketFailed) {
                throw;
            }
            const double nan = std::numeric_limits<double>::quiet_NaN();
            out[i] = {omegas[i], phi, nan, nan, nan, nan};
        }
    });
    std::sort(out.begin(), out.end(),
              [](const ThresholdResult& a, const ThresholdResult& b) { return a.omega < b.omega; });
    return out;
}

MelnikovResult melnikov(const ModelParams& p, double omega, double amplitude,
                        const MelnikovOptions& opt)
{
    if (!(omega > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "drive frequency must be positive");
    }
    const SeparatrixOrbit orbit = separatrix_orbit(p, Loop::Left, opt.eps_saddle, opt.dt);
    // V = -x, so dV/dt = -coupling_rate.
    auto rate = [&](std::size_t i) { return -coupling_rate(orbit.points[i], p); };
    const double tail = std::max(std::abs(rate(0)), std::abs(rate(orbit.t.size() - 1)));
    if (tail > opt.tail_tol) {
        std::ostringstream msg;
        msg << "|dV/dt| = " << tail << " at the window ends exceeds " << opt.tail_tol;
        throw Error(ErrorCode::WindowTooShort, msg.str());
    }
    std::complex<double> z = 0.0;
    for (std::size_t i = 0; i + 1 < orbit.t.size(); ++i) {
        const double h = orbit.t[i + 1] - orbit.t[i];
        const auto f0 = rate(i) * std::polar(1.0, omega * orbit.t[i]);
        const auto f1 = rate(i + 1) * std::polar(1.0, omega * orbit.t[i + 1]);
        z += 0.5 * h * (f0 + f1);
    }
    // int dV/dt sin(omega t + phi) dt = Im(z exp(i phi)).
    MelnikovResult r;
    r.transform = z;
    r.delta_e = std::abs(amplitude) * std::abs(z);
    r.delta_e_fixed_phase = std::abs(amplitude) * std::abs(z.imag());
    double ph = 0.5 * kPi - std::arg(z);
    ph = std::fmod(ph, kTwoPi);
    ph = ph < 0.0 ? ph + kTwoPi : ph;
    r.phase_of_max = ph >= kTwoPi ? 0.0 : ph;
    return r;
}

double melnikov_halfwidth(const ModelParams& p, double omega, double amplitude,
                          const MelnikovOptions& opt)
{
    return melnikov(p, omega, amplitude, opt).delta_e;
}

double EnergyDistribution::total_mass() const
{
    double m = 0.0;
    for (std::size_t i = 0; i < bins(); ++i) {
        m += density[i] * width(i);
    }
    return m;
}

double EnergyDistribution::peak() const
{
    return density.empty() ? 0.0 : *std::max_element(density.begin(), density.end());
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins)
{
    if (bins == 0 || !(hi > lo)) {
        throw Error(ErrorCode::InvalidArgument, "need bins > 0 and hi > lo");
    }
    std::vector<double> e(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    }
    e.back() = hi;
    return e;
}

namespace {

void check_edges(std::span<const double> edges)
{
    if (edges.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "grid needs at least one bin");
    }
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "grid edges must increase");
        }
    }
}

} // namespace

EnergyDistribution invariant_energy_distribution(const ModelParams& p, double delta_e,
                                                 std::span<const double> edges,
                                                 const OrbitOptions& opt)
{
    if (!(delta_e > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "layer half-width must be positive");
    }
    check_edges(edges);
    const double e_lo = p.e_minus();
    const double e_s = p.e_sep();
    const double e_hi = std::min(e_s + delta_e, p.e_plus());
    if (edges.front() > e_lo || edges.back() < e_hi) {
        throw Error(ErrorCode::InvalidArgument, "grid must cover [Eminus, Esep + dE]");
    }
    // Unnormalized mass g/Omega on [a, b] within one branch.
    auto piece = [&](double a, double b, Branch branch, double g) {
        return g * inverse_frequency_integral(p, a, b, branch, opt);
    };

    EnergyDistribution d;
    d.edges.assign(edges.begin(), edges.end());
    d.density.assign(edges.size() - 1, 0.0);
    d.delta_e = delta_e;
    std::vector<double> mass(d.density.size(), 0.0);
    for (std::size_t i = 0; i < mass.size(); ++i) {
        const double a = edges[i];
        const double b = edges[i + 1];
        mass[i] = piece(std::max(a, e_lo), std::min(b, e_s), Branch::WellLeft, 2.0)
                  + piece(std::max(a, e_s), std::min(b, e_hi), Branch::Upper, 1.0);
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    d.eta = 1.0 / total;
    for (std::size_t i = 0; i < mass.size(); ++i) {
        d.density[i] = mass[i] * d.eta / d.width(i);
    }
    return d;
}

EnergyDistribution energy_histogram(std::span<const double> energies,
                                    std::span<const double> edges)
{
    check_edges(edges);
    EnergyDistribution d;
    d.edges.assign(edges.begin(), edges.end());
    d.density.assign(edges.size() - 1, 0.0);
    d.eta = std::numeric_limits<double>::quiet_NaN();
    if (energies.empty()) {
        return d;
    }
    std::vector<double> counts(d.density.size(), 0.0);
    double outside = 0.0;
    for (double e : energies) {
        if (e < edges.front() || e > edges.back()) {
            outside += 1.0;
            continue;
        }
        auto it = std::upper_bound(edges.begin(), edges.end(), e);
        std::size_t i = static_cast<std::size_t>(it - edges.begin());
        i = std::clamp<std::size_t>(i, 1, counts.size()) - 1;
        counts[i] += 1.0;
    }
    const double n = static_cast<double>(energies.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        d.density[i] = counts[i] / (n * d.width(i));
    }
    d.mass_outside = outside / n;
    return d;
}

EnergyDistribution energy_histogram(const Trajectory& traj, std::span<const double> edges)
{
    return energy_histogram(std::span<const double>(traj.energy), edges);
}

namespace {

// Cumulative mass of a binned density up to x (linear within a bin).
double cumulative(const EnergyDistribution& d, double x)
{
    double m = 0.0;
    for (std::size_t i = 0; i < d.bins(); ++i) {
        const double a = d.edges[i];
        const double b = d.edges[i + 1];
        if (x <= a) {
            break;
        }
        m += d.density[i] * (std::min(x, b) - a);
    }
    return m;
}

} // namespace

Occupancy occupancy_fraction(const EnergyDistribution& dist, double e_star, const ModelParams& p)
{
    Occupancy o;
    o.mu = cumulative(dist, e_star);
    o.mu_one_well = 0.5 * cumulative(dist, std::min(e_star, p.e_sep()));
    o.one_well_approx = std::isfinite(dist.eta)
                            ? dist.eta * (e_star - p.e_minus()) / p.omega0()
                            : std::numeric_limits<double>::quiet_NaN();
    return o;
}

double harmonic_transfer_time(double tau, double mu)
{
    if (mu == 0.0) {
        throw Error(ErrorCode::DegenerateOccupancy, "occupancy is zero");
    }
    if (!(mu > 0.0 && mu <= 1.0) || !(tau > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "need tau > 0 and mu in (0, 1]");
    }
    return tau / mu;
}

} // namespace twomode
