#pragma once

// Reference computations used only by the tests. None of them calls the
// library's orbit, quadrature or spectral code: periods come from phase
// areas, trajectories from a plain RK4 in (Delta, Theta), the layer width
// from an integration by parts of the separatrix transform.

#include "twomode/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

using twomode::ModelParams;
using twomode::PhaseState;

inline constexpr double kPi = 3.14159265358979323846;

/// Length of {Delta in [-1, 1] : H0(Delta, theta) < e}. H0 is quadratic in Delta.
inline double sublevel_length(const ModelParams& p, double e, double theta)
{
    const double c = std::cos(theta);
    const double qa = p.a() + p.b() * c;
    const double qb = p.omega();
    const double qc = -p.b() * c - e;
    auto clip = [](double x) { return std::clamp(x, -1.0, 1.0); };
    if (std::abs(qa) < 1e-14) {
        return clip(-qc / qb) + 1.0;
    }
    const double disc = qb * qb - 4.0 * qa * qc;
    if (qa > 0.0) {
        if (disc <= 0.0) {
            return 0.0;
        }
        const double r1 = (-qb - std::sqrt(disc)) / (2.0 * qa);
        const double r2 = (-qb + std::sqrt(disc)) / (2.0 * qa);
        return std::max(0.0, clip(r2) - clip(r1));
    }
    if (disc <= 0.0) {
        return 2.0;
    }
    const double r1 = (-qb + std::sqrt(disc)) / (2.0 * qa);
    const double r2 = (-qb - std::sqrt(disc)) / (2.0 * qa);
    return 2.0 - std::max(0.0, clip(r2) - clip(r1));
}

/// Phase-space area of {H0 < e} for theta in [lo, hi].
inline double sublevel_area(const ModelParams& p, double e, double lo, double hi)
{
    auto f = [&](double th) { return sublevel_length(p, e, th); };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, 1e-14, &err);
}

/// Period from dA/dE. Wells: one loop, theta in (-pi, pi). Upper branch:
/// theta over [0, 4 pi), the interval Theta sweeps in one return.
inline double area_period(const ModelParams& p, double e, bool well, double h = 1e-5)
{
    const double lo = well ? -kPi : 0.0;
    const double hi = well ? kPi : 4.0 * kPi;
    return (sublevel_area(p, e + h, lo, hi) - sublevel_area(p, e - h, lo, hi)) / (2.0 * h);
}

inline double area_frequency(const ModelParams& p, double e, bool well)
{
    return 2.0 * kPi / area_period(p, e, well);
}

/// Fraction of the (Delta, Theta) cylinder, theta in [0, 4 pi), in one well.
inline double one_well_area_fraction(const ModelParams& p)
{
    return sublevel_area(p, p.e_sep(), -kPi, kPi) / (8.0 * kPi);
}

/// Fixed-step RK4 directly on the canonical pair.
inline PhaseState rk4_phase(const ModelParams& p, const std::function<double(double)>& f_of_t,
                            PhaseState s, double t_end, double dt,
                            const std::function<void(double, const PhaseState&)>& visit = {})
{
    auto rhs = [&](double t, const PhaseState& x) {
        const auto r = twomode::eom_rhs(x, p, {f_of_t(t), 0.0});
        return PhaseState{r.d_delta, r.d_theta};
    };
    const auto n = static_cast<long>(std::llround(t_end / dt));
    for (long i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const auto k1 = rhs(t, s);
        const auto k2 = rhs(t + dt / 2, {s.delta + dt / 2 * k1.delta, s.theta + dt / 2 * k1.theta});
        const auto k3 = rhs(t + dt / 2, {s.delta + dt / 2 * k2.delta, s.theta + dt / 2 * k2.theta});
        const auto k4 = rhs(t + dt, {s.delta + dt * k3.delta, s.theta + dt * k3.theta});
        s.delta += dt / 6 * (k1.delta + 2 * k2.delta + 2 * k3.delta + k4.delta);
        s.theta += dt / 6 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta);
        if (visit) {
            visit(t + dt, s);
        }
    }
    return s;
}

/// Separatrix transform z = int dV/dt e^{i w t} dt, V = -sqrt(1 - Delta^2) cos(Theta/2),
/// by parts: V vanishes at both ends and V(t) is even about the inner
/// vertex, so z = -2 i w int_0^inf V cos(w t) dt.
inline std::complex<double> separatrix_transform(const ModelParams& p, double omega, double t_window = 25.0,
                                                 double dt = 1e-3)
{
    // Inner vertex: H0(Delta, 0) = Esep on the branch Delta > -1.
    const double a = p.a() + p.b();
    const double b = p.omega();
    const double c = -p.b() - p.e_sep();
    const double vertex = (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a);
    auto v_of = [](const PhaseState& s) { return -std::sqrt(std::max(0.0, 1 - s.delta * s.delta)) * std::cos(s.theta / 2); };
    // Past 1 + Delta ~ 1e-10 the orbit leaves along the unstable direction.
    double acc = 0.5 * v_of({vertex, 0.0});
    bool done = false;
    rk4_phase(p, [](double) { return 0.0; }, {vertex, 0.0}, t_window, dt, [&](double t, const PhaseState& s) {
        done = done || 1.0 + s.delta < 1e-10;
        if (!done) {
            acc += v_of(s) * std::cos(omega * t);
        }
    });
    return {0.0, -2.0 * omega * acc * dt};
}

/// int_0^a theta^(-2/3) cos theta d theta from the power series of cos.
inline double resonance_series(double a = kPi / 2)
{
    double sum = 0.0;
    double fact = 1.0;
    for (int n = 0; n < 30; ++n) {
        if (n > 0) {
            fact *= (2.0 * n - 1) * (2.0 * n);
        }
        const double e = 2.0 * n + 1.0 / 3.0;
        sum += (n % 2 ? -1.0 : 1.0) * std::pow(a, e) / (fact * e);
    }
    return sum;
}

/// Averaged Hann-windowed periodogram |sum w_j x_j e^{-i w t_j}|^2 dt / (2 pi sum w_j^2)
/// over segments of length m, an estimate of S(w) in the two-sided 1/2pi
/// convention. Returns values for bins k = 0..m/2.
inline std::vector<double> periodogram(const std::vector<double>& x, double dt, std::size_t m)
{
    std::vector<double> s(m / 2 + 1, 0.0);
    std::vector<double> win(m);
    double norm = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        win[j] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(j) / static_cast<double>(m));
        norm += win[j] * win[j];
    }
    const std::size_t segs = x.size() / m;
    for (std::size_t g = 0; g < segs; ++g) {
        for (std::size_t k = 0; k <= m / 2; ++k) {
            std::complex<double> acc{};
            for (std::size_t j = 0; j < m; ++j) {
                acc += win[j] * x[g * m + j] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * j) / static_cast<double>(m));
            }
            s[k] += std::norm(acc) * dt / (2.0 * kPi * norm);
        }
    }
    for (auto& v : s) {
        v /= static_cast<double>(segs);
    }
    return s;
}

} // namespace oracle
