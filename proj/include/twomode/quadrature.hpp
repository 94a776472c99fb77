#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <cstddef>

namespace twomode::quad {

/// 20-point Gauss-Legendre on [a, b].
template <typename F>
double gauss(F&& f, double a, double b)
{
    return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

/// Composite Gauss-Legendre with `pieces` equal panels.
template <typename F>
double composite_gauss(F&& f, double a, double b, std::size_t pieces)
{
    const double h = (b - a) / static_cast<double>(pieces);
    double sum = 0.0;
    for (std::size_t i = 0; i < pieces; ++i) {
        const double lo = a + h * static_cast<double>(i);
        sum += gauss(f, lo, i + 1 == pieces ? b : lo + h);
    }
    return sum;
}

/// Integral over [a, b] of a function with an integrable (power or log)
/// singularity at `a` if singular_at_a, else at `b`. The substitution
/// x = s +- L u^3 flattens the singularity before Gauss-Legendre.
template <typename F>
double gauss_singular_end(F&& f, double a, double b, bool singular_at_a, std::size_t pieces = 1)
{
    const double len = b - a;
    auto g = [&](double u) {
        const double u2 = u * u;
        const double x = singular_at_a ? a + len * u2 * u : b - len * u2 * u;
        return 3.0 * len * u2 * f(x);
    };
    return composite_gauss(g, 0.0, 1.0, pieces);
}

} // namespace twomode::quad
