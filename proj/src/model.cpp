#include "twomode/model.hpp"

#include "twomode/error.hpp"

#include <algorithm>
#include <sstream>

namespace twomode {

ModelParams::ModelParams(double omega, double a, double b)
    : omega_(omega), a_(a), b_(b)
{
    if (!std::isfinite(omega) || !std::isfinite(a) || !std::isfinite(b)) {
        throw Error(ErrorCode::InvalidArgument, "model constants must be finite");
    }
    const double stiffness = 2.0 * (a + b);
    if (!(stiffness > 0.0) || std::abs(omega) >= stiffness) {
        std::ostringstream msg;
        msg << "|Omega| = " << std::abs(omega) << " must be below 2(A+B) = " << stiffness;
        throw Error(ErrorCode::NoSelfTrapping, msg.str());
    }
    delta0_ = -omega / stiffness;
    const double d2 = delta0_ * delta0_;
    e_minus_ = omega * delta0_ + a * d2 - b * (1.0 - d2);
    e_sep_ = a - omega;
    e_plus_ = omega + a;
    omega0_ = std::sqrt(stiffness * b * (1.0 - d2));
}

ModelParams ModelParams::from_frequencies(double omega, double a, double b)
{
    return ModelParams(omega, a, b);
}

ModelParams ModelParams::paper_standard()
{
    return ModelParams(5.388, 1.902, 2.022);
}

ModelParams derive_model_params(const OverlapInputs& in)
{
    if (!(in.J00 > 0.0) || !(in.J01 > 0.0) || !(in.J11 > 0.0)) {
        throw Error(ErrorCode::NonPositiveOverlap, "overlap integrals must be positive");
    }
    if (in.J01 * in.J01 > in.J00 * in.J11 * (1.0 + 1e-12)) {
        throw Error(ErrorCode::NonPositiveOverlap, "J01^2 exceeds J00 J11 (Cauchy-Schwarz)");
    }
    if (!(in.hbar > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "hbar must be positive");
    }
    const double beta0 = (in.E0 + in.lambda * in.J00) / in.hbar;
    const double beta1 = (in.E1 + in.lambda * in.J11) / in.hbar;
    const double omega = 2.0 * (beta1 - beta0) + in.lambda * (in.J11 - in.J00) / in.hbar;
    const double a = in.lambda * (4.0 * in.J01 - in.J00 - in.J11) / (2.0 * in.hbar);
    const double b = in.lambda * in.J01 / in.hbar;
    return ModelParams::from_frequencies(omega, a, b);
}

BlochVector to_bloch(const PhaseState& s)
{
    const double r = std::sqrt(std::max(0.0, 1.0 - s.delta * s.delta));
    // Reduce by whole turns of the half angle so that Theta and Theta + 2 pi
    // map to exactly opposite (x, y).
    const double k = std::round(0.5 * s.theta / kPi);
    const double half = 0.5 * s.theta - k * kPi;
    const double sign = std::fmod(k, 2.0) == 0.0 ? r : -r;
    return {sign * std::cos(half), sign * std::sin(half), s.delta};
}

PhaseState from_bloch(const BlochVector& v, double theta_hint)
{
    const double norm = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    const double delta = std::clamp(v.z / norm, -1.0, 1.0);
    if (v.x == 0.0 && v.y == 0.0) {
        return {delta, theta_hint};
    }
    const double theta = 2.0 * std::atan2(v.y, v.x);
    const double k = std::round((theta_hint - theta) / (2.0 * kTwoPi));
    return {delta, theta + 2.0 * kTwoPi * k};
}

double h0_energy(const PhaseState& s, const ModelParams& p)
{
    const double d = s.delta;
    return p.omega() * d + p.a() * d * d - p.b() * (1.0 - d * d) * std::cos(s.theta);
}

double h0_energy(const BlochVector& v, const ModelParams& p)
{
    // (1 - z^2) cos Theta = x^2 - y^2 on the unit sphere.
    return p.omega() * v.z + p.a() * v.z * v.z - p.b() * (v.x * v.x - v.y * v.y);
}

double h1_energy(const PhaseState& s, const DriveSample& drive)
{
    const double r = std::sqrt(std::max(0.0, 1.0 - s.delta * s.delta));
    return drive.g * s.delta - drive.f * r * std::cos(0.5 * s.theta);
}

PhaseRate eom_rhs(const PhaseState& s, const ModelParams& p, const DriveSample& drive,
                  double edge_guard)
{
    const double d = s.delta;
    const double one_minus = 1.0 - d * d;
    PhaseRate rate;
    rate.d_delta = -p.b() * one_minus * std::sin(s.theta);
    rate.d_theta = p.omega() + 2.0 * p.a() * d + 2.0 * p.b() * d * std::cos(s.theta) + drive.g;
    if (drive.f != 0.0) {
        if (std::abs(d) >= 1.0 - edge_guard) {
            throw Error(ErrorCode::SingularAmplitudeTerm,
                        "F != 0 with |Delta| inside the edge guard band");
        }
        const double r = std::sqrt(one_minus);
        const double half = 0.5 * s.theta;
        rate.d_delta -= 0.5 * drive.f * r * std::sin(half);
        rate.d_theta += drive.f * d / r * std::cos(half);
    }
    return rate;
}

BlochVector bloch_rhs(const BlochVector& v, const ModelParams& p, const DriveSample& drive)
{
    const double hx = -2.0 * p.b() * v.x - drive.f;
    const double hy = 2.0 * p.b() * v.y;
    const double hz = p.omega() + 2.0 * p.a() * v.z + drive.g;
    return {0.5 * (hy * v.z - hz * v.y), 0.5 * (hz * v.x - hx * v.z), 0.5 * (hx * v.y - hy * v.x)};
}

Landmarks stationary_points(const ModelParams& p)
{
    Landmarks lm;
    lm.delta0 = p.delta0();
    lm.e_minus = p.e_minus();
    lm.e_sep = p.e_sep();
    lm.e_plus = p.e_plus();
    lm.omega0 = p.omega0();
    // (A+B) D^2 + Omega D - B = Es has roots -1 and (B + Es)/(A + B).
    lm.inner_vertex_delta = (p.b() + p.e_sep()) / (p.a() + p.b());
    const double c = (p.omega() - 2.0 * p.a()) / (2.0 * p.b());
    lm.saddle_theta = std::abs(c) <= 1.0 ? std::acos(c) : std::nan("");
    const double g1 = p.b() + 0.5 * p.omega() - p.a();
    const double g2 = p.a() + p.b() - 0.5 * p.omega();
    lm.saddle_exponent = (g1 > 0.0 && g2 > 0.0) ? std::sqrt(g1 * g2) : std::nan("");
    std::ostringstream desc;
    desc << "separatrix E = A - Omega contains the line Delta = -1 (H0(-1, Theta) = "
         << p.e_sep() << " for every Theta); hyperbolic points at Theta = +-"
         << lm.saddle_theta << " (mod 2 pi), exponent " << lm.saddle_exponent;
    lm.saddle_description = desc.str();
    return lm;
}

std::string to_string(Region::Kind kind)
{
    switch (kind) {
    case Region::Kind::LeftLoop: return "LeftLoop";
    case Region::Kind::RightLoop: return "RightLoop";
    case Region::Kind::Outer: return "Outer";
    case Region::Kind::NearSeparatrix: return "NearSeparatrix";
    }
    return "?";
}

Region classify_region(const PhaseState& s, const ModelParams& p, double margin)
{
    const double e = h0_energy(s, p);
    if (e > p.e_sep() + margin) {
        return {Region::Kind::Outer, 0};
    }
    if (e >= p.e_sep() - margin) {
        return {Region::Kind::NearSeparatrix, 0};
    }
    const long m = std::lround(s.theta / kTwoPi);
    if (m % 2 == 0) {
        return {Region::Kind::LeftLoop, m / 2};
    }
    // m odd here, so the division is exact.
    return {Region::Kind::RightLoop, (m - 1) / 2};
}

} // namespace twomode
