#pragma once

// Two-mode (nonlinear Bloch) model: constants, Hamiltonian, equations of
// motion and the closed-form landmarks of the unperturbed phase space.
//
// Units: hbar = 1, every constant (Omega, A, B, F, G) is a frequency.

#include <cmath>
#include <numbers>
#include <string>

namespace twomode {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct OverlapInputs {
    double J00 = 0.0;
    double J01 = 0.0;
    double J11 = 0.0;
    double E0 = 0.0;
    double E1 = 0.0;
    double lambda = 0.0;
    double hbar = 1.0;
};

/// Unperturbed Hamiltonian constants plus the landmarks derived from them.
/// Construction validates that the self-trapped fixed points exist.
class ModelParams {
public:
    static ModelParams from_frequencies(double omega, double a, double b);
    /// Omega = 5.388, A = 1.902, B = 2.022.
    static ModelParams paper_standard();

    double omega() const noexcept { return omega_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }

    /// Population difference of the self-trapped fixed points.
    double delta0() const noexcept { return delta0_; }
    double e_minus() const noexcept { return e_minus_; }
    /// Separatrix energy A - Omega (H0 on the whole line Delta = -1).
    double e_sep() const noexcept { return e_sep_; }
    double e_plus() const noexcept { return e_plus_; }
    /// Small-oscillation frequency around the self-trapped points.
    double omega0() const noexcept { return omega0_; }

    double energy_span() const noexcept { return e_plus_ - e_minus_; }
    double well_depth() const noexcept { return e_sep_ - e_minus_; }

private:
    ModelParams(double omega, double a, double b);

    double omega_;
    double a_;
    double b_;
    double delta0_;
    double e_minus_;
    double e_sep_;
    double e_plus_;
    double omega0_;
};

/// Omega = 2(beta1 - beta0) + lambda (J11 - J00)/hbar, A = lambda (4 J01 - J00 - J11)/(2 hbar),
/// B = lambda J01 / hbar with beta_i = (E_i + lambda J_ii)/hbar.
/// Throws NonPositiveOverlap for invalid integrals and NoSelfTrapping when
/// |Omega| >= 2(A + B).
ModelParams derive_model_params(const OverlapInputs& inputs);

/// Canonical pair; Theta is kept unwrapped on the real line.
struct PhaseState {
    double delta = 0.0;
    double theta = 0.0;
};

/// Odd (F) and even (G) drive values at one instant.
struct DriveSample {
    double f = 0.0;
    double g = 0.0;
};

struct PhaseRate {
    double d_delta = 0.0;
    double d_theta = 0.0;
};

/// Unit vector on the Bloch sphere: z = Delta, azimuth = Theta / 2.
/// The integrator works in this chart because it is regular at Delta = +-1,
/// where (Delta, Theta) are not.
struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

BlochVector to_bloch(const PhaseState& s);
/// Converts back, choosing the Theta branch closest to `theta_hint`.
PhaseState from_bloch(const BlochVector& v, double theta_hint);

/// H0 = Omega Delta + A Delta^2 - B (1 - Delta^2) cos Theta.
double h0_energy(const PhaseState& s, const ModelParams& p);
double h0_energy(const BlochVector& v, const ModelParams& p);

/// H1 = G Delta - F sqrt(1 - Delta^2) cos(Theta / 2).
double h1_energy(const PhaseState& s, const DriveSample& drive);

inline constexpr double kDefaultEdgeGuard = 1e-12;

/// Canonical equations dDelta/dt = -dH/dTheta, dTheta/dt = dH/dDelta for
/// H = H0 + H1. Throws SingularAmplitudeTerm when F != 0 and
/// |Delta| >= 1 - edge_guard, where the F Delta / sqrt(1 - Delta^2) term blows up.
PhaseRate eom_rhs(const PhaseState& s, const ModelParams& p, const DriveSample& drive,
                  double edge_guard = kDefaultEdgeGuard);

/// Same flow on the sphere: dv/dt = (1/2) grad H x v.
BlochVector bloch_rhs(const BlochVector& v, const ModelParams& p, const DriveSample& drive);

/// Odd coupling shape V = sqrt(1 - Delta^2) cos(Theta / 2), i.e. the x
/// component on the sphere. H1 = -F V for G = 0.
inline double coupling(const BlochVector& v) noexcept { return v.x; }

/// dV/dt along the unperturbed flow.
inline double coupling_rate(const BlochVector& v, const ModelParams& p) noexcept
{
    return 0.5 * v.y * (2.0 * (p.b() - p.a()) * v.z - p.omega());
}

struct Landmarks {
    double delta0;
    double e_minus;
    double e_sep;
    double e_plus;
    double omega0;
    /// Second crossing of the separatrix with Theta = 0 (the first is Delta = -1).
    double inner_vertex_delta;
    /// Theta of the hyperbolic points on the line Delta = -1 in the
    /// (Delta, Theta) chart: cos Theta = (Omega - 2A) / (2B).
    double saddle_theta;
    /// Growth rate of the saddle at the pole Delta = -1.
    double saddle_exponent;
    std::string saddle_description;
};

Landmarks stationary_points(const ModelParams& p);

struct Region {
    enum class Kind { LeftLoop, RightLoop, Outer, NearSeparatrix };
    Kind kind = Kind::NearSeparatrix;
    /// Winding index round((Theta - center) / 4 pi); meaningful for loops only.
    long winding = 0;

    bool is_loop() const noexcept { return kind == Kind::LeftLoop || kind == Kind::RightLoop; }
    friend bool operator==(const Region&, const Region&) = default;
};

std::string to_string(Region::Kind kind);

/// Loop centers sit at Theta = 0 (left) and 2 pi (right) modulo 4 pi.
Region classify_region(const PhaseState& s, const ModelParams& p, double margin);

} // namespace twomode
