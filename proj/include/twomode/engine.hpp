#pragma once

// Orbit machinery: fixed-step integration of the canonical equations,
// unperturbed periodic orbits and their frequencies Omega(E), orbit Fourier
// analysis, and the separatrix orbit.

#include "twomode/drive.hpp"
#include "twomode/model.hpp"

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace twomode {

enum class Method { Rk4 };

struct IntegratorConfig {
    double dt = 1e-3;
    Method method = Method::Rk4;
    std::size_t sample_stride = 1;
    double energy_tol = 1e-8;
};

/// Integration state: point on the sphere plus the unwrapped Theta.
struct FlowState {
    double t = 0.0;
    BlochVector v;
    double theta = 0.0;

    PhaseState phase() const noexcept { return {v.z, theta}; }
};

FlowState make_flow_state(const PhaseState& s, double t0 = 0.0);

/// One classical RK4 step of length dt on the sphere, followed by
/// renormalization. Noise drives are held at their value at mid-step.
void advance(FlowState& s, double dt, const ModelParams& p, const Drive& drive);

struct Trajectory {
    std::vector<double> t;
    std::vector<double> delta;
    std::vector<double> theta;
    std::vector<double> energy;

    ModelParams params = ModelParams::paper_standard();
    std::string drive_description;
    std::optional<std::uint64_t> seed;
    /// max |E(t) - E(0)| over the stored samples.
    double max_energy_drift = 0.0;

    std::size_t size() const noexcept { return t.size(); }
    PhaseState state(std::size_t i) const { return {delta[i], theta[i]}; }
};

/// Integrates from state0 to t_end, storing every `sample_stride`-th step
/// (and always the final state).
Trajectory integrate(const ModelParams& p, const Drive& drive, const PhaseState& state0,
                     double t_end, const IntegratorConfig& cfg = {});

/// Streaming variant: calls `observer(state)` after every step; stops early
/// when the observer returns false. Returns the final state.
FlowState integrate_until(const ModelParams& p, const Drive& drive, const PhaseState& state0,
                          double t_end, double dt,
                          const std::function<bool(const FlowState&)>& observer);

enum class Branch { WellLeft, WellRight, Upper };

std::string to_string(Branch b);

struct OrbitOptions {
    double dt = 1e-3;
    /// Minimum number of uniform-in-time samples per period.
    std::size_t n_uniform = 4096;
    /// Largest allowed resampling step; n_uniform is doubled until met.
    double max_sample_dt = 2e-3;
    /// Exclusion band around Esep as a fraction of (Eplus - Eminus).
    double sep_exclusion = 1e-4;
    double max_period = 1e4;
};

struct PeriodicOrbit {
    double energy = 0.0;
    Branch branch = Branch::WellLeft;
    double period = 0.0;
    double omega_e = 0.0;
    /// Uniform samples t_j = j T / n, j = 0..n-1, Theta unwrapped and continuous.
    std::vector<PhaseState> states;
    std::vector<BlochVector> points;

    double sample_dt() const noexcept { return period / static_cast<double>(states.size()); }
};

/// Start point of the orbit of energy E on `branch`: the upper vertex at
/// the loop center for wells, the crossing with Theta = pi for Upper.
PhaseState orbit_start(const ModelParams& p, double energy, Branch branch);

PeriodicOrbit periodic_orbit(const ModelParams& p, double energy, Branch branch,
                             const OrbitOptions& opt = {});

/// Omega(E) = 2 pi / T. On the Upper branch T is the full return time, over
/// which Theta advances by 4 pi.
double libration_frequency(const ModelParams& p, double energy, Branch branch,
                           const OrbitOptions& opt = {});

/// Period 2 pi / Omega(E). Inside the separatrix exclusion band the log law
/// T = a + b ln|E - Esep| is continued from the band edge.
double orbit_period(const ModelParams& p, double energy, Branch branch,
                    const OrbitOptions& opt = {});

/// int_a^b dE / Omega(E) on one branch; [a, b] must lie in the branch
/// interval. An end at Esep gets a graded substitution for the log
/// singularity of the period.
double inverse_frequency_integral(const ModelParams& p, double a, double b, Branch branch,
                                  const OrbitOptions& opt = {});

struct FourierSeries {
    /// V_k for k = 0..k_max with V(t) = sum_k V_k exp(-i k Omega t).
    std::vector<std::complex<double>> coeffs;
    double omega = 0.0;
    bool alias_warning = false;

    /// Real synthesis from the k >= 0 harmonics.
    double synthesize(double t) const;
};

using Observable = std::function<double(const PhaseState&)>;

/// Discrete Fourier analysis over one period. Sets alias_warning when
/// |V_kmax|^2 exceeds alias_fraction * sum |V_k|^2.
FourierSeries orbit_fourier(const PeriodicOrbit& orbit, const Observable& observable,
                            std::size_t k_max, double alias_fraction = 1e-10);

enum class Loop { Left, Right };

struct SeparatrixOrbit {
    /// Time origin at the inner vertex; ends where Delta = -1 + eps_saddle.
    std::vector<double> t;
    std::vector<PhaseState> states;
    std::vector<BlochVector> points;
    double eps_saddle = 0.0;
};

SeparatrixOrbit separatrix_orbit(const ModelParams& p, Loop loop, double eps_saddle = 1e-6,
                                 double dt = 1e-3, double max_time = 1e3);

} // namespace twomode
