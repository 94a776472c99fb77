#pragma once

// Harmonic-drive experiments: separatrix-crossing detection, threshold
// amplitudes F_c(omega, phi), the Melnikov-Arnold layer half-width, the
// invariant energy distribution of the chaotic layer and the occupancy /
// transfer-time estimators built on it.

#include "twomode/drive.hpp"
#include "twomode/engine.hpp"
#include "twomode/model.hpp"

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace twomode {

/// Default crossing margin, 0.05 (Esep - Eminus).
double default_crossing_margin(const ModelParams& p);

/// Earliest sample at which the trajectory sits in the core of the loop
/// opposite to its starting loop (H0 < Esep - margin, other center nearest).
/// Throws BadInitialRegion when the first sample is not in a loop core.
std::optional<double> crossing_time(const Trajectory& traj, const ModelParams& p, double margin);

/// Streaming form of crossing_time: integrates and stops at the first
/// opposite-core visit.
std::optional<double> detect_crossing(const ModelParams& p, const HarmonicDrive& drive,
                                      const PhaseState& state0, double t_max, double margin,
                                      double dt = 1e-3);

struct ThresholdScanConfig {
    /// Detection horizon in drive periods (used when t_max is unset).
    double horizon_periods = 200.0;
    std::optional<double> t_max;
    double f_lo = 0.0;
    double f_hi = 0.4;
    int bisection_iters = 20;
    /// Crossing margin as a fraction of Esep - Eminus.
    double margin_fraction = 0.05;
    double dt = 1e-3;
    int max_doublings = 8;

    double horizon(double omega) const { return t_max ? *t_max : horizon_periods * kTwoPi / omega; }
};

struct ThresholdResult {
    double omega = 0.0;
    double phi = 0.0;
    /// Bisection estimate: midpoint of the final bracket.
    double f_c = 0.0;
    double f_lo = 0.0;
    double f_hi = 0.0;
    /// Crossing time at the upper end of the final bracket.
    double crossing_time = 0.0;

    double bracket_width() const noexcept { return f_hi - f_lo; }
};

/// Smallest F whose trajectory from state0 (default: the left self-trapped
/// point) crosses within the horizon. The upper bracket is doubled up to
/// max_doublings times; BracketFailed after that.
ThresholdResult threshold_amplitude(const ModelParams& p, double omega, double phi,
                                    const ThresholdScanConfig& cfg = {},
                                    std::optional<PhaseState> state0 = std::nullopt);

/// Threshold for each omega (parallel), sorted by omega. Entries whose
/// bracket failed carry f_c = NaN.
std::vector<ThresholdResult> threshold_curve(const ModelParams& p, std::span<const double> omegas,
                                             double phi, const ThresholdScanConfig& cfg,
                                             std::size_t workers);

struct MelnikovOptions {
    double eps_saddle = 1e-6;
    double dt = 1e-3;
    /// Largest |dV/dt| tolerated at the window ends.
    double tail_tol = 1e-2;
};

struct MelnikovResult {
    /// F * max over drive phase |int dV/dt sin(omega t + phi) dt|.
    double delta_e = 0.0;
    /// Same with phi = 0 and the time origin at the inner vertex.
    double delta_e_fixed_phase = 0.0;
    /// Drive phase that attains the maximum.
    double phase_of_max = 0.0;
    /// int dV/dt exp(i omega t) dt for F = 1, V = -sqrt(1 - Delta^2) cos(Theta / 2).
    std::complex<double> transform;
};

MelnikovResult melnikov(const ModelParams& p, double omega, double amplitude,
                        const MelnikovOptions& opt = {});

/// Energy half-width of the stochastic layer (phase-maximized).
double melnikov_halfwidth(const ModelParams& p, double omega, double amplitude,
                          const MelnikovOptions& opt = {});

/// Binned energy density.
struct EnergyDistribution {
    std::vector<double> edges;
    /// Density per bin (bin mass / bin width).
    std::vector<double> density;
    double delta_e = 0.0;
    /// Normalization constant of w = g eta / Omega (NaN for empirical histograms).
    double eta = 0.0;
    /// Mass of samples that fell outside the grid (empirical only).
    double mass_outside = 0.0;

    std::size_t bins() const noexcept { return density.size(); }
    double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
    double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
    double total_mass() const;
    double peak() const;
};

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins);

/// Invariant density of the chaotic layer: g(E) eta / Omega(E) with g = 2
/// below Esep (two wells) and 1 on (Esep, Esep + support_above], zero
/// elsewhere. Each bin holds the exact bin average of that density.
EnergyDistribution invariant_energy_distribution(const ModelParams& p, double delta_e,
                                                 std::span<const double> edges,
                                                 const OrbitOptions& opt = {});

/// Normalized histogram of H0 over the trajectory samples.
EnergyDistribution energy_histogram(const Trajectory& traj, std::span<const double> edges);
EnergyDistribution energy_histogram(std::span<const double> energies,
                                    std::span<const double> edges);

struct Occupancy {
    /// Mass of w below E_star (both wells when E_star <= Esep).
    double mu = 0.0;
    /// Small-(E_star - Eminus) form eta (E_star - Eminus) / Omega0 for one well.
    double one_well_approx = 0.0;
    /// Mass in one well below min(E_star, Esep).
    double mu_one_well = 0.0;
};

Occupancy occupancy_fraction(const EnergyDistribution& dist, double e_star, const ModelParams& p);

/// Order-of-magnitude transfer time tau / mu.
double harmonic_transfer_time(double tau, double mu);

} // namespace twomode
