#pragma once

// Broadband-noise physics: the energy diffusion coefficient D(E), band
// limited D and the locking energy, seeded noise paths and Langevin runs,
// and the Fokker-Planck equation on the branched energy axis
//
//   dw/dt = d/dE ( D(E) d/dE (w Omega) ).
//
// Noise convention: S(w) = (1/2 pi) int <xi(t) xi(0)> exp(i w t) dt, so a
// flat S0 means <xi(t) xi(t')> = 2 pi S0 delta(t - t').

#include "twomode/drive.hpp"
#include "twomode/engine.hpp"
#include "twomode/model.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace twomode {

enum class DiffusionMethod { TimeIntegral, FourierSum };

std::string to_string(DiffusionMethod m);

struct DiffusionOptions {
    OrbitOptions orbit{};
    /// Harmonics kept by the Fourier-sum method.
    std::size_t k_max = 256;
};

/// D(E) = (1/2) int_0^T (dV/dt)^2 dt = 2 pi Omega sum_{k>=1} k^2 |V_k|^2 with
/// V = sqrt(1 - Delta^2) cos(Theta / 2), for unit spectral density.
double diffusion_coefficient(const ModelParams& p, double energy, Branch branch,
                             DiffusionMethod method = DiffusionMethod::TimeIntegral,
                             const DiffusionOptions& opt = {});

/// Harmonics with k Omega(E) < omega_cut only; 0 when Omega(E) >= omega_cut.
double diffusion_coefficient_bandlimited(const ModelParams& p, double energy, Branch branch,
                                         double omega_cut, const DiffusionOptions& opt = {});

/// Default offset for one-sided values at Esep: 1e-3 (Eplus - Eminus).
double separatrix_offset(const ModelParams& p, double fraction = 1e-3);

/// Root of Omega(E) = omega_cut on the Upper branch (bisection).
/// Throws RootNotBracketed when omega_cut is outside Omega's range there.
double locking_energy(const ModelParams& p, double omega_cut, const OrbitOptions& opt = {},
                      double eps_fraction = 1e-3);

/// Zero-mean noise with <xi xi'> = 2 pi s0 delta. White: i.i.d. normal
/// samples of variance 2 pi s0 / dt. With a cutoff the white samples are
/// filtered in the frequency domain, keeping |w| < cutoff.
NoisePath white_noise_path(std::uint64_t seed, double dt, std::size_t n, double s0,
                           std::optional<double> cutoff = std::nullopt,
                           NoiseChannel channel = NoiseChannel::Odd);

/// Trajectory driven by F(t) = xi(t) (or G(t) for the even channel). The
/// noise step must be an integer multiple of cfg.dt and cover t_end.
Trajectory langevin_simulate(const ModelParams& p, std::shared_ptr<const NoisePath> noise,
                             const PhaseState& state0, double t_end,
                             const IntegratorConfig& cfg = {});

struct EnsembleConfig {
    std::size_t members = 1000;
    std::uint64_t base_seed = 1;
    double s0 = 1e-3;
    double noise_dt = 1e-2;
    double dt = 1e-2;
    double t_end = 1.0;
    /// Record every this many integrator steps.
    std::size_t sample_stride = 10;
    std::size_t workers = 1;
};

struct EnsembleStats {
    std::vector<double> t;
    std::vector<double> mean_energy;
    std::vector<double> var_energy;
    /// Variance of (E(t) - E(0)) across members.
    std::vector<double> var_increment;
};

/// Runs one member per start state (seed = base_seed + member index) and
/// reduces the energy statistics. `starts` is cycled when shorter than
/// `members`.
EnsembleStats langevin_energy_ensemble(const ModelParams& p, const std::vector<PhaseState>& starts,
                                       const EnsembleConfig& cfg);

/// Diffusion data on the branched energy grid.
struct DiffusionProfile {
    /// Cell edges; the well grid is shared by both wells.
    std::vector<double> well_edges;
    std::vector<double> upper_edges;
    /// int_cell dE / Omega(E).
    std::vector<double> well_inv_omega;
    std::vector<double> upper_inv_omega;
    /// Omega at cell centers.
    std::vector<double> well_omega;
    std::vector<double> upper_omega;
    /// D at cell faces (size cells + 1). The face at Esep holds the
    /// one-sided value D(Esep -+ eps); outer faces hold D at the boundary
    /// (they carry no flux).
    std::vector<double> well_d;
    std::vector<double> upper_d;
    DiffusionMethod method = DiffusionMethod::TimeIntegral;
    std::optional<double> cutoff;
    double eps_e = 0.0;
    /// Spectral density the D values are scaled to.
    double s0 = 1.0;

    std::size_t well_cells() const noexcept { return well_omega.size(); }
    std::size_t upper_cells() const noexcept { return upper_omega.size(); }
    DiffusionProfile scaled(double s0_new) const;
};

struct ProfileConfig {
    std::size_t well_cells = 40;
    std::size_t upper_cells = 120;
    DiffusionMethod method = DiffusionMethod::TimeIntegral;
    std::optional<double> cutoff;
    double eps_fraction = 1e-3;
    double s0 = 1.0;
    DiffusionOptions diffusion{};
    std::size_t workers = 1;
};

DiffusionProfile make_diffusion_profile(const ModelParams& p, const ProfileConfig& cfg = {});

enum class FpBranch : std::size_t { WellLeft = 0, WellRight = 1, Upper = 2 };

/// Density per cell on the three branches, sharing a profile's grids.
struct BranchedDensity {
    std::array<std::vector<double>, 3> w;
    double t = 0.0;
    /// Mass removed by clipping negative cells (accumulated).
    double clipped_mass = 0.0;

    std::vector<double>& operator[](FpBranch b) { return w[static_cast<std::size_t>(b)]; }
    const std::vector<double>& operator[](FpBranch b) const { return w[static_cast<std::size_t>(b)]; }
};

double branch_mass(const DiffusionProfile& prof, const BranchedDensity& d, FpBranch b);
double total_mass(const DiffusionProfile& prof, const BranchedDensity& d);

/// w = c g / Omega as cell averages (g = 1 per branch), normalized.
BranchedDensity stationary_density(const DiffusionProfile& prof);

/// All mass in the lowest cell of one well.
BranchedDensity point_density(const DiffusionProfile& prof, FpBranch b);

/// Largest stable explicit step.
double fp_stable_dt(const DiffusionProfile& prof);

/// One explicit finite-volume step. At Esep rho = w Omega is continuous
/// and the fluxes of the three branches sum to zero.
void fp_step(const DiffusionProfile& prof, BranchedDensity& d, double dt);

/// Evolves to w0.t + t_end with step dt_pde (CFLViolation above the
/// stability bound). `observer` (optional) sees every step and may stop the
/// run by returning false.
BranchedDensity fp_evolve(const DiffusionProfile& prof, const BranchedDensity& w0, double t_end,
                          double dt_pde,
                          const std::function<bool(const BranchedDensity&)>& observer = {});

/// max over cells of |a - b| (densities on the same profile).
double sup_distance(const BranchedDensity& a, const BranchedDensity& b);

/// Order-of-magnitude transfer time (Eplus - Eminus)^2 / <Omega D>, the
/// average being uniform in E over [Eminus, Eplus].
double noise_transfer_time(const ModelParams& p, const DiffusionProfile& prof);

struct WellOccupancy {
    double one_well = 0.0;
    double upper = 0.0;
    /// 2 one_well + upper.
    double total = 0.0;
};

/// Stationary w proportional to g / Omega over [Eminus, Eplus].
WellOccupancy well_occupancy_stationary(const ModelParams& p, const OrbitOptions& opt = {});

} // namespace twomode
