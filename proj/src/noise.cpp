#include "twomode/noise.hpp"

#include "fftw_lock.hpp"
#include "twomode/error.hpp"
#include "twomode/parallel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace twomode {

std::string to_string(DiffusionMethod m)
{
    return m == DiffusionMethod::TimeIntegral ? "time-integral" : "fourier-sum";
}

namespace {

double coupling_of(const PhaseState& s)
{
    return coupling(to_bloch(s));
}

double time_integral_d(const PeriodicOrbit& orbit, const ModelParams& p)
{
    // Periodic trapezoid over uniform samples.
    double sum = 0.0;
    for (const auto& v : orbit.points) {
        const double r = coupling_rate(v, p);
        sum += r * r;
    }
    return 0.5 * sum * orbit.sample_dt();
}

double fourier_d(const PeriodicOrbit& orbit, std::size_t k_max, std::optional<double> cutoff)
{
    const FourierSeries fs = orbit_fourier(orbit, coupling_of, k_max);
    double sum = 0.0;
    for (std::size_t k = 1; k < fs.coeffs.size(); ++k) {
        const double kk = static_cast<double>(k);
        if (cutoff && !(kk * fs.omega < *cutoff)) {
            break;
        }
        sum += kk * kk * std::norm(fs.coeffs[k]);
    }
    return kTwoPi * fs.omega * sum;
}

} // namespace

double diffusion_coefficient(const ModelParams& p, double energy, Branch branch,
                             DiffusionMethod method, const DiffusionOptions& opt)
{
    const PeriodicOrbit orbit = periodic_orbit(p, energy, branch, opt.orbit);
    if (method == DiffusionMethod::TimeIntegral) {
        return time_integral_d(orbit, p);
    }
    return fourier_d(orbit, opt.k_max, std::nullopt);
}

double diffusion_coefficient_bandlimited(const ModelParams& p, double energy, Branch branch,
                                         double omega_cut, const DiffusionOptions& opt)
{
    if (!(omega_cut > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "cutoff must be positive");
    }
    if (std::isinf(omega_cut)) {
        return diffusion_coefficient(p, energy, branch, DiffusionMethod::FourierSum, opt);
    }
    const PeriodicOrbit orbit = periodic_orbit(p, energy, branch, opt.orbit);
    if (orbit.omega_e >= omega_cut) {
        return 0.0;
    }
    // Enough harmonics to reach the cutoff.
    const auto k_cut = static_cast<std::size_t>(std::ceil(omega_cut / orbit.omega_e));
    return fourier_d(orbit, std::max(opt.k_max, k_cut), omega_cut);
}

double separatrix_offset(const ModelParams& p, double fraction)
{
    return fraction * p.energy_span();
}

double locking_energy(const ModelParams& p, double omega_cut, const OrbitOptions& opt,
                      double eps_fraction)
{
    double lo = p.e_sep() + separatrix_offset(p, eps_fraction);
    double hi = p.e_plus() - separatrix_offset(p, eps_fraction);
    auto g = [&](double e) { return libration_frequency(p, e, Branch::Upper, opt) - omega_cut; };
    const double g_lo = g(lo);
    const double g_hi = g(hi);
    if (!(g_lo < 0.0 && g_hi > 0.0)) {
        std::ostringstream msg;
        msg << "Omega(E) - " << omega_cut << " has signs " << g_lo << ", " << g_hi
            << " at the ends of the upper branch";
        throw Error(ErrorCode::RootNotBracketed, msg.str());
    }
    for (int it = 0; it < 60 && hi - lo > 1e-12 * p.energy_span(); ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

NoisePath white_noise_path(std::uint64_t seed, double dt, std::size_t n, double s0,
                           std::optional<double> cutoff, NoiseChannel channel)
{
    if (!(dt > 0.0) || n == 0 || !(s0 >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "need dt > 0, n >= 1, s0 >= 0");
    }
    if (cutoff && !(*cutoff < kPi / dt)) {
        std::ostringstream msg;
        msg << "cutoff " << *cutoff << " is not below the Nyquist frequency " << kPi / dt;
        throw Error(ErrorCode::CutoffAboveNyquist, msg.str());
    }
    if (cutoff && !(*cutoff > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "cutoff must be positive");
    }
    NoisePath path;
    path.dt = dt;
    path.s0 = s0;
    path.cutoff = cutoff;
    path.seed = seed;
    path.channel = channel;
    path.samples.resize(n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(kTwoPi * s0 / dt));
    for (double& x : path.samples) {
        x = normal(rng);
    }
    if (cutoff) {
        std::vector<fftw_complex> spec(n / 2 + 1);
        fftw_plan fwd;
        fftw_plan inv;
        {
            std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
            fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), path.samples.data(), spec.data(),
                                       FFTW_ESTIMATE);
            inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec.data(), path.samples.data(),
                                       FFTW_ESTIMATE);
        }
        fftw_execute(fwd);
        const double dw = kTwoPi / (static_cast<double>(n) * dt);
        for (std::size_t k = 0; k < spec.size(); ++k) {
            if (!(static_cast<double>(k) * dw < *cutoff)) {
                spec[k][0] = 0.0;
                spec[k][1] = 0.0;
            }
        }
        fftw_execute(inv);
        {
            std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
            fftw_destroy_plan(fwd);
            fftw_destroy_plan(inv);
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (double& x : path.samples) {
            x *= inv_n;
        }
    }
    return path;
}

Trajectory langevin_simulate(const ModelParams& p, std::shared_ptr<const NoisePath> noise,
                             const PhaseState& state0, double t_end, const IntegratorConfig& cfg)
{
    if (!noise) {
        throw Error(ErrorCode::InvalidArgument, "no noise path");
    }
    const double ratio = noise->dt / cfg.dt;
    if (!(ratio >= 1.0) || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw Error(ErrorCode::InvalidArgument, "noise dt must be an integer multiple of dt");
    }
    if (noise->duration() < t_end * (1.0 - 1e-12)) {
        throw Error(ErrorCode::InvalidArgument, "noise path shorter than t_end");
    }
    Trajectory traj = integrate(p, Drive(noise), state0, t_end, cfg);
    traj.seed = noise->seed;
    return traj;
}

EnsembleStats langevin_energy_ensemble(const ModelParams& p, const std::vector<PhaseState>& starts,
                                       const EnsembleConfig& cfg)
{
    if (starts.empty() || cfg.members == 0) {
        throw Error(ErrorCode::InvalidArgument, "ensemble needs members and start states");
    }
    const auto n_noise = static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.noise_dt - 1e-9)) + 1;
    IntegratorConfig icfg;
    icfg.dt = cfg.dt;
    icfg.sample_stride = cfg.sample_stride;
    std::vector<std::vector<double>> energies(cfg.members);
    std::vector<double> times;
    std::mutex times_mutex;
    parallel_for(cfg.members, cfg.workers, [&](std::size_t i) {
        auto path = std::make_shared<const NoisePath>(
            white_noise_path(cfg.base_seed + i, cfg.noise_dt, n_noise, cfg.s0));
        Trajectory traj = langevin_simulate(p, path, starts[i % starts.size()], cfg.t_end, icfg);
        energies[i] = std::move(traj.energy);
        if (i == 0) {
            std::lock_guard<std::mutex> lock(times_mutex);
            times = traj.t;
        }
    });
    EnsembleStats st;
    st.t = times;
    const std::size_t m = times.size();
    st.mean_energy.assign(m, 0.0);
    st.var_energy.assign(m, 0.0);
    st.var_increment.assign(m, 0.0);
    const double n = static_cast<double>(cfg.members);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        double si = 0.0;
        for (const auto& e : energies) {
            s += e[j];
            si += e[j] - e[0];
        }
        const double mean = s / n;
        const double mean_i = si / n;
        double v = 0.0;
        double vi = 0.0;
        for (const auto& e : energies) {
            v += (e[j] - mean) * (e[j] - mean);
            const double d = e[j] - e[0] - mean_i;
            vi += d * d;
        }
        st.mean_energy[j] = mean;
        st.var_energy[j] = v / (n - 1.0 > 0.0 ? n - 1.0 : 1.0);
        st.var_increment[j] = vi / (n - 1.0 > 0.0 ? n - 1.0 : 1.0);
    }
    return st;
}

DiffusionProfile DiffusionProfile::scaled(double s0_new) const
{
    DiffusionProfile out = *this;
    const double f = s0_new / s0;
    for (double& d : out.well_d) {
        d *= f;
    }
    for (double& d : out.upper_d) {
        d *= f;
    }
    out.s0 = s0_new;
    return out;
}

DiffusionProfile make_diffusion_profile(const ModelParams& p, const ProfileConfig& cfg)
{
    if (cfg.well_cells < 1 || cfg.upper_cells < 1) {
        throw Error(ErrorCode::InvalidArgument, "need at least one cell per branch");
    }
    DiffusionProfile prof;
    prof.method = cfg.method;
    prof.cutoff = cfg.cutoff;
    prof.eps_e = separatrix_offset(p, cfg.eps_fraction);
    prof.s0 = cfg.s0;
    const std::size_t nw = cfg.well_cells;
    const std::size_t nu = cfg.upper_cells;
    auto edges = [](double lo, double hi, std::size_t n) {
        std::vector<double> e(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
        }
        e.back() = hi;
        return e;
    };
    prof.well_edges = edges(p.e_minus(), p.e_sep(), nw);
    prof.upper_edges = edges(p.e_sep(), p.e_plus(), nu);
    prof.well_inv_omega.assign(nw, 0.0);
    prof.upper_inv_omega.assign(nu, 0.0);
    prof.well_omega.assign(nw, 0.0);
    prof.upper_omega.assign(nu, 0.0);
    prof.well_d.assign(nw + 1, 0.0);
    prof.upper_d.assign(nu + 1, 0.0);

    auto d_at = [&](double e, Branch b) {
        if (cfg.cutoff) {
            return cfg.s0 * diffusion_coefficient_bandlimited(p, e, b, *cfg.cutoff, cfg.diffusion);
        }
        return cfg.s0 * diffusion_coefficient(p, e, b, cfg.method, cfg.diffusion);
    };
    const OrbitOptions& oo = cfg.diffusion.orbit;
    // Tasks: cells then interior faces, both branches.
    const std::size_t n_tasks = nw + nu + (nw + 1) + (nu + 1);
    parallel_for(n_tasks, cfg.workers, [&](std::size_t k) {
        if (k < nw) {
            const double a = prof.well_edges[k];
            const double b = prof.well_edges[k + 1];
            prof.well_inv_omega[k] = inverse_frequency_integral(p, a, b, Branch::WellLeft, oo);
            prof.well_omega[k] = kTwoPi / orbit_period(p, 0.5 * (a + b), Branch::WellLeft, oo);
            return;
        }
        k -= nw;
        if (k < nu) {
            const double a = prof.upper_edges[k];
            const double b = prof.upper_edges[k + 1];
            prof.upper_inv_omega[k] = inverse_frequency_integral(p, a, b, Branch::Upper, oo);
            prof.upper_omega[k] = kTwoPi / orbit_period(p, 0.5 * (a + b), Branch::Upper, oo);
            return;
        }
        k -= nu;
        if (k <= nw) {
            if (k == 0) {
                prof.well_d[k] = 0.0;
            } else if (k == nw) {
                prof.well_d[k] = d_at(p.e_sep() - prof.eps_e, Branch::WellLeft);
            } else {
                prof.well_d[k] = d_at(prof.well_edges[k], Branch::WellLeft);
            }
            return;
        }
        k -= nw + 1;
        if (k == 0) {
            prof.upper_d[k] = d_at(p.e_sep() + prof.eps_e, Branch::Upper);
        } else if (k == nu) {
            prof.upper_d[k] = 0.0;
        } else {
            prof.upper_d[k] = d_at(prof.upper_edges[k], Branch::Upper);
        }
    });
    return prof;
}

namespace {

const std::vector<double>& edges_of(const DiffusionProfile& prof, FpBranch b)
{
    return b == FpBranch::Upper ? prof.upper_edges : prof.well_edges;
}

const std::vector<double>& inv_omega_of(const DiffusionProfile& prof, FpBranch b)
{
    return b == FpBranch::Upper ? prof.upper_inv_omega : prof.well_inv_omega;
}

constexpr std::array<FpBranch, 3> kBranches{FpBranch::WellLeft, FpBranch::WellRight,
                                            FpBranch::Upper};

void check_shape(const DiffusionProfile& prof, const BranchedDensity& d)
{
    for (FpBranch b : kBranches) {
        if (d[b].size() + 1 != edges_of(prof, b).size()) {
            throw Error(ErrorCode::InvalidArgument, "density does not match the profile grid");
        }
    }
}

} // namespace

double branch_mass(const DiffusionProfile& prof, const BranchedDensity& d, FpBranch b)
{
    const auto& e = edges_of(prof, b);
    double m = 0.0;
    for (std::size_t i = 0; i < d[b].size(); ++i) {
        m += d[b][i] * (e[i + 1] - e[i]);
    }
    return m;
}

double total_mass(const DiffusionProfile& prof, const BranchedDensity& d)
{
    double m = 0.0;
    for (FpBranch b : kBranches) {
        m += branch_mass(prof, d, b);
    }
    return m;
}

BranchedDensity stationary_density(const DiffusionProfile& prof)
{
    BranchedDensity d;
    double total = 0.0;
    for (FpBranch b : kBranches) {
        const auto& e = edges_of(prof, b);
        const auto& tau = inv_omega_of(prof, b);
        d[b].resize(tau.size());
        for (std::size_t i = 0; i < tau.size(); ++i) {
            d[b][i] = tau[i] / (e[i + 1] - e[i]);
            total += tau[i];
        }
    }
    for (auto& v : d.w) {
        for (double& x : v) {
            x /= total;
        }
    }
    return d;
}

BranchedDensity point_density(const DiffusionProfile& prof, FpBranch b)
{
    BranchedDensity d;
    for (FpBranch k : kBranches) {
        d[k].assign(edges_of(prof, k).size() - 1, 0.0);
    }
    const auto& e = edges_of(prof, b);
    const std::size_t i = b == FpBranch::Upper ? d[b].size() - 1 : 0;
    d[b][i] = 1.0 / (e[i + 1] - e[i]);
    return d;
}

namespace {

// Conductance D / (center distance) of face f on one branch; the junction
// and outer faces use half a cell.
std::vector<double> conductances(const std::vector<double>& edges, const std::vector<double>& d)
{
    const std::size_t n = edges.size() - 1;
    std::vector<double> g(n + 1, 0.0);
    for (std::size_t f = 0; f <= n; ++f) {
        double dist;
        if (f == 0) {
            dist = 0.5 * (edges[1] - edges[0]);
        } else if (f == n) {
            dist = 0.5 * (edges[n] - edges[n - 1]);
        } else {
            dist = 0.5 * (edges[f + 1] - edges[f - 1]);
        }
        g[f] = d[f] / dist;
    }
    return g;
}

} // namespace

double fp_stable_dt(const DiffusionProfile& prof)
{
    double dt = std::numeric_limits<double>::infinity();
    auto scan = [&](const std::vector<double>& edges, const std::vector<double>& d,
                    const std::vector<double>& tau) {
        const auto g = conductances(edges, d);
        for (std::size_t i = 0; i < tau.size(); ++i) {
            const double sum = g[i] + g[i + 1];
            if (sum > 0.0) {
                dt = std::min(dt, tau[i] / sum);
            }
        }
    };
    scan(prof.well_edges, prof.well_d, prof.well_inv_omega);
    scan(prof.upper_edges, prof.upper_d, prof.upper_inv_omega);
    return dt;
}

void fp_step(const DiffusionProfile& prof, BranchedDensity& d, double dt)
{
    check_shape(prof, d);
    const auto gw = conductances(prof.well_edges, prof.well_d);
    const auto gu = conductances(prof.upper_edges, prof.upper_d);
    const std::size_t nw = prof.well_cells();
    const std::size_t nu = prof.upper_cells();

    // Work in masses m = w h and rho = m / tau.
    std::array<std::vector<double>, 3> m;
    std::array<std::vector<double>, 3> rho;
    for (FpBranch b : kBranches) {
        const auto k = static_cast<std::size_t>(b);
        const auto& e = edges_of(prof, b);
        const auto& tau = inv_omega_of(prof, b);
        m[k].resize(d[b].size());
        rho[k].resize(d[b].size());
        for (std::size_t i = 0; i < d[b].size(); ++i) {
            m[k][i] = d[b][i] * (e[i + 1] - e[i]);
            rho[k][i] = m[k][i] / tau[i];
        }
    }
    std::array<std::vector<double>, 3> dm{std::vector<double>(nw, 0.0),
                                          std::vector<double>(nw, 0.0),
                                          std::vector<double>(nu, 0.0)};
    // Interior faces; flux toward higher E is g (rho_i - rho_{i+1}).
    for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t f = 1; f < nw; ++f) {
            const double j = gw[f] * (rho[k][f - 1] - rho[k][f]);
            dm[k][f - 1] -= j;
            dm[k][f] += j;
        }
    }
    for (std::size_t f = 1; f < nu; ++f) {
        const double j = gu[f] * (rho[2][f - 1] - rho[2][f]);
        dm[2][f - 1] -= j;
        dm[2][f] += j;
    }
    // Junction: rho_J makes the three fluxes into the node sum to zero.
    const double g_l = gw[nw];
    const double g_u = gu[0];
    const double g_sum = 2.0 * g_l + g_u;
    if (g_sum > 0.0) {
        const double rho_j = (g_l * (rho[0][nw - 1] + rho[1][nw - 1]) + g_u * rho[2][0]) / g_sum;
        dm[0][nw - 1] -= g_l * (rho[0][nw - 1] - rho_j);
        dm[1][nw - 1] -= g_l * (rho[1][nw - 1] - rho_j);
        dm[2][0] -= g_u * (rho[2][0] - rho_j);
    }
    for (FpBranch b : kBranches) {
        const auto k = static_cast<std::size_t>(b);
        const auto& e = edges_of(prof, b);
        for (std::size_t i = 0; i < d[b].size(); ++i) {
            double mi = m[k][i] + dt * dm[k][i];
            if (mi < 0.0) {
                d.clipped_mass += -mi;
                mi = 0.0;
            }
            d[b][i] = mi / (e[i + 1] - e[i]);
        }
    }
    d.t += dt;
}

BranchedDensity fp_evolve(const DiffusionProfile& prof, const BranchedDensity& w0, double t_end,
                          double dt_pde, const std::function<bool(const BranchedDensity&)>& observer)
{
    check_shape(prof, w0);
    if (!(dt_pde > 0.0) || !(t_end >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "need dt_pde > 0 and t_end >= 0");
    }
    const double limit = fp_stable_dt(prof);
    if (dt_pde > limit) {
        std::ostringstream msg;
        msg << "dt_pde = " << dt_pde << " exceeds the stable step " << limit;
        throw Error(ErrorCode::CFLViolation, msg.str());
    }
    BranchedDensity d = w0;
    const double t0 = w0.t;
    const auto n = static_cast<std::size_t>(std::ceil(t_end / dt_pde - 1e-9));
    for (std::size_t i = 0; i < n; ++i) {
        const double h = std::min(dt_pde, t_end - static_cast<double>(i) * dt_pde);
        fp_step(prof, d, h);
        d.t = t0 + static_cast<double>(i) * dt_pde + h;
        if (observer && !observer(d)) {
            break;
        }
    }
    return d;
}

double sup_distance(const BranchedDensity& a, const BranchedDensity& b)
{
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        if (a.w[k].size() != b.w[k].size()) {
            throw Error(ErrorCode::InvalidArgument, "densities on different grids");
        }
        for (std::size_t i = 0; i < a.w[k].size(); ++i) {
            s = std::max(s, std::abs(a.w[k][i] - b.w[k][i]));
        }
    }
    return s;
}

double noise_transfer_time(const ModelParams& p, const DiffusionProfile& prof)
{
    // Uniform-in-E average of Omega D with D at centers from the two faces.
    double integral = 0.0;
    double length = 0.0;
    auto add = [&](const std::vector<double>& e, const std::vector<double>& om,
                   const std::vector<double>& d) {
        for (std::size_t i = 0; i < om.size(); ++i) {
            const double h = e[i + 1] - e[i];
            integral += om[i] * 0.5 * (d[i] + d[i + 1]) * h;
            length += h;
        }
    };
    add(prof.well_edges, prof.well_omega, prof.well_d);
    add(prof.upper_edges, prof.upper_omega, prof.upper_d);
    const double mean = length > 0.0 ? integral / length : 0.0;
    if (!(mean > 0.0)) {
        throw Error(ErrorCode::DegenerateProfile, "<Omega D> vanishes");
    }
    const double span = p.energy_span();
    return span * span / mean;
}

WellOccupancy well_occupancy_stationary(const ModelParams& p, const OrbitOptions& opt)
{
    const double well = inverse_frequency_integral(p, p.e_minus(), p.e_sep(), Branch::WellLeft, opt);
    const double upper = inverse_frequency_integral(p, p.e_sep(), p.e_plus(), Branch::Upper, opt);
    const double z = 2.0 * well + upper;
    WellOccupancy o;
    o.one_well = well / z;
    o.upper = upper / z;
    o.total = 2.0 * o.one_well + o.upper;
    return o;
}

} // namespace twomode
