#include "twomode/cli.hpp"

#include "config.hpp"
#include "table.hpp"

#include "twomode/duffing.hpp"
#include "twomode/error.hpp"
#include "twomode/harmonic.hpp"
#include "twomode/noise.hpp"
#include "twomode/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>

#ifndef TWOMODE_VERSION
#define TWOMODE_VERSION "0.0.0"
#endif

namespace twomode::cli {

const char* version()
{
    return TWOMODE_VERSION;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Context {
    Config cfg;
    std::string command;
    std::ostream* err = nullptr;
    std::size_t workers = 1;
    /// Rows attempted and failed, for the exit-code rule.
    std::size_t attempted = 0;
    std::size_t failed = 0;
};

ModelParams model_from(const Config& c)
{
    if (c.text("model.source") == "overlap") {
        OverlapInputs in;
        in.J00 = c.real("model.j00");
        in.J01 = c.real("model.j01");
        in.J11 = c.real("model.j11");
        in.E0 = c.real("model.e0");
        in.E1 = c.real("model.e1");
        in.lambda = c.real("model.lambda");
        in.hbar = c.real("model.hbar");
        return derive_model_params(in);
    }
    return ModelParams::from_frequencies(c.real("model.omega"), c.real("model.a"), c.real("model.b"));
}

void require(bool ok, const std::string& what)
{
    if (!ok) {
        throw ConfigError(what);
    }
}

/// Sorted grid with duplicates removed (warning on err).
std::vector<double> dedupe(std::vector<double> w, std::ostream& err)
{
    std::sort(w.begin(), w.end());
    const std::size_t before = w.size();
    w.erase(std::unique(w.begin(), w.end(),
                        [](double a, double b) {
                            return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
                        }),
            w.end());
    if (w.size() != before) {
        err << "warning: removed " << (before - w.size()) << " duplicate frequencies\n";
    }
    return w;
}

std::vector<double> linear_grid(double lo, double hi, long long n)
{
    require(n >= 1, "grid needs at least one point");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) {
        g[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return g;
}

void header(Table& t, const Context& ctx, const std::vector<std::string>& sections)
{
    t.meta(std::string("twomode ") + version());
    t.meta("command: " + ctx.command);
    t.meta("seed: " + ctx.cfg.text("run.seed"));
    std::vector<std::string> all{"model", "run"};
    all.insert(all.end(), sections.begin(), sections.end());
    for (const auto& line : ctx.cfg.echo(all)) {
        t.meta("config: " + line);
    }
}

void landmark_meta(Table& t, const ModelParams& p)
{
    t.meta("Delta0 = " + t.format(p.delta0()) + ", Eminus = " + t.format(p.e_minus())
           + ", Esep = " + t.format(p.e_sep()) + ", Eplus = " + t.format(p.e_plus())
           + ", Omega0 = " + t.format(p.omega0()));
}

// ---------------------------------------------------------------- landmarks

void cmd_landmarks(Context& ctx, const ModelParams& p, Table& t)
{
    header(t, ctx, {});
    const Landmarks lm = stationary_points(p);
    t.columns({"name", "value"});
    t.row({std::string("Delta0"), lm.delta0});
    t.row({std::string("Eminus"), lm.e_minus});
    t.row({std::string("Esep"), lm.e_sep});
    t.row({std::string("Eplus"), lm.e_plus});
    t.row({std::string("Omega0"), lm.omega0});
    t.row({std::string("Omega0_numeric"),
           libration_frequency(p, p.e_minus() + 1e-6 * p.well_depth(), Branch::WellLeft)});
    t.row({std::string("inner_vertex_delta"), lm.inner_vertex_delta});
    t.row({std::string("saddle_theta"), lm.saddle_theta});
    t.row({std::string("saddle_exponent"), lm.saddle_exponent});
    t.meta("saddle: " + lm.saddle_description);
}

// ----------------------------------------------------------------- portrait

void cmd_portrait(Context& ctx, const ModelParams& p, Table& t)
{
    const auto energies = ctx.cfg.real_list("portrait.energies");
    require(!energies.empty(), "portrait.energies is empty");
    const long long points = ctx.cfg.integer("portrait.points");
    require(points >= 2, "portrait.points must be at least 2");
    const double dt = ctx.cfg.real("portrait.dt");
    require(dt > 0.0, "portrait.dt must be positive");
    const double tol = 1e-4 * p.energy_span();
    for (double e : energies) {
        require(e >= p.e_minus() - tol && e <= p.e_plus() + tol,
                "energy " + t.format(e) + " outside [Eminus, Eplus]");
    }
    header(t, ctx, {"portrait"});
    landmark_meta(t, p);
    t.columns({"block", "energy", "branch", "t", "Delta", "Theta", "E"});

    OrbitOptions opt;
    opt.dt = dt;
    long long block = 0;
    for (double e : energies) {
        auto emit = [&](const std::string& branch, double time, const PhaseState& s) {
            t.row({block, e, branch, time, s.delta, s.theta, h0_energy(s, p)});
        };
        if (std::abs(e - p.e_minus()) <= 1e-9 * p.energy_span()) {
            emit("point", 0.0, {p.delta0(), 0.0});
        } else if (std::abs(e - p.e_plus()) <= tol) {
            emit("point", 0.0, {1.0, 0.0});
        } else if (std::abs(e - p.e_sep()) <= opt.sep_exclusion * p.energy_span()) {
            const SeparatrixOrbit so = separatrix_orbit(p, Loop::Left, 1e-8, dt);
            const std::size_t n = so.t.size();
            for (long long k = 0; k < points; ++k) {
                const std::size_t i = static_cast<std::size_t>(k) * (n - 1) / static_cast<std::size_t>(points - 1);
                emit("separatrix", so.t[i], so.states[i]);
            }
        } else {
            const Branch b = e < p.e_sep() ? Branch::WellLeft : Branch::Upper;
            const PeriodicOrbit orbit = periodic_orbit(p, e, b, opt);
            const std::size_t n = orbit.states.size();
            for (long long k = 0; k < points; ++k) {
                const std::size_t i = static_cast<std::size_t>(k) * n / static_cast<std::size_t>(points);
                emit(to_string(b), static_cast<double>(i) * orbit.sample_dt(), orbit.states[i]);
            }
        }
        ++block;
    }
}

// ------------------------------------------------------------ threshold scans

void scan_duffing(Context& ctx, Table& t, bool numeric)
{
    const Config& c = ctx.cfg;
    std::vector<double> omegas = c.real_list("scan-duffing.omegas");
    if (omegas.empty()) {
        omegas = linear_grid(c.real("scan-duffing.omega_min"), c.real("scan-duffing.omega_max"),
                             c.integer("scan-duffing.omega_steps"));
    }
    for (double w : omegas) {
        require(w > 0.0, "frequencies must be positive");
    }
    omegas = dedupe(omegas, *ctx.err);

    DuffingThresholdConfig dn;
    dn.horizon_periods = c.real("scan-duffing.horizon_periods");
    dn.dt = c.real("scan-duffing.dt");
    dn.f_lo = c.real("scan-duffing.f_lo");
    dn.f_hi = c.real("scan-duffing.f_hi");
    dn.bisection_iters = static_cast<int>(c.integer("scan-duffing.iters"));
    require(dn.dt > 0.0 && dn.horizon_periods > 0.0, "scan-duffing.dt and horizon must be positive");
    require(dn.f_lo >= 0.0 && dn.f_lo < dn.f_hi, "need 0 <= f_lo < f_hi");
    SlowFlowThresholdConfig sf;
    const std::string variant = c.text("scan-duffing.variant");
    sf.flow.variant = variant == "paper"    ? SlowFlowVariant::Paper
                      : variant == "linear" ? SlowFlowVariant::Linear
                                            : SlowFlowVariant::StandardAveraging;
    sf.flow.t_max = c.real("scan-duffing.tmax");
    sf.f_lo = dn.f_lo;
    sf.f_hi = dn.f_hi;
    require(sf.flow.t_max > 0.0, "scan-duffing.tmax must be positive");

    header(t, ctx, {"scan-threshold", "scan-duffing"});
    t.meta("escape criterion: |x| >= 1 from rest; slow flow: max A >= 1 before phi leaves [-pi/2, 3pi/2]");
    t.columns({"kind", "omega", "F_c_numeric", "F_c_slowflow", "F_c_linear", "status"});
    const auto rows = duffing_threshold_curve(omegas, dn, sf, ctx.workers, numeric);
    for (const auto& r : rows) {
        const bool bad = (numeric && std::isnan(r.f_numeric)) || std::isnan(r.f_slow_flow);
        ++ctx.attempted;
        ctx.failed += bad ? 1 : 0;
        t.row({std::string("scan"), r.omega, r.f_numeric, r.f_slow_flow, r.f_linear,
               std::string(bad ? "bracket_failed" : "ok")});
    }
    t.row({std::string("analytic"), 1.0, kNaN, resonance_threshold_analytic(), 0.0,
           std::string("reference")});
}

void cmd_scan_threshold(Context& ctx, const ModelParams& p, Table& t)
{
    const Config& c = ctx.cfg;
    const std::string system = c.text("scan-threshold.system");
    if (system != "bloch") {
        scan_duffing(ctx, t, system == "duffing");
        return;
    }
    std::vector<double> omegas = c.real_list("scan-threshold.omegas");
    if (omegas.empty()) {
        for (double r : linear_grid(c.real("scan-threshold.omega_min"), c.real("scan-threshold.omega_max"),
                                    c.integer("scan-threshold.omega_steps"))) {
            omegas.push_back(r * p.omega0());
        }
    }
    for (double w : omegas) {
        require(w > 0.0, "frequencies must be positive");
    }
    omegas = dedupe(omegas, *ctx.err);

    ThresholdScanConfig tc;
    tc.horizon_periods = c.real("scan-threshold.horizon_periods");
    tc.t_max = c.optional_real("scan-threshold.tmax");
    tc.f_lo = c.real("scan-threshold.f_lo");
    tc.f_hi = c.real("scan-threshold.f_hi");
    tc.bisection_iters = static_cast<int>(c.integer("scan-threshold.iters"));
    tc.margin_fraction = c.real("scan-threshold.margin_fraction");
    tc.dt = c.real("scan-threshold.dt");
    require(tc.dt > 0.0, "scan-threshold.dt must be positive");
    require(tc.f_lo >= 0.0 && tc.f_lo < tc.f_hi, "need 0 <= f_lo < f_hi");
    require(tc.horizon_periods > 0.0 && (!tc.t_max || *tc.t_max > 0.0), "horizon must be positive");
    require(tc.margin_fraction > 0.0 && tc.margin_fraction < 1.0, "margin_fraction must be in (0, 1)");
    require(tc.bisection_iters >= 0, "iters must be non-negative");
    const double phi = c.real("scan-threshold.phi");

    header(t, ctx, {"scan-threshold"});
    landmark_meta(t, p);
    t.meta("crossing criterion: visit to the opposite loop core (H0 < Esep - margin), start (Delta0, 0)");
    t.columns({"omega", "omega_over_Omega0", "F_c", "bracket_width", "crossing_time", "status"});
    const auto rows = threshold_curve(p, omegas, phi, tc, ctx.workers);
    for (const auto& r : rows) {
        const bool bad = std::isnan(r.f_c);
        ++ctx.attempted;
        ctx.failed += bad ? 1 : 0;
        t.row({r.omega, r.omega / p.omega0(), r.f_c, bad ? kNaN : r.bracket_width(), r.crossing_time,
               std::string(bad ? "bracket_failed" : "ok")});
    }
}

void cmd_scan_duffing(Context& ctx, const ModelParams&, Table& t)
{
    scan_duffing(ctx, t, ctx.cfg.boolean("scan-duffing.numeric"));
}

// ----------------------------------------------------------------- melnikov

void cmd_melnikov(Context& ctx, const ModelParams& p, Table& t)
{
    const Config& c = ctx.cfg;
    std::vector<double> omegas = c.real_list("melnikov.omegas");
    require(!omegas.empty(), "melnikov.omegas is empty");
    for (double w : omegas) {
        require(w > 0.0, "frequencies must be positive");
    }
    omegas = dedupe(omegas, *ctx.err);
    MelnikovOptions opt;
    opt.eps_saddle = c.real("melnikov.eps_saddle");
    opt.dt = c.real("melnikov.dt");
    opt.tail_tol = c.real("melnikov.tail_tol");
    require(opt.eps_saddle > 0.0 && opt.eps_saddle < 1.0, "eps_saddle must be in (0, 1)");
    require(opt.dt > 0.0 && opt.tail_tol > 0.0, "dt and tail_tol must be positive");
    const double amp = c.real("melnikov.amplitude");
    header(t, ctx, {"melnikov"});
    landmark_meta(t, p);
    t.meta("V = -sqrt(1 - Delta^2) cos(Theta/2) along the left separatrix loop; time origin at the inner vertex");
    t.columns({"omega", "omega_over_Omega0", "amplitude", "delta_e", "delta_e_fixed_phase",
               "phase_of_max", "transform_re", "transform_im"});
    std::vector<MelnikovResult> res(omegas.size());
    parallel_for(omegas.size(), ctx.workers,
                 [&](std::size_t i) { res[i] = melnikov(p, omegas[i], amp, opt); });
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        t.row({omegas[i], omegas[i] / p.omega0(), amp, res[i].delta_e, res[i].delta_e_fixed_phase,
               res[i].phase_of_max, res[i].transform.real(), res[i].transform.imag()});
    }
}

// ---------------------------------------------------------------- histogram

void cmd_histogram(Context& ctx, const ModelParams& p, Table& t)
{
    const Config& c = ctx.cfg;
    const std::string mode = c.text("histogram.mode");
    const long long bins = c.integer("histogram.bins");
    require(bins >= 1, "histogram.bins must be positive");
    const long long stride = c.integer("histogram.stride");
    require(stride >= 1, "histogram.stride must be positive");
    const bool noise = mode == "langevin-histogram";

    double delta_e = 0.0;
    const double amp = c.real("histogram.amplitude");
    const double omega = c.real("histogram.omega");
    if (noise) {
        delta_e = p.e_plus() - p.e_sep();
    } else if (auto d = c.optional_real("histogram.delta_e")) {
        delta_e = *d;
    } else {
        require(omega > 0.0, "histogram.omega must be positive");
        delta_e = melnikov_halfwidth(p, omega, amp);
    }
    require(delta_e > 0.0, "layer half-width must be positive");
    const double e_min = c.optional_real("histogram.e_min").value_or(p.e_minus());
    const double e_max = c.optional_real("histogram.e_max")
                             .value_or(noise ? p.e_plus() : std::min(p.e_sep() + 3.0 * delta_e, p.e_plus()));
    require(e_max > e_min, "histogram grid is empty");
    const auto edges = uniform_edges(e_min, e_max, static_cast<std::size_t>(bins));

    header(t, ctx, {"histogram"});
    landmark_meta(t, p);
    t.meta("delta_e = " + t.format(delta_e));
    const EnergyDistribution theory = invariant_energy_distribution(p, delta_e, edges);
    t.meta("eta = " + t.format(theory.eta));
    const Occupancy occ_th = occupancy_fraction(theory, p.e_sep(), p);
    t.meta("mu(Esep) theory = " + t.format(occ_th.mu) + ", one well = " + t.format(occ_th.mu_one_well));

    if (mode == "invariant-theory") {
        t.columns({"e_lo", "e_hi", "e_center", "w_theory"});
        for (std::size_t i = 0; i < theory.bins(); ++i) {
            t.row({edges[i], edges[i + 1], theory.center(i), theory.density[i]});
        }
        return;
    }

    Trajectory traj;
    if (noise) {
        const double s0 = c.real("histogram.s0");
        const double ndt = c.real("histogram.noise_dt");
        const double tmax = c.real("histogram.tmax");
        require(s0 >= 0.0 && ndt > 0.0 && tmax > 0.0, "s0 >= 0, noise_dt > 0 and tmax > 0 required");
        IntegratorConfig ic;
        ic.dt = c.optional_real("histogram.dt").value_or(ndt);
        ic.sample_stride = static_cast<std::size_t>(stride);
        const auto n = static_cast<std::size_t>(std::ceil(tmax / ndt)) + 1;
        auto path = std::make_shared<const NoisePath>(
            white_noise_path(static_cast<std::uint64_t>(c.integer("run.seed")), ndt, n, s0));
        traj = langevin_simulate(p, path, {p.delta0(), 0.0}, tmax, ic);
    } else {
        const double periods = c.real("histogram.periods");
        require(omega > 0.0 && periods > 0.0, "omega and periods must be positive");
        IntegratorConfig ic;
        ic.dt = c.optional_real("histogram.dt").value_or(1e-3);
        require(ic.dt > 0.0, "histogram.dt must be positive");
        ic.sample_stride = static_cast<std::size_t>(stride);
        traj = integrate(p, Drive(HarmonicDrive{amp, omega, c.real("histogram.phi")}), {p.delta0(), 0.0},
                         periods * kTwoPi / omega, ic);
    }
    const EnergyDistribution emp = energy_histogram(traj, edges);
    std::size_t below = 0;
    for (double e : traj.energy) {
        below += e <= p.e_sep() + 1.5 * delta_e ? 1 : 0;
    }
    t.meta("samples = " + std::to_string(traj.size()) + ", mass outside grid = " + t.format(emp.mass_outside));
    t.meta("fraction with E <= Esep + 1.5 delta_e = "
           + t.format(static_cast<double>(below) / static_cast<double>(std::max<std::size_t>(traj.size(), 1))));
    t.meta("mu(Esep) empirical = " + t.format(occupancy_fraction(emp, p.e_sep(), p).mu));
    t.columns({"e_lo", "e_hi", "e_center", "w_empirical", "w_theory"});
    for (std::size_t i = 0; i < emp.bins(); ++i) {
        t.row({edges[i], edges[i + 1], emp.center(i), emp.density[i], theory.density[i]});
    }
}

// ---------------------------------------------------------------- diffusion

DiffusionMethod method_from(const std::string& s)
{
    return s == "fourier-sum" ? DiffusionMethod::FourierSum : DiffusionMethod::TimeIntegral;
}

void cmd_diffusion(Context& ctx, const ModelParams& p, Table& t)
{
    const Config& c = ctx.cfg;
    const DiffusionMethod method = method_from(c.text("diffusion.method"));
    const auto cutoff = c.optional_real("diffusion.cutoff");
    require(!cutoff || *cutoff > 0.0, "diffusion.cutoff must be positive");
    const double eps = separatrix_offset(p, c.real("diffusion.eps_fraction"));
    require(eps > 0.0 && eps < 0.5 * p.well_depth(), "eps_fraction out of range");
    DiffusionOptions dopt;
    const long long k_max = c.integer("diffusion.k_max");
    require(k_max >= 1, "diffusion.k_max must be positive");
    dopt.k_max = static_cast<std::size_t>(k_max);

    struct Point {
        Branch branch;
        double energy;
        std::string side;
    };
    std::vector<Point> pts;
    if (c.text("diffusion.mode") == "points") {
        for (double e : c.real_list("diffusion.energies")) {
            require(e > p.e_minus() && e < p.e_plus() && e != p.e_sep(),
                    "energy " + t.format(e) + " not strictly inside a branch");
            pts.push_back({e < p.e_sep() ? Branch::WellLeft : Branch::Upper, e, ""});
        }
        require(!pts.empty(), "diffusion.energies is empty");
    } else {
        const long long nw = c.integer("diffusion.well_cells");
        const long long nu = c.integer("diffusion.upper_cells");
        require(nw >= 1 && nu >= 1, "cell counts must be positive");
        for (long long i = 1; i < nw; ++i) {
            pts.push_back({Branch::WellLeft, p.e_minus() + p.well_depth() * static_cast<double>(i) / static_cast<double>(nw), ""});
        }
        pts.push_back({Branch::WellLeft, p.e_sep() - eps, "below"});
        pts.push_back({Branch::Upper, p.e_sep() + eps, "above"});
        const double up = p.e_plus() - p.e_sep();
        for (long long i = 1; i < nu; ++i) {
            pts.push_back({Branch::Upper, p.e_sep() + up * static_cast<double>(i) / static_cast<double>(nu), ""});
        }
    }
    struct Values {
        double omega = kNaN;
        double d = kNaN;
        double d_cut = kNaN;
    };
    std::vector<Values> vals(pts.size());
    parallel_for(pts.size(), ctx.workers, [&](std::size_t i) {
        const Point& pt = pts[i];
        vals[i].omega = libration_frequency(p, pt.energy, pt.branch, dopt.orbit);
        vals[i].d = diffusion_coefficient(p, pt.energy, pt.branch, method, dopt);
        if (cutoff) {
            vals[i].d_cut = diffusion_coefficient_bandlimited(p, pt.energy, pt.branch, *cutoff, dopt);
        }
    });
    header(t, ctx, {"diffusion"});
    landmark_meta(t, p);
    t.meta("D for unit spectral density, V = sqrt(1 - Delta^2) cos(Theta/2); method " + to_string(method));
    double below = kNaN;
    double above = kNaN;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        below = pts[i].side == "below" ? vals[i].d : below;
        above = pts[i].side == "above" ? vals[i].d : above;
    }
    if (!std::isnan(below)) {
        t.meta("eps = " + t.format(eps) + ", D(Esep + eps) / D(Esep - eps) = " + t.format(above / below));
    }
    t.columns({"branch", "side", "energy", "Omega", "D", "D_cut"});
    for (std::size_t i = 0; i < pts.size(); ++i) {
        t.row({to_string(pts[i].branch), pts[i].side.empty() ? std::string("-") : pts[i].side,
               pts[i].energy, vals[i].omega, vals[i].d, vals[i].d_cut});
    }
}

// ----------------------------------------------------------------- langevin

void cmd_langevin(Context& ctx, const ModelParams& p, Table& t)
{
    const Config& c = ctx.cfg;
    const double s0 = c.real("langevin.s0");
    const double ndt = c.real("langevin.noise_dt");
    const double dt = c.real("langevin.dt");
    const double tmax = c.real("langevin.tmax");
    const long long stride = c.integer("langevin.stride");
    const auto cutoff = c.optional_real("langevin.cutoff");
    require(s0 >= 0.0 && ndt > 0.0 && dt > 0.0 && tmax > 0.0, "s0 >= 0, positive steps and tmax required");
    require(stride >= 1, "langevin.stride must be positive");
    const double ratio = ndt / dt;
    require(ratio >= 1.0 && std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio,
            "langevin.noise_dt must be an integer multiple of langevin.dt");
    const auto seed = static_cast<std::uint64_t>(c.integer("run.seed"));
    const auto n = static_cast<std::size_t>(std::ceil(tmax / ndt - 1e-9)) + 1;

    header(t, ctx, {"langevin"});
    landmark_meta(t, p);
    t.meta("noise: <xi(t) xi(t')> = 2 pi s0 delta(t - t'), odd channel F(t) = xi(t)");
    if (c.text("langevin.mode") == "trajectory") {
        const PhaseState s{c.optional_real("langevin.start_delta").value_or(p.delta0()), c.real("langevin.start_theta")};
        require(std::abs(s.delta) <= 1.0, "start_delta must lie in [-1, 1]");
        auto path = std::make_shared<const NoisePath>(white_noise_path(seed, ndt, n, s0, cutoff));
        IntegratorConfig ic;
        ic.dt = dt;
        ic.sample_stride = static_cast<std::size_t>(stride);
        const Trajectory traj = langevin_simulate(p, path, s, tmax, ic);
        t.columns({"t", "Delta", "Theta", "E"});
        for (std::size_t i = 0; i < traj.size(); ++i) {
            t.row({traj.t[i], traj.delta[i], traj.theta[i], traj.energy[i]});
        }
        return;
    }
    require(!cutoff, "langevin.cutoff applies to mode = trajectory only");
    const double e = c.optional_real("langevin.start_energy").value_or(p.e_minus() + 0.5 * p.well_depth());
    require(e > p.e_minus() && e < p.e_plus() && std::abs(e - p.e_sep()) > 1e-3 * p.energy_span(),
            "start_energy must be inside a branch and away from Esep");
    const long long members = c.integer("langevin.members");
    require(members >= 2, "langevin.members must be at least 2");
    const Branch b = e < p.e_sep() ? Branch::WellLeft : Branch::Upper;
    const PeriodicOrbit orbit = periodic_orbit(p, e, b);
    std::vector<PhaseState> starts;
    for (long long i = 0; i < members; ++i) {
        starts.push_back(orbit.states[static_cast<std::size_t>(i) * orbit.states.size() / static_cast<std::size_t>(members)]);
    }
    EnsembleConfig ec;
    ec.members = static_cast<std::size_t>(members);
    ec.base_seed = seed;
    ec.s0 = s0;
    ec.noise_dt = ndt;
    ec.dt = dt;
    ec.t_end = tmax;
    ec.sample_stride = static_cast<std::size_t>(stride);
    ec.workers = ctx.workers;
    const EnsembleStats st = langevin_energy_ensemble(p, starts, ec);
    const double d = diffusion_coefficient(p, e, b);
    t.meta("start energy = " + t.format(e) + ", starts uniform in orbit time");
    t.meta("predicted variance slope 2 Omega D s0 = " + t.format(2.0 * orbit.omega_e * d * s0));
    t.columns({"t", "mean_E", "var_E", "var_increment"});
    for (std::size_t i = 0; i < st.t.size(); ++i) {
        t.row({st.t[i], st.mean_energy[i], st.var_energy[i], st.var_increment[i]});
    }
}

// ----------------------------------------------------------------------- fp

void cmd_fp(Context& ctx, const ModelParams& p, Table& t)
{
    const Config& c = ctx.cfg;
    ProfileConfig pc;
    const long long nw = c.integer("fp.well_cells");
    const long long nu = c.integer("fp.upper_cells");
    require(nw >= 1 && nu >= 1, "cell counts must be positive");
    pc.well_cells = static_cast<std::size_t>(nw);
    pc.upper_cells = static_cast<std::size_t>(nu);
    pc.method = method_from(c.text("fp.method"));
    pc.cutoff = c.optional_real("fp.cutoff");
    require(!pc.cutoff || *pc.cutoff > 0.0, "fp.cutoff must be positive");
    pc.s0 = c.real("fp.s0");
    require(pc.s0 > 0.0, "fp.s0 must be positive");
    pc.workers = ctx.workers;
    const double tmax = c.real("fp.tmax");
    require(tmax >= 0.0, "fp.tmax must be non-negative");
    const long long snaps = c.integer("fp.snapshots");
    require(snaps >= 1, "fp.snapshots must be positive");

    const DiffusionProfile prof = make_diffusion_profile(p, pc);
    const double stable = fp_stable_dt(prof);
    const double dt = c.optional_real("fp.dt").value_or(0.9 * stable);
    require(dt > 0.0, "fp.dt must be positive");
    const BranchedDensity stat = stationary_density(prof);
    BranchedDensity w = c.text("fp.init") == "stationary" ? stat : point_density(prof, FpBranch::WellLeft);

    header(t, ctx, {"fp"});
    landmark_meta(t, p);
    t.meta("stable dt = " + t.format(stable) + ", dt = " + t.format(dt));
    t.meta("transfer time estimate (Eplus - Eminus)^2 / <Omega D> = " + t.format(noise_transfer_time(p, prof)));
    t.columns({"snapshot", "t", "branch", "e_lo", "e_hi", "w", "w_stationary"});
    auto dump = [&](long long k, const BranchedDensity& d) {
        const std::array<std::pair<FpBranch, const char*>, 3> names{
            {{FpBranch::WellLeft, "WellLeft"}, {FpBranch::WellRight, "WellRight"}, {FpBranch::Upper, "Upper"}}};
        for (const auto& [b, name] : names) {
            const auto& e = b == FpBranch::Upper ? prof.upper_edges : prof.well_edges;
            for (std::size_t i = 0; i < d[b].size(); ++i) {
                t.row({k, d.t, std::string(name), e[i], e[i + 1], d[b][i], stat[b][i]});
            }
        }
    };
    dump(0, w);
    for (long long k = 1; k <= snaps; ++k) {
        w = fp_evolve(prof, w, tmax / static_cast<double>(snaps), dt);
        dump(k, w);
    }
    t.meta("final mass = " + t.format(total_mass(prof, w)) + ", sup |w - w_stationary| = "
           + t.format(sup_distance(w, stat)) + ", clipped mass = " + t.format(w.clipped_mass));
}

using Command = std::function<void(Context&, const ModelParams&, Table&)>;

struct CommandInfo {
    const char* name;
    const char* help;
    const char* section;
    const char* mode_key;
    Command fn;
};

const std::vector<CommandInfo>& commands()
{
    static const std::vector<CommandInfo> c{
        {"landmarks", "fixed points, separatrix energy and small-oscillation frequency", "", "", cmd_landmarks},
        {"portrait", "unperturbed orbits at given energies", "portrait", "", cmd_portrait},
        {"scan-threshold", "threshold amplitude F_c versus drive frequency", "scan-threshold", "scan-threshold.system",
         cmd_scan_threshold},
        {"scan-duffing", "Duffing thresholds: simulation, slow flow, linear estimate", "scan-duffing", "",
         cmd_scan_duffing},
        {"melnikov", "stochastic-layer half-width from the Melnikov-Arnold integral", "melnikov", "", cmd_melnikov},
        {"histogram", "energy distributions: harmonic run, invariant theory, noise run", "histogram", "histogram.mode",
         cmd_histogram},
        {"diffusion", "energy diffusion coefficient D(E)", "diffusion", "diffusion.mode", cmd_diffusion},
        {"langevin", "noise-driven trajectory or ensemble energy statistics", "langevin", "langevin.mode", cmd_langevin},
        {"fp", "Fokker-Planck evolution on the branched energy axis", "fp", "fp.init", cmd_fp},
    };
    return c;
}

bool config_error(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::NonPositiveOverlap:
    case ErrorCode::NoSelfTrapping:
    case ErrorCode::EnergyOutOfRange:
    case ErrorCode::BadInitialRegion:
    case ErrorCode::CutoffAboveNyquist:
    case ErrorCode::CFLViolation:
        return true;
    default:
        return false;
    }
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Two-mode self-trapping model: thresholds, stochastic layer, energy diffusion", "twomode"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version());

    struct Flags {
        std::string config;
        std::string params = "paper";
        std::vector<std::string> sets;
        std::string out;
        std::optional<long long> seed;
        std::optional<long long> workers;
        std::optional<double> dt;
        std::optional<double> tmax;
        std::optional<std::string> mode;
        std::optional<std::string> energies;
    } f;

    std::map<std::string, CLI::App*> subs;
    for (const auto& info : commands()) {
        CLI::App* s = app.add_subcommand(info.name, info.help);
        s->add_option("--config", f.config, "configuration file ([section] / key = value)");
        s->add_option("--params", f.params, "model constants: 'paper' or a file with a [model] section");
        s->add_option("--set", f.sets, "override one key: section.key=value (repeatable)");
        s->add_option("--out", f.out, "output file (default: standard output)");
        s->add_option("--seed", f.seed, "run.seed");
        s->add_option("--workers", f.workers, "run.workers");
        if (std::string(info.name) != "landmarks" && std::string(info.name) != "diffusion") {
            s->add_option("--dt", f.dt, "integrator step of this command");
        }
        if (std::string(info.name) == "scan-threshold" || std::string(info.name) == "scan-duffing"
            || std::string(info.name) == "histogram" || std::string(info.name) == "langevin"
            || std::string(info.name) == "fp") {
            s->add_option("--tmax", f.tmax, "time horizon of this command");
        }
        if (std::string(info.mode_key).size()) {
            const std::string n = info.name;
            s->add_option(n == "scan-threshold" ? "--system" : n == "fp" ? "--init" : "--mode", f.mode, info.mode_key);
        }
        if (std::string(info.name) == "portrait") {
            s->add_option("--energies", f.energies, "comma-separated energies");
        }
        subs[info.name] = s;
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << version() << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        // Subcommand help comes through as CallForHelp as well.
        if (e.get_exit_code() == 0) {
            for (const auto& [name, s] : subs) {
                if (s->parsed()) {
                    out << s->help();
                    return kExitOk;
                }
            }
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    const CommandInfo* info = nullptr;
    for (const auto& c : commands()) {
        if (subs[c.name]->parsed()) {
            info = &c;
        }
    }
    Context ctx;
    ctx.err = &err;
    ctx.command = info->name;
    ModelParams params = ModelParams::paper_standard();
    Table table(17);
    try {
        if (!f.config.empty()) {
            ctx.cfg.load_file(f.config);
        }
        if (f.params != "paper") {
            ctx.cfg.load_file(f.params, true);
        }
        for (const auto& s : f.sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("--set expects section.key=value, got '" + s + "'");
            }
            ctx.cfg.set(trim(s.substr(0, eq)), s.substr(eq + 1));
        }
        const std::string section = info->section;
        if (f.seed) {
            ctx.cfg.set("run.seed", std::to_string(*f.seed));
        }
        if (f.workers) {
            ctx.cfg.set("run.workers", std::to_string(*f.workers));
        }
        auto set_real = [&](const std::string& key, std::optional<double> v) {
            if (v) {
                Table fmt(17);
                ctx.cfg.set(section + "." + key, fmt.format(*v));
            }
        };
        set_real("dt", f.dt);
        set_real("tmax", f.tmax);
        if (f.mode) {
            ctx.cfg.set(info->mode_key, *f.mode);
        }
        if (f.energies) {
            ctx.cfg.set("portrait.energies", *f.energies);
        }
        const long long prec = ctx.cfg.integer("run.precision");
        require(prec >= 1 && prec <= 17, "run.precision must be in [1, 17]");
        table = Table(static_cast<int>(prec));
        const long long workers = ctx.cfg.integer("run.workers");
        require(workers >= 0, "run.workers must be non-negative");
        ctx.workers = workers == 0 ? default_workers() : static_cast<std::size_t>(workers);
        params = model_from(ctx.cfg);
        info->fn(ctx, params, table);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return config_error(e.code()) ? kExitConfig : kExitNumerical;
    }

    if (f.out.empty()) {
        table.write(out);
    } else {
        std::ofstream file(f.out, std::ios::binary);
        if (!file) {
            err << "error: cannot write '" << f.out << "'\n";
            return kExitFailure;
        }
        table.write(file);
    }
    if (ctx.attempted > 0 && static_cast<double>(ctx.failed) > 0.1 * static_cast<double>(ctx.attempted)) {
        err << "error: " << ctx.failed << " of " << ctx.attempted << " rows failed\n";
        return kExitNumerical;
    }
    return kExitOk;
}

} // namespace twomode::cli
