#include "twomode/engine.hpp"

#include "fftw_lock.hpp"

#include "twomode/error.hpp"
#include "twomode/quadrature.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

namespace twomode {

namespace {

BlochVector axpy(const BlochVector& v, double h, const BlochVector& k) noexcept
{
    return {v.x + h * k.x, v.y + h * k.y, v.z + h * k.z};
}

void renormalize(BlochVector& v) noexcept
{
    const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    v.x /= n;
    v.y /= n;
    v.z /= n;
}

// Refines a section crossing inside one step: finds tau in [0, h] with
// g(step(prev, tau)) = 0 by bisection, given g(prev) < 0 <= g(step(prev, h)).
template <typename Section>
double refine_crossing(const FlowState& prev, double h, const ModelParams& p, const Drive& drive,
                       Section&& g)
{
    double lo = 0.0;
    double hi = h;
    for (int it = 0; it < 100 && std::abs(hi - lo) > 1e-15 * std::max(1.0, std::abs(h)); ++it) {
        const double mid = 0.5 * (lo + hi);
        FlowState s = prev;
        advance(s, mid, p, drive);
        if (g(s) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

std::string Drive::describe() const
{
    std::ostringstream out;
    out.precision(17);
    if (const auto* h = harmonic()) {
        out << "harmonic F=" << h->amplitude << " omega=" << h->omega << " phi=" << h->phi;
    } else if (const auto* n = noise()) {
        out << "noise S0=" << n->s0 << " dt=" << n->dt << " n=" << n->samples.size()
            << " seed=" << n->seed;
        if (n->cutoff) {
            out << " cutoff=" << *n->cutoff;
        }
        out << (n->channel == NoiseChannel::Odd ? " channel=odd" : " channel=even");
    } else {
        out << "none";
    }
    return out.str();
}

FlowState make_flow_state(const PhaseState& s, double t0)
{
    FlowState fs;
    fs.t = t0;
    fs.v = to_bloch(s);
    fs.theta = s.theta;
    return fs;
}

void advance(FlowState& s, double dt, const ModelParams& p, const Drive& drive)
{
    const BlochVector& v = s.v;
    const double t = s.t;
    BlochVector k1, k2, k3, k4;
    if (drive.is_none()) {
        const DriveSample none{};
        k1 = bloch_rhs(v, p, none);
        k2 = bloch_rhs(axpy(v, 0.5 * dt, k1), p, none);
        k3 = bloch_rhs(axpy(v, 0.5 * dt, k2), p, none);
        k4 = bloch_rhs(axpy(v, dt, k3), p, none);
    } else if (drive.is_noise()) {
        const DriveSample held = drive.at(t + 0.5 * dt);
        k1 = bloch_rhs(v, p, held);
        k2 = bloch_rhs(axpy(v, 0.5 * dt, k1), p, held);
        k3 = bloch_rhs(axpy(v, 0.5 * dt, k2), p, held);
        k4 = bloch_rhs(axpy(v, dt, k3), p, held);
    } else {
        const DriveSample mid = drive.at(t + 0.5 * dt);
        k1 = bloch_rhs(v, p, drive.at(t));
        k2 = bloch_rhs(axpy(v, 0.5 * dt, k1), p, mid);
        k3 = bloch_rhs(axpy(v, 0.5 * dt, k2), p, mid);
        k4 = bloch_rhs(axpy(v, dt, k3), p, drive.at(t + dt));
    }
    const double w = dt / 6.0;
    s.v.x += w * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    s.v.y += w * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
    s.v.z += w * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
    renormalize(s.v);
    s.theta = from_bloch(s.v, s.theta).theta;
    s.t = t + dt;
}

Trajectory integrate(const ModelParams& p, const Drive& drive, const PhaseState& state0,
                     double t_end, const IntegratorConfig& cfg)
{
    if (!(cfg.dt > 0.0) || cfg.sample_stride < 1) {
        throw Error(ErrorCode::InvalidArgument, "integrator needs dt > 0 and sample_stride >= 1");
    }
    if (!(std::abs(state0.delta) <= 1.0) || !(t_end >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "invalid initial state or t_end");
    }
    Trajectory traj;
    traj.params = p;
    traj.drive_description = drive.describe();
    if (const auto* n = drive.noise()) {
        traj.seed = n->seed;
    }

    FlowState s = make_flow_state(state0);
    const double e0 = h0_energy(s.v, p);
    auto record = [&](const FlowState& fs) {
        const double e = h0_energy(fs.v, p);
        traj.t.push_back(fs.t);
        traj.delta.push_back(fs.v.z);
        traj.theta.push_back(fs.theta);
        traj.energy.push_back(e);
        traj.max_energy_drift = std::max(traj.max_energy_drift, std::abs(e - e0));
    };
    record(s);

    const auto n_full = static_cast<std::size_t>(std::floor(t_end / cfg.dt * (1.0 + 1e-12)));
    const std::size_t n_steps =
        n_full + ((t_end - static_cast<double>(n_full) * cfg.dt) > 1e-12 * cfg.dt ? 1 : 0);
    traj.t.reserve(n_steps / cfg.sample_stride + 2);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t_i = static_cast<double>(i) * cfg.dt;
        const double h = std::min(cfg.dt, t_end - t_i);
        s.t = t_i;
        advance(s, h, p, drive);
        if ((i + 1) % cfg.sample_stride == 0 || i + 1 == n_steps) {
            record(s);
        }
    }
    return traj;
}

FlowState integrate_until(const ModelParams& p, const Drive& drive, const PhaseState& state0,
                          double t_end, double dt,
                          const std::function<bool(const FlowState&)>& observer)
{
    if (!(dt > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    }
    FlowState s = make_flow_state(state0);
    const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t_i = static_cast<double>(i) * dt;
        s.t = t_i;
        advance(s, std::min(dt, t_end - t_i), p, drive);
        if (!observer(s)) {
            break;
        }
    }
    return s;
}

std::string to_string(Branch b)
{
    switch (b) {
    case Branch::WellLeft: return "WellLeft";
    case Branch::WellRight: return "WellRight";
    case Branch::Upper: return "Upper";
    }
    return "?";
}

namespace {

void check_energy(const ModelParams& p, double energy, Branch branch, const OrbitOptions& opt)
{
    const bool well = branch != Branch::Upper;
    const double lo = well ? p.e_minus() : p.e_sep();
    const double hi = well ? p.e_sep() : p.e_plus();
    if (!(energy > lo && energy < hi)) {
        std::ostringstream msg;
        msg << "E = " << energy << " outside (" << lo << ", " << hi << ") for " << to_string(branch);
        throw Error(ErrorCode::EnergyOutOfRange, msg.str());
    }
    const double exclusion = opt.sep_exclusion * p.energy_span();
    if (std::abs(energy - p.e_sep()) < exclusion) {
        std::ostringstream msg;
        msg << "E = " << energy << " within " << exclusion << " of the separatrix";
        throw Error(ErrorCode::PeriodNotConverged, msg.str());
    }
}

// Return time to the start section. Wells: Theta = center crossed upward
// (y cos(center/2) from - to +). Upper: azimuth advanced by 2 pi.
double detect_period(const ModelParams& p, const PhaseState& start, Branch branch,
                     const OrbitOptions& opt)
{
    const Drive none;
    FlowState s = make_flow_state(start);
    const double phi0 = 0.5 * start.theta;
    const double sign = branch == Branch::WellRight ? -1.0 : 1.0;
    auto section = [&](const FlowState& fs) {
        if (branch == Branch::Upper) {
            return 0.5 * fs.theta - phi0 - kTwoPi;
        }
        return sign * fs.v.y;
    };
    bool armed = branch == Branch::Upper;
    double g_prev = section(s);
    const auto max_steps = static_cast<std::size_t>(opt.max_period / opt.dt) + 1;
    for (std::size_t i = 0; i < max_steps; ++i) {
        const FlowState prev = s;
        advance(s, opt.dt, p, none);
        const double g = section(s);
        if (!armed && g < 0.0) {
            armed = true;
        }
        if (armed && g_prev < 0.0 && g >= 0.0) {
            return prev.t + refine_crossing(prev, opt.dt, p, none, section);
        }
        g_prev = g;
    }
    throw Error(ErrorCode::PeriodNotConverged, "no return to the section within max_period");
}

double root_bisect(double lo, double hi, const std::function<double(double)>& f)
{
    double flo = f(lo);
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

PhaseState orbit_start(const ModelParams& p, double energy, Branch branch)
{
    if (branch == Branch::Upper) {
        auto f = [&](double d) { return h0_energy(PhaseState{d, kPi}, p) - energy; };
        if (!(f(-1.0) < 0.0 && f(1.0) > 0.0)) {
            throw Error(ErrorCode::EnergyOutOfRange, "energy not bracketed on Theta = pi");
        }
        return {root_bisect(-1.0, 1.0, f), kPi};
    }
    const double k = p.a() + p.b();
    const double disc = std::max(0.0, p.omega() * p.omega() + 4.0 * k * (p.b() + energy));
    const double d_hi = (-p.omega() + std::sqrt(disc)) / (2.0 * k);
    return {d_hi, branch == Branch::WellLeft ? 0.0 : kTwoPi};
}

double libration_frequency(const ModelParams& p, double energy, Branch branch,
                           const OrbitOptions& opt)
{
    check_energy(p, energy, branch, opt);
    const PhaseState start = orbit_start(p, energy, branch);
    return kTwoPi / detect_period(p, start, branch, opt);
}

double orbit_period(const ModelParams& p, double energy, Branch branch, const OrbitOptions& opt)
{
    const double band = opt.sep_exclusion * p.energy_span() * 1.01;
    const double d = std::abs(energy - p.e_sep());
    if (d >= band) {
        return kTwoPi / libration_frequency(p, energy, branch, opt);
    }
    const double s = branch == Branch::Upper ? 1.0 : -1.0;
    // Anchors sit outside the exclusion band (band is 1.01 times it).
    const double t1 = kTwoPi / libration_frequency(p, p.e_sep() + s * band, branch, opt);
    const double t2 = kTwoPi / libration_frequency(p, p.e_sep() + s * 2.0 * band, branch, opt);
    const double slope = (t1 - t2) / std::log(0.5);
    return t1 + slope * std::log(std::max(d, 1e-300) / band);
}

double inverse_frequency_integral(const ModelParams& p, double a, double b, Branch branch,
                                  const OrbitOptions& opt)
{
    if (!(b > a)) {
        return 0.0;
    }
    auto f = [&](double e) { return orbit_period(p, e, branch, opt) / kTwoPi; };
    // Panels of at most 2% of the energy span; the graded one takes the
    // panel touching Esep.
    const double panel = 0.02 * p.energy_span();
    const bool upper = branch == Branch::Upper;
    double sum = 0.0;
    if (upper ? a == p.e_sep() : b == p.e_sep()) {
        const double len = std::min(b - a, panel);
        sum += upper ? quad::gauss_singular_end(f, a, a + len, true, 2)
                     : quad::gauss_singular_end(f, b - len, b, false, 2);
        (upper ? a : b) += upper ? len : -len;
    }
    if (b > a) {
        const auto pieces = static_cast<std::size_t>(std::ceil((b - a) / panel));
        sum += quad::composite_gauss(f, a, b, std::max<std::size_t>(pieces, 1));
    }
    return sum;
}

PeriodicOrbit periodic_orbit(const ModelParams& p, double energy, Branch branch,
                             const OrbitOptions& opt)
{
    check_energy(p, energy, branch, opt);
    const PhaseState start = orbit_start(p, energy, branch);
    PeriodicOrbit orbit;
    orbit.energy = energy;
    orbit.branch = branch;
    orbit.period = detect_period(p, start, branch, opt);
    orbit.omega_e = kTwoPi / orbit.period;

    std::size_t n = std::max<std::size_t>(opt.n_uniform, 8);
    while (orbit.period / static_cast<double>(n) > opt.max_sample_dt) {
        n *= 2;
    }
    const double h = orbit.period / static_cast<double>(n);
    const Drive none;
    FlowState s = make_flow_state(start);
    orbit.states.reserve(n);
    orbit.points.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        orbit.states.push_back(s.phase());
        orbit.points.push_back(s.v);
        s.t = static_cast<double>(j) * h;
        advance(s, h, p, none);
    }
    return orbit;
}

double FourierSeries::synthesize(double t) const
{
    if (coeffs.empty()) {
        return 0.0;
    }
    double v = coeffs[0].real();
    for (std::size_t k = 1; k < coeffs.size(); ++k) {
        const double a = -static_cast<double>(k) * omega * t;
        v += 2.0 * (coeffs[k] * std::complex<double>(std::cos(a), std::sin(a))).real();
    }
    return v;
}

FourierSeries orbit_fourier(const PeriodicOrbit& orbit, const Observable& observable,
                            std::size_t k_max, double alias_fraction)
{
    const std::size_t n = orbit.states.size();
    if (n < 2 || k_max > n / 2) {
        throw Error(ErrorCode::InvalidArgument, "k_max must not exceed half the sample count");
    }
    std::vector<double> in(n);
    for (std::size_t j = 0; j < n; ++j) {
        in[j] = observable(orbit.states[j]);
        if (!std::isfinite(in[j])) {
            throw Error(ErrorCode::InvalidArgument, "observable not finite on the orbit");
        }
    }
    std::vector<fftw_complex> out(n / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }

    FourierSeries series;
    series.omega = orbit.omega_e;
    series.coeffs.resize(k_max + 1);
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (std::size_t k = 0; k <= k_max; ++k) {
        // FFTW uses exp(-i...); V(t) = sum V_k exp(-i k Omega t) needs the conjugate.
        series.coeffs[k] = std::complex<double>(out[k][0], -out[k][1]) * inv_n;
        total += std::norm(series.coeffs[k]);
    }
    series.alias_warning = k_max > 0 && std::norm(series.coeffs[k_max]) > alias_fraction * total;
    return series;
}

SeparatrixOrbit separatrix_orbit(const ModelParams& p, Loop loop, double eps_saddle, double dt,
                                 double max_time)
{
    if (!(eps_saddle > 0.0) || !(dt > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "eps_saddle and dt must be positive");
    }
    const Landmarks lm = stationary_points(p);
    const PhaseState vertex{lm.inner_vertex_delta, loop == Loop::Left ? 0.0 : kTwoPi};
    const Drive none;
    const double target = -1.0 + eps_saddle;
    auto below = [&](const FlowState& fs) { return fs.v.z - target; };

    // One half-branch in the direction of sign(h); stops at Delta = target.
    auto run = [&](double h) {
        std::vector<FlowState> out;
        FlowState s = make_flow_state(vertex);
        out.push_back(s);
        const auto max_steps = static_cast<std::size_t>(max_time / dt) + 1;
        for (std::size_t i = 0; i < max_steps; ++i) {
            const FlowState prev = s;
            advance(s, h, p, none);
            if (s.v.z <= target) {
                // below() goes from + to -, so refine on its negation.
                const double tau = refine_crossing(prev, h, p, none,
                                                   [&](const FlowState& fs) { return -below(fs); });
                FlowState end = prev;
                advance(end, tau, p, none);
                out.push_back(end);
                return out;
            }
            out.push_back(s);
        }
        throw Error(ErrorCode::PeriodNotConverged, "separatrix orbit did not reach the saddle");
    };

    const std::vector<FlowState> fwd = run(dt);
    const std::vector<FlowState> bwd = run(-dt);

    SeparatrixOrbit orbit;
    orbit.eps_saddle = eps_saddle;
    const std::size_t total = fwd.size() + bwd.size() - 1;
    orbit.t.reserve(total);
    orbit.states.reserve(total);
    orbit.points.reserve(total);
    for (auto it = bwd.rbegin(); it != bwd.rend(); ++it) {
        orbit.t.push_back(it->t);
        orbit.states.push_back(it->phase());
        orbit.points.push_back(it->v);
    }
    for (std::size_t i = 1; i < fwd.size(); ++i) {
        orbit.t.push_back(fwd[i].t);
        orbit.states.push_back(fwd[i].phase());
        orbit.points.push_back(fwd[i].v);
    }
    return orbit;
}

} // namespace twomode
