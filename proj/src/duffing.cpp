#include "twomode/duffing.hpp"

#include "twomode/error.hpp"
#include "twomode/model.hpp"
#include "twomode/parallel.hpp"
#include "twomode/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace twomode {

double duffing_energy(const DuffingState& s) noexcept
{
    const double x2 = s.x * s.x;
    return 0.5 * s.v * s.v + 0.5 * x2 - 0.25 * x2 * x2;
}

DuffingTrajectory duffing_simulate(double amplitude, double omega, double t_end,
                                   const DuffingOptions& opt)
{
    if (!(omega > 0.0) || !(opt.dt > 0.0) || !(t_end >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "need omega > 0, dt > 0, t_end >= 0");
    }
    auto accel = [&](double t, double x) { return amplitude * std::sin(omega * t) - x + x * x * x; };
    DuffingTrajectory traj;
    DuffingState s = opt.start;
    const std::size_t stride = std::max<std::size_t>(opt.sample_stride, 1);
    if (opt.record) {
        traj.t.push_back(0.0);
        traj.states.push_back(s);
    }
    const auto n = static_cast<std::size_t>(std::ceil(t_end / opt.dt - 1e-9));
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * opt.dt;
        const double h = std::min(opt.dt, t_end - t);
        const double k1x = s.v;
        const double k1v = accel(t, s.x);
        const double k2x = s.v + 0.5 * h * k1v;
        const double k2v = accel(t + 0.5 * h, s.x + 0.5 * h * k1x);
        const double k3x = s.v + 0.5 * h * k2v;
        const double k3v = accel(t + 0.5 * h, s.x + 0.5 * h * k2x);
        const double k4x = s.v + h * k3v;
        const double k4v = accel(t + h, s.x + h * k3x);
        const DuffingState prev = s;
        s.x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        s.v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        const bool last = i + 1 == n;
        if (!traj.escape_time && std::abs(s.x) >= 1.0) {
            const double a = std::abs(prev.x);
            const double b = std::abs(s.x);
            const double frac = b > a ? (1.0 - a) / (b - a) : 1.0;
            traj.escape_time = t + std::clamp(frac, 0.0, 1.0) * h;
            if (!opt.run_past_escape) {
                if (opt.record) {
                    traj.t.push_back(t + h);
                    traj.states.push_back(s);
                }
                break;
            }
        }
        if (opt.record && ((i + 1) % stride == 0 || last)) {
            traj.t.push_back(t + h);
            traj.states.push_back(s);
        }
    }
    return traj;
}

double duffing_linear_threshold(double delta) noexcept
{
    return std::abs(delta);
}

double SlowFlowHistory::max_amp() const
{
    double m = 0.0;
    for (const auto& s : states) {
        m = std::max(m, s.amp);
    }
    return m;
}

namespace {

double amp_coefficient(SlowFlowVariant v)
{
    switch (v) {
    case SlowFlowVariant::Paper: return 3.0 / 32.0;
    case SlowFlowVariant::Linear: return 0.0;
    case SlowFlowVariant::StandardAveraging: return 3.0 / 16.0;
    }
    return 0.0;
}

} // namespace

SlowFlowHistory slow_flow_integrate(double amplitude, double delta, double t_end,
                                    const SlowFlowConfig& cfg)
{
    if (!(cfg.dt > 0.0) || !(t_end >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "need dt > 0 and t_end >= 0");
    }
    const double c = amp_coefficient(cfg.variant);
    auto rhs = [&](const SlowFlowState& s) {
        return SlowFlowState{-0.5 * amplitude * std::cos(s.phi), -0.5 * delta - c * s.amp * s.amp};
    };
    auto step = [](const SlowFlowState& s, double h, const SlowFlowState& k) {
        return SlowFlowState{s.amp + h * k.amp, s.phi + h * k.phi};
    };
    SlowFlowHistory hist;
    SlowFlowState s{0.0, kPi};
    hist.t.push_back(0.0);
    hist.states.push_back(s);
    const double lo = 0.5 * kPi - kPi;
    const double hi = 0.5 * kPi + kPi;
    const auto n = static_cast<std::size_t>(std::ceil(t_end / cfg.dt - 1e-9));
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * cfg.dt;
        const double h = std::min(cfg.dt, t_end - t);
        const SlowFlowState k1 = rhs(s);
        const SlowFlowState k2 = rhs(step(s, 0.5 * h, k1));
        const SlowFlowState k3 = rhs(step(s, 0.5 * h, k2));
        const SlowFlowState k4 = rhs(step(s, h, k3));
        s.amp += h / 6.0 * (k1.amp + 2.0 * k2.amp + 2.0 * k3.amp + k4.amp);
        s.phi += h / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
        hist.t.push_back(t + h);
        hist.states.push_back(s);
        if (cfg.stop_amp > 0.0 && s.amp >= cfg.stop_amp) {
            break;
        }
        if (cfg.stop_on_window && (s.phi < lo || s.phi > hi)) {
            break;
        }
    }
    return hist;
}

namespace {

// Bisection for the smallest F with reaches(F) true; the upper end is
// doubled while it fails.
double bisect_threshold(const std::function<bool(double)>& reaches, double lo, double hi,
                        int iters, int max_doublings, const char* what)
{
    if (!(lo >= 0.0 && lo < hi)) {
        throw Error(ErrorCode::InvalidArgument, "need 0 <= F_lo < F_hi");
    }
    for (int k = 0; !reaches(hi); ++k) {
        if (k >= max_doublings) {
            std::ostringstream msg;
            msg << what << ": no crossing up to F = " << hi;
            throw Error(ErrorCode::BracketFailed, msg.str());
        }
        lo = hi;
        hi *= 2.0;
    }
    if (lo > 0.0 && reaches(lo)) {
        lo = 0.0;
    }
    for (int it = 0; it < iters; ++it) {
        const double mid = 0.5 * (lo + hi);
        (reaches(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

double slow_flow_threshold(double delta, const SlowFlowThresholdConfig& cfg)
{
    SlowFlowConfig flow = cfg.flow;
    flow.stop_amp = 1.0;
    auto reaches = [&](double f) {
        return slow_flow_integrate(f, delta, flow.t_max, flow).max_amp() >= 1.0;
    };
    return bisect_threshold(reaches, cfg.f_lo, cfg.f_hi, cfg.bisection_iters, cfg.max_doublings,
                            "slow flow");
}

double resonance_integral(std::size_t panels)
{
    // theta = u^3: theta^{-2/3} cos(theta) d theta = 3 cos(u^3) du.
    const double u_max = std::cbrt(0.5 * kPi);
    return quad::composite_gauss([](double u) { return 3.0 * std::cos(u * u * u); }, 0.0, u_max,
                                 std::max<std::size_t>(panels, 1));
}

double resonance_threshold_analytic()
{
    const double i = resonance_integral();
    return 27.0 / 16.0 / (i * i * i);
}

double duffing_threshold_numeric(double omega, const DuffingThresholdConfig& cfg)
{
    if (!(omega > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "drive frequency must be positive");
    }
    const double t_max = cfg.horizon_periods * kTwoPi / omega;
    DuffingOptions opt;
    opt.dt = cfg.dt;
    opt.record = false;
    auto reaches = [&](double f) {
        return duffing_simulate(cfg.sign * f, omega, t_max, opt).escape_time.has_value();
    };
    return bisect_threshold(reaches, cfg.f_lo, cfg.f_hi, cfg.bisection_iters, cfg.max_doublings,
                            "duffing");
}

std::vector<DuffingScanRow> duffing_threshold_curve(std::span<const double> omegas,
                                                    const DuffingThresholdConfig& numeric,
                                                    const SlowFlowThresholdConfig& slow,
                                                    std::size_t workers, bool with_numeric)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto guarded = [&](auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            if (e.code() != ErrorCode::BracketFailed) {
                throw;
            }
            return nan;
        }
    };
    std::vector<DuffingScanRow> rows(omegas.size());
    parallel_for(omegas.size(), workers, [&](std::size_t i) {
        const double w = omegas[i];
        DuffingScanRow& r = rows[i];
        r.omega = w;
        r.f_linear = duffing_linear_threshold(w - 1.0);
        r.f_slow_flow = guarded([&] { return slow_flow_threshold(w - 1.0, slow); });
        r.f_numeric = with_numeric ? guarded([&] { return duffing_threshold_numeric(w, numeric); }) : nan;
    });
    std::sort(rows.begin(), rows.end(),
              [](const DuffingScanRow& a, const DuffingScanRow& b) { return a.omega < b.omega; });
    return rows;
}

} // namespace twomode
