#pragma once

// Driven Duffing oscillator x'' + x - x^3 = F sin(omega t) from rest, its
// slow amplitude-phase approximation and the analytic threshold at exact
// resonance.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace twomode {

struct DuffingState {
    double x = 0.0;
    double v = 0.0;
};

/// E_d = v^2/2 + x^2/2 - x^4/4; the saddles sit at x = +-1 with E_d = 1/4.
double duffing_energy(const DuffingState& s) noexcept;

struct DuffingTrajectory {
    std::vector<double> t;
    std::vector<DuffingState> states;
    /// First time with |x| >= 1 (linearly interpolated within the step).
    std::optional<double> escape_time;
};

struct DuffingOptions {
    double dt = 1e-3;
    std::size_t sample_stride = 1;
    /// Keep only the escape time (no samples).
    bool record = true;
    /// Continue past the escape instead of stopping there.
    bool run_past_escape = false;
    /// Start state; the model is started from rest.
    DuffingState start{};
};

DuffingTrajectory duffing_simulate(double amplitude, double omega, double t_end,
                                   const DuffingOptions& opt = {});

/// Crude linear estimate F_c = |delta|.
double duffing_linear_threshold(double delta) noexcept;

enum class SlowFlowVariant {
    /// A' = -(F/2) cos phi, phi' = -delta/2 - (3/32) A^2.
    Paper,
    /// Same without the A^2 term.
    Linear,
    /// Coefficient 3/16 from first-order averaging with Omega(A) = 1 - 3A^2/8.
    StandardAveraging,
};

struct SlowFlowState {
    double amp = 0.0;
    double phi = 0.0;
};

struct SlowFlowConfig {
    double dt = 1e-2;
    double t_max = 1e4;
    SlowFlowVariant variant = SlowFlowVariant::Paper;
    /// Stop once phi leaves [pi/2 - pi, pi/2 + pi].
    bool stop_on_window = false;
    /// Stop once amp reaches this value (0 disables).
    double stop_amp = 0.0;
};

struct SlowFlowHistory {
    std::vector<double> t;
    std::vector<SlowFlowState> states;

    double max_amp() const;
};

/// Integrates from A(0) = 0, phi(0) = pi.
SlowFlowHistory slow_flow_integrate(double amplitude, double delta, double t_end,
                                    const SlowFlowConfig& cfg = {});

struct SlowFlowThresholdConfig {
    SlowFlowConfig flow{.stop_on_window = true, .stop_amp = 1.0};
    double f_lo = 0.0;
    double f_hi = 0.4;
    int bisection_iters = 30;
    int max_doublings = 8;
};

/// Smallest F for which max A reaches 1 before phi leaves the window.
double slow_flow_threshold(double delta, const SlowFlowThresholdConfig& cfg = {});

/// (27/16) [int_0^{pi/2} theta^{-2/3} cos theta d theta]^{-3}.
double resonance_threshold_analytic();

/// The integral in resonance_threshold_analytic via theta = u^3 and
/// composite Gauss-Legendre with `panels` panels.
double resonance_integral(std::size_t panels = 16);

struct DuffingThresholdConfig {
    /// Horizon in drive periods (400 by default).
    double horizon_periods = 400.0;
    double dt = 1e-3;
    double f_lo = 0.0;
    double f_hi = 0.4;
    int bisection_iters = 20;
    int max_doublings = 8;
    /// Drive sign; -1 runs -F sin(omega t).
    double sign = 1.0;
};

/// Bisection on escape within the horizon.
double duffing_threshold_numeric(double omega, const DuffingThresholdConfig& cfg = {});

struct DuffingScanRow {
    double omega = 0.0;
    /// NaN when the bracket failed.
    double f_numeric = 0.0;
    double f_slow_flow = 0.0;
    double f_linear = 0.0;
};

/// All three thresholds per omega (parallel), sorted by omega.
std::vector<DuffingScanRow> duffing_threshold_curve(std::span<const double> omegas,
                                                    const DuffingThresholdConfig& numeric,
                                                    const SlowFlowThresholdConfig& slow,
                                                    std::size_t workers, bool with_numeric = true);

} // namespace twomode
