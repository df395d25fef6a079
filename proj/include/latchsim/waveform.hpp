#pragma once

#include <cmath>
#include <utility>
#include <variant>
#include <vector>

namespace latchsim {

// Time-dependent source descriptions. Values are volts for voltage sources
// and amperes for current sources; all quantities are SI.

struct DcWave {
    double v = 0.0;
};

/// Trapezoidal periodic pulse: v1 until t_delay, then rise/width/fall, period
/// repeats. Edge times are part of the simulation grid (see breakpoints).
struct PulseWave {
    double v1 = 0.0;
    double v2 = 0.0;
    double t_delay = 0.0;
    double t_rise = 1e-12;
    double t_fall = 1e-12;
    double t_width = 0.0;
    double period = 1e-9;
};

/// Piecewise-linear waveform, clamped to the first/last point outside the
/// covered range. Points must be strictly increasing in time.
struct PwlWave {
    std::vector<std::pair<double, double>> points;  // (t, v)
};

/// Radiation-strike current pulse
///   i(t) = sign * q_inj/(tau1 - tau2) * (exp(-(t-t0)/tau1) - exp(-(t-t0)/tau2))
/// for t >= t_start, zero before. Its integral over [t_start, inf) is exactly
/// sign * q_inj for any tau1 != tau2.
struct DoubleExpWave {
    double q_inj = 0.0;     // coulombs
    double tau1 = 0.1e-12;  // seconds
    double tau2 = 3e-12;    // seconds
    double t_start = 0.0;
    int sign = +1;
};

using Waveform = std::variant<DcWave, PulseWave, PwlWave, DoubleExpWave>;

double waveform_value(const Waveform& w, double t);

/// Time of the double-exponential peak relative to t_start.
inline double double_exp_peak_time(double tau1, double tau2) {
    return tau1 * tau2 / (tau2 - tau1) * std::log(tau2 / tau1);
}

/// Appends every instant where the waveform is non-smooth (pulse corners,
/// PWL knots, strike onset) within [0, t_stop]. The transient grid must hit
/// these exactly.
void append_breakpoints(const Waveform& w, double t_stop, std::vector<double>& out);

}  // namespace latchsim
