#include "latchsim/waveform.hpp"

#include <algorithm>

namespace latchsim {

namespace {

double pulse_value(const PulseWave& p, double t) {
    if (t < p.t_delay) return p.v1;
    const double phase = std::fmod(t - p.t_delay, p.period);
    if (phase < p.t_rise) return p.v1 + (p.v2 - p.v1) * phase / p.t_rise;
    if (phase < p.t_rise + p.t_width) return p.v2;
    if (phase < p.t_rise + p.t_width + p.t_fall)
        return p.v2 + (p.v1 - p.v2) * (phase - p.t_rise - p.t_width) / p.t_fall;
    return p.v1;
}

double pwl_value(const PwlWave& w, double t) {
    const auto& pts = w.points;
    if (pts.empty()) return 0.0;
    if (t <= pts.front().first) return pts.front().second;
    if (t >= pts.back().first) return pts.back().second;
    auto it = std::upper_bound(pts.begin(), pts.end(), t,
                               [](double tv, const auto& pt) { return tv < pt.first; });
    const auto& [t1, v1] = *(it - 1);
    const auto& [t2, v2] = *it;
    return v1 + (v2 - v1) * (t - t1) / (t2 - t1);
}

double double_exp_value(const DoubleExpWave& w, double t) {
    if (t < w.t_start) return 0.0;
    const double dt = t - w.t_start;
    const double shape = std::exp(-dt / w.tau1) - std::exp(-dt / w.tau2);
    return w.sign * w.q_inj / (w.tau1 - w.tau2) * shape;
}

}  // namespace

double waveform_value(const Waveform& w, double t) {
    return std::visit(
        [t](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DcWave>) return v.v;
            else if constexpr (std::is_same_v<T, PulseWave>) return pulse_value(v, t);
            else if constexpr (std::is_same_v<T, PwlWave>) return pwl_value(v, t);
            else return double_exp_value(v, t);
        },
        w);
}

void append_breakpoints(const Waveform& w, double t_stop, std::vector<double>& out) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, PulseWave>) {
                for (double base = v.t_delay; base <= t_stop; base += v.period) {
                    const double corners[4] = {base, base + v.t_rise, base + v.t_rise + v.t_width,
                                               base + v.t_rise + v.t_width + v.t_fall};
                    for (double c : corners)
                        if (c <= t_stop) out.push_back(c);
                }
            } else if constexpr (std::is_same_v<T, PwlWave>) {
                for (const auto& [t, val] : v.points)
                    if (t >= 0.0 && t <= t_stop) out.push_back(t);
            } else if constexpr (std::is_same_v<T, DoubleExpWave>) {
                if (v.t_start <= t_stop) out.push_back(v.t_start);
                const double end = v.t_start + 20.0 * v.tau2;
                if (end <= t_stop) out.push_back(end);
            }
        },
        w);
}

}  // namespace latchsim
