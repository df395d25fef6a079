#include "latchsim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "latchsim/fault.hpp"
#include "latchsim/parallel.hpp"
#include "report.hpp"

namespace latchsim {

namespace {

const ClockSpec kClock{};

double interp(const std::vector<double>& t, const std::vector<double>& y, std::size_t k,
              double tx) {
    const double w = (tx - t[k - 1]) / (t[k] - t[k - 1]);
    return y[k - 1] * (1.0 - w) + y[k] * w;
}

/// Trapezoidal integral of the (optionally rectified) source current over
/// [t0, t1]; partial end segments are linearly interpolated.
double integrate_current(const Trace& trace, const std::string& source, double t0, double t1,
                         bool rectify) {
    const int si = trace.vsource_index(source);
    if (si < 0) throw SimError("source '" + source + "' not in trace");
    const auto& times = trace.times;
    const auto& i = trace.supply_currents[static_cast<std::size_t>(si)];
    if (t0 < times.front() - 1e-18 || t1 > times.back() + 1e-18 || t1 <= t0)
        throw SimError("integration window outside trace");

    double acc = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double a = std::max(times[k - 1], t0);
        const double b = std::min(times[k], t1);
        if (b <= a) continue;
        double ia = a == times[k - 1] ? i[k - 1] : interp(times, i, k, a);
        double ib = b == times[k] ? i[k] : interp(times, i, k, b);
        if (rectify) {
            ia = std::abs(ia);
            ib = std::abs(ib);
        }
        acc += 0.5 * (ia + ib) * (b - a);
    }
    return acc;
}

/// First 50%-crossing instant of the signal at or after t_from.
double crossing_at(const Trace& trace, const std::string& signal, double t_from, double half) {
    const int idx = trace.node_index(signal);
    if (idx < 0) throw SimError("signal '" + signal + "' not in trace");
    const auto& times = trace.times;
    const auto& v = trace.voltages[static_cast<std::size_t>(idx)];
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (times[k] < t_from) continue;
        const double a = v[k - 1] - half;
        const double b = v[k] - half;
        if (a == 0.0 && times[k - 1] >= t_from) return times[k - 1];
        if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
            const double tc = times[k - 1] + (times[k] - times[k - 1]) * a / (a - b);
            if (tc >= t_from) return tc;
        }
    }
    throw SimError("no 50% crossing of '" + signal + "' found after t = " +
                   std::to_string(t_from));
}

int read_logic(const Trace& trace, const std::string& node, double t, double vdd) {
    return trace.value_at(node, t) >= vdd / 2 ? 1 : 0;
}

}  // namespace

double measure_power(CellKind latch, const SimConfig& config, const Sizing& sizing) {
    const std::vector<int> pattern = {0, 0, 1, 1, 0, 0, 1, 1, 0, 0};
    Netlist bench = canonical_testbench(latch, pattern, 10, sizing, config.env.vdd, kClock);
    SimConfig cfg = config;
    cfg.t_stop = 10.0 * kClock.period;
    const Trace trace = transient(bench, cfg);
    const double t0 = 2.0 * kClock.period;
    const double t1 = 10.0 * kClock.period;
    const double charge = integrate_current(trace, "vvdd", t0, t1, false);
    return config.env.vdd * charge / (t1 - t0);
}

double measure_delay(const Trace& trace, const std::string& from_signal, double from_edge_t,
                     const std::string& to_signal, double vdd) {
    const double half = vdd / 2;
    const double t_from = crossing_at(trace, from_signal, from_edge_t, half);
    const double t_to = crossing_at(trace, to_signal, t_from, half);
    return t_to - t_from;
}

LatchDelays measure_latch_delays(CellKind latch, const SimConfig& config, const Sizing& sizing) {
    const double vdd = config.env.vdd;
    LatchDelays out{};

    {  // data-to-output, transparent mode, both edge directions
        Netlist bench = canonical_testbench(latch, {0, 1, 0}, 3, sizing, vdd, kClock);
        SimConfig cfg = config;
        cfg.t_stop = 1.6e-9;
        const Trace trace = transient(bench, cfg);
        const double up = measure_delay(trace, "d", kClock.rise_at(1) + 100e-12, "q", vdd);
        const double dn = measure_delay(trace, "d", kClock.rise_at(2) + 100e-12, "q", vdd);
        out.t_dq = std::max(up, dn);
    }

    {  // clock-to-output: data set mid-hold, opposite to the held value
        Cell cell = build_cell(latch, sizing);
        Netlist bench = cell.net;
        bench.name = std::string(cell_kind_name(latch)) + "_tcq";
        bench.add(VSource{"vvdd", "vdd", "0", DcWave{vdd}});
        PulseWave clk{0.0, vdd, kClock.first_rise, kClock.edge, kClock.edge,
                      kClock.period / 2 - kClock.edge, kClock.period};
        bench.add(VSource{"vclk", "clk", "0", clk});
        if (cell.net.has_node("clkb")) {
            PulseWave clkb{vdd, 0.0, kClock.first_rise, kClock.edge, kClock.edge,
                           kClock.period / 2 - kClock.edge, kClock.period};
            bench.add(VSource{"vclkb", "clkb", "0", clkb});
        }
        PwlWave d;
        d.points = {{0.0, 0.0}, {600e-12, 0.0}, {605e-12, vdd}, {1100e-12, vdd}, {1105e-12, 0.0}};
        bench.add(VSource{"vd", "d", "0", d});

        SimConfig cfg = config;
        cfg.t_stop = 1.45e-9;
        const Trace trace = transient(bench, cfg);
        const double up = measure_delay(trace, "clk", kClock.rise_at(1), "q", vdd);
        const double dn = measure_delay(trace, "clk", kClock.rise_at(2), "q", vdd);
        out.t_cq = std::max(up, dn);
    }
    return out;
}

bool setup_hold_probe(CellKind latch, const SimConfig& config, int target, double delta,
                      bool is_setup, const Sizing& sizing) {
    const double vdd = config.env.vdd;
    // Latching edge: the 50% point of the clock fall closing cycle 1.
    const double edge_cross = kClock.fall_at(1) + kClock.edge / 2;
    const double d_edge = 5e-12;
    const double t_hi = target ? vdd : 0.0;
    const double t_lo = target ? 0.0 : vdd;

    PwlWave d;
    double t_s;  // data edge start
    if (is_setup) {
        t_s = edge_cross - delta - d_edge / 2;
        d.points = {{0.0, t_lo}, {t_s, t_lo}, {t_s + d_edge, t_hi}};
    } else {
        t_s = edge_cross + delta - d_edge / 2;
        d.points = {{0.0, t_hi}, {t_s, t_hi}, {t_s + d_edge, t_lo}};
    }
    if (t_s <= 0.0) throw SimError("setup/hold probe outside simulation window");

    Cell cell = build_cell(latch, sizing);
    Netlist bench = cell.net;
    bench.name = std::string(cell_kind_name(latch)) + "_su";
    bench.add(VSource{"vvdd", "vdd", "0", DcWave{vdd}});
    PulseWave clk{0.0, vdd, kClock.first_rise, kClock.edge, kClock.edge,
                  kClock.period / 2 - kClock.edge, kClock.period};
    bench.add(VSource{"vclk", "clk", "0", clk});
    if (cell.net.has_node("clkb")) {
        PulseWave clkb{vdd, 0.0, kClock.first_rise, kClock.edge, kClock.edge,
                       kClock.period / 2 - kClock.edge, kClock.period};
        bench.add(VSource{"vclkb", "clkb", "0", clkb});
    }
    bench.add(VSource{"vd", "d", "0", d});

    SimConfig cfg = config;
    const double readout = kClock.rise_at(2) - 5e-12;  // end of the following hold
    cfg.t_stop = readout + 2e-12;
    const Trace trace = transient(bench, cfg);
    return read_logic(trace, "q", readout, vdd) == target;
}

namespace {

std::optional<double> bisect_margin(CellKind latch, const SimConfig& config, bool is_setup,
                                    const Sizing& sizing) {
    constexpr double kResolution = 0.05e-12;
    const double lo0 = -50e-12;
    const double hi0 = is_setup ? 250e-12 : 50e-12;

    std::optional<double> worst;
    for (int target : {1, 0}) {
        if (!setup_hold_probe(latch, config, target, hi0, is_setup, sizing))
            throw SimError("latch fails to capture even with maximum margin");
        if (setup_hold_probe(latch, config, target, lo0, is_setup, sizing))
            continue;  // no failing point inside the window: bounded below
        double lo = lo0, hi = hi0;
        while (hi - lo > kResolution) {
            const double mid = 0.5 * (lo + hi);
            if (setup_hold_probe(latch, config, target, mid, is_setup, sizing))
                hi = mid;
            else
                lo = mid;
        }
        worst = worst ? std::max(*worst, hi) : hi;
    }
    return worst;
}

}  // namespace

std::optional<double> find_setup_time(CellKind latch, const SimConfig& config,
                                      const Sizing& sizing) {
    return bisect_margin(latch, config, true, sizing);
}

std::optional<double> find_hold_time(CellKind latch, const SimConfig& config,
                                     const Sizing& sizing) {
    return bisect_margin(latch, config, false, sizing);
}

double avg_current(const Trace& trace, double t0, double t1, const std::string& vsource) {
    return integrate_current(trace, vsource, t0, t1, true) / (t1 - t0);
}

namespace {

struct QcritBench {
    Netlist bench;
    Trace reference;
    double t_start, r1, r2;
    std::map<std::string, Logic> logic;
    std::vector<std::string> weak_nodes;
};

QcritBench make_qcrit_bench(CellKind latch, int stored, const SimConfig& config,
                            const Sizing& sizing) {
    QcritBench b;
    b.t_start = 0.55e-9;  // second hold phase, one full settle period first
    b.r2 = kClock.hold_end_after(b.t_start) - 5e-12;
    b.r1 = std::min(b.t_start + 150e-12, b.r2);
    b.bench = canonical_testbench(latch, {stored}, 2, sizing, config.env.vdd, kClock);
    SimConfig cfg = config;
    cfg.t_stop = std::max(b.r1, b.r2) + 2e-12;
    b.reference = transient(b.bench, cfg);
    b.logic = latch_hold_state(latch, stored);
    b.weak_nodes = build_cell(latch, sizing).pass_weak_nodes;
    return b;
}

UpsetClass classify_charge(const QcritBench& b, const std::string& node, double q,
                           const SimConfig& config, int stored) {
    if (q <= 0.0) return UpsetClass::Recovered;  // null injection
    Injection inj;
    inj.node = node;
    inj.t_start = b.t_start;
    inj.q_inj = q;
    Netlist net = b.bench;
    net.add(make_injection(inj, b.reference, config.env.vdd));
    SimConfig cfg = config;
    cfg.t_stop = std::max(b.r1, b.r2) + 2e-12;
    const Trace trace = transient(net, cfg);
    const auto expected = expected_state_from_reference(b.reference, b.r2, b.logic,
                                                        config.env.vdd, "q", b.weak_nodes,
                                                        config.env);
    return classify(trace, inj, expected, {b.r1, b.r2}, stored).classification;
}

}  // namespace

UpsetClass qcrit_probe(CellKind latch, const std::string& node, int stored,
                       const SimConfig& config, double q, const Sizing& sizing) {
    const QcritBench bench = make_qcrit_bench(latch, stored, config, sizing);
    return classify_charge(bench, node, q, config, stored);
}

QcritSearch find_qcrit(CellKind latch, const std::string& node, int stored,
                       const SimConfig& config, double q_max, double resolution,
                       const Sizing& sizing) {
    QcritSearch out;
    if (q_max <= 0.0) {
        out.result = ExceedsBound{q_max};
        return out;
    }
    const QcritBench bench = make_qcrit_bench(latch, stored, config, sizing);

    auto upsets = [&](double q) {
        const UpsetClass c = classify_charge(bench, node, q, config, stored);
        if (c == UpsetClass::Unresolved) ++out.unresolved_probes;  // conservative
        return c != UpsetClass::Recovered;
    };

    if (!upsets(q_max)) {
        out.result = ExceedsBound{q_max};
        out.last_recovered = q_max;
        return out;
    }
    double lo = 0.0, hi = q_max;
    while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        if (upsets(mid))
            hi = mid;
        else
            lo = mid;
    }
    out.result = hi;
    out.last_recovered = lo;
    out.first_upset = hi;
    return out;
}

Qcrit find_qcrit_latch(CellKind latch, const SimConfig& config, double q_max, double resolution,
                       const Sizing& sizing, unsigned jobs) {
    const Cell cell = build_cell(latch, sizing);
    struct Case {
        std::string node;
        int stored;
    };
    std::vector<Case> cases;
    for (const auto& n : cell.state_nodes)
        for (int s : {0, 1}) cases.push_back({n, s});

    std::vector<Qcrit> results(cases.size(), ExceedsBound{q_max});
    parallel_for_index(cases.size(), std::max(1u, jobs), [&](std::size_t i) {
        results[i] =
            find_qcrit(latch, cases[i].node, cases[i].stored, config, q_max, resolution, sizing)
                .result;
    });

    std::optional<double> min_finite;
    for (const auto& r : results)
        if (const double* q = std::get_if<double>(&r))
            min_finite = min_finite ? std::min(*min_finite, *q) : *q;
    if (min_finite) return *min_finite;
    return ExceedsBound{q_max};
}

LatchMetrics measure_latch(CellKind latch, const SimConfig& config, bool with_qcrit,
                           double q_max, const Sizing& sizing, unsigned jobs) {
    LatchMetrics m;
    m.transistor_count = cell_transistor_count(latch);
    m.power = measure_power(latch, config, sizing);
    const LatchDelays d = measure_latch_delays(latch, config, sizing);
    m.t_dq = d.t_dq;
    m.t_cq = d.t_cq;
    m.t_avg = 0.5 * (m.t_dq + m.t_cq);
    m.pdp = pdp(m.power, m.t_avg);

    const auto setup = find_setup_time(latch, config, sizing);
    const auto hold = find_hold_time(latch, config, sizing);
    m.t_setup = setup.value_or(-50e-12);
    m.t_setup_is_bound = !setup.has_value();
    m.t_hold = hold.value_or(-50e-12);
    m.t_hold_is_bound = !hold.has_value();

    if (with_qcrit) m.q_crit = find_qcrit_latch(latch, config, q_max, 0.05e-15, sizing, jobs);
    return m;
}

std::string metrics_report_json(CellKind latch, const LatchMetrics& m, const SimConfig& config) {
    Json j;
    j["latch"] = cell_kind_name(latch);
    j["power_uW"] = m.power * 1e6;
    if (m.t_setup_is_bound)
        j["t_setup_ps"] = "<= " + std::to_string(m.t_setup * 1e12);
    else
        j["t_setup_ps"] = m.t_setup * 1e12;
    if (m.t_hold_is_bound)
        j["t_hold_ps"] = "<= " + std::to_string(m.t_hold * 1e12);
    else
        j["t_hold_ps"] = m.t_hold * 1e12;
    j["t_dq_ps"] = m.t_dq * 1e12;
    j["t_cq_ps"] = m.t_cq * 1e12;
    j["t_avg_ps"] = m.t_avg * 1e12;
    j["pdp_e18J"] = m.pdp * 1e18;
    if (m.q_crit) {
        if (const double* q = std::get_if<double>(&*m.q_crit))
            j["q_crit_fC"] = *q * 1e15;
        else
            j["q_crit_fC"] = "> " + std::to_string(std::get<ExceedsBound>(*m.q_crit).bound * 1e15);
    } else {
        j["q_crit_fC"] = nullptr;
    }
    j["n_trans"] = m.transistor_count;
    j["config"] = config_to_json(config);
    return j.dump(2) + "\n";
}

}  // namespace latchsim
