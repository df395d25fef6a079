#include "latchsim/fault.hpp"

#include <algorithm>
#include <cmath>

#include "latchsim/parallel.hpp"
#include "report.hpp"

namespace latchsim {

namespace {

constexpr double kRecoverBandFrac = 0.10;   // of vdd
constexpr double kSettleSlope = 1e9;        // V/s, 1 mV/ps
constexpr double kReadoutDelay = 150e-12;   // first readout after the strike
constexpr double kReadoutMargin = 5e-12;    // before the hold-ending clock edge

double slope_at(const Trace& trace, int node, double t) {
    const auto& times = trace.times;
    const auto& v = trace.voltages[static_cast<std::size_t>(node)];
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = static_cast<std::size_t>(it - times.begin());
    if (k >= times.size()) k = times.size() - 1;
    if (k == 0) k = 1;
    return (v[k] - v[k - 1]) / (times[k] - times[k - 1]);
}

}  // namespace

const char* upset_class_name(UpsetClass c) {
    switch (c) {
        case UpsetClass::Recovered: return "recovered";
        case UpsetClass::Upset: return "upset";
        case UpsetClass::Unresolved: return "unresolved";
    }
    return "?";
}

ISource make_injection(const Injection& inj, const Trace& reference, double vdd) {
    int sign = inj.polarity;
    if (sign == 0) {
        const double v_pre = reference.value_at(inj.node, inj.t_start);
        sign = v_pre >= vdd / 2 ? -1 : +1;  // always attempt to flip
    }
    DoubleExpWave wave{inj.q_inj, inj.tau1, inj.tau2, inj.t_start, sign};
    return ISource{"isnu_" + inj.node, inj.node, "0", wave};
}

ExpectedState expected_state_from_reference(const Trace& reference, double readout_t,
                                            const std::map<std::string, Logic>& logic,
                                            double vdd, const std::string& output,
                                            const std::vector<std::string>& weak_high,
                                            const EnvCondition& env) {
    ExpectedState exp;
    exp.vdd = vdd;
    exp.output = output;
    exp.logic = logic;
    exp.weak_high.insert(weak_high.begin(), weak_high.end());
    exp.pass_restored_level = vdd - mosfet_vth_magnitude<double>(default_nmos(), env);
    for (const auto& [node, lv] : logic) exp.levels[node] = reference.value_at(node, readout_t);
    return exp;
}

namespace {

/// Node-level recovery test. Weak pass-restored nodes holding a one accept
/// the whole span from one n-threshold below the rail up to the rail itself.
bool within_expected(const ExpectedState& exp, const std::string& node, double level,
                     double v, double band) {
    if (std::abs(v - level) <= band) return true;
    const auto logic_it = exp.logic.find(node);
    if (exp.weak_high.count(node) && logic_it != exp.logic.end() &&
        logic_it->second == Logic::High) {
        return v >= exp.pass_restored_level - band &&
               v <= std::max(level, exp.vdd) + band;
    }
    return false;
}

}  // namespace

InjectionOutcome classify(const Trace& trace, const Injection& injection,
                          const ExpectedState& expected,
                          const std::vector<double>& readout_times, int stored) {
    if (readout_times.empty()) throw SimError("classify: no readout times");
    for (double r : readout_times)
        if (r <= injection.t_start || r > trace.times.back() + 1e-18)
            throw SimError("classify: trace does not cover readout window");

    const double band = kRecoverBandFrac * expected.vdd;
    const double last_readout = *std::max_element(readout_times.begin(), readout_times.end());

    InjectionOutcome out;
    out.injection = injection;
    out.stored = stored;

    bool recovered = true;
    for (double r : readout_times) {
        for (const auto& [node, level] : expected.levels) {
            if (!within_expected(expected, node, level, trace.value_at(node, r), band)) {
                recovered = false;
                break;
            }
        }
        if (!recovered) break;
    }

    // Excursion bookkeeping on the struck node over [t_start, last readout].
    const int struck = trace.node_index(injection.node);
    if (struck < 0) throw SimError("classify: struck node not recorded");
    const auto level_it = expected.levels.find(injection.node);
    const double ref_level = level_it != expected.levels.end()
                                 ? level_it->second
                                 : trace.value_at(injection.node, injection.t_start);
    double excursion = 0.0;
    double t_last_out = injection.t_start;
    bool ever_out = false;
    const auto& times = trace.times;
    const auto& vs = trace.voltages[static_cast<std::size_t>(struck)];
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < injection.t_start || times[k] > last_readout) continue;
        excursion = std::max(excursion, std::abs(vs[k] - ref_level));
        if (!within_expected(expected, injection.node, ref_level, vs[k], band)) {
            t_last_out = times[k];
            ever_out = true;
        }
    }
    out.v_excursion = excursion;

    if (recovered) {
        out.classification = UpsetClass::Recovered;
        out.t_recover = ever_out ? t_last_out - injection.t_start : 0.0;
        return out;
    }

    // Upset: everything settled and the output latched the complement.
    bool settled = true;
    for (const auto& [node, level] : expected.levels) {
        const int idx = trace.node_index(node);
        if (idx < 0 || std::abs(slope_at(trace, idx, last_readout)) > kSettleSlope) {
            settled = false;
            break;
        }
    }
    const auto q_logic = expected.logic.find(expected.output);
    const double q_rail = (q_logic != expected.logic.end() && q_logic->second == Logic::High)
                              ? expected.vdd
                              : 0.0;
    const double q_complement = expected.vdd - q_rail;
    const double q_now = trace.value_at(expected.output, last_readout);
    if (settled && std::abs(q_now - q_complement) <= band) {
        out.classification = UpsetClass::Upset;
        return out;
    }
    out.classification = UpsetClass::Unresolved;
    return out;
}

std::vector<std::pair<std::string, double>> campaign_schedule(const CampaignSpec& spec) {
    if (spec.schedule == ScheduleKind::Custom) return spec.custom_schedule;

    const Cell cell = build_cell(spec.latch, spec.sizing);
    std::vector<std::string> nodes = spec.nodes.empty() ? cell.state_nodes : spec.nodes;

    std::vector<std::pair<std::string, double>> sched;
    if (spec.schedule == ScheduleKind::Exhaustive) {
        for (const auto& n : nodes) sched.emplace_back(n, 0.60e-9);
        return sched;
    }

    if (spec.latch == CellKind::LOCO) {
        // Published per-node strike times; every one lands in a hold phase of
        // the canonical clock (and n0 is struck in two separate hold phases).
        const std::vector<std::pair<std::string, double>> published = {
            {"n0", 0.50e-9}, {"n0", 0.60e-9}, {"n0", 1.00e-9}, {"n0", 1.10e-9},
            {"n1", 1.50e-9}, {"n1", 1.60e-9}, {"n4", 2.00e-9}, {"n4", 2.10e-9},
            {"n3", 2.50e-9}, {"n3", 2.60e-9}, {"n5", 3.00e-9}, {"n5", 3.10e-9},
            {"q", 3.53e-9},  {"q", 3.65e-9},  {"n2", 4.50e-9}, {"n2", 4.60e-9},
        };
        for (const auto& e : published)
            if (std::find(nodes.begin(), nodes.end(), e.first) != nodes.end())
                sched.push_back(e);
        return sched;
    }

    // Same protocol for other latches: two strikes per state node, one hold
    // phase per node.
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        sched.emplace_back(nodes[j], (0.50 + 0.50 * static_cast<double>(j)) * 1e-9);
        sched.emplace_back(nodes[j], (0.60 + 0.50 * static_cast<double>(j)) * 1e-9);
    }
    return sched;
}

bool CampaignResult::all_recovered() const {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const InjectionOutcome& o) {
        return o.classification == UpsetClass::Recovered;
    });
}

CampaignResult run_campaign(const CampaignSpec& spec, const SimConfig& config) {
    const ClockSpec clock;
    const auto sched = campaign_schedule(spec);
    if (sched.empty()) throw SimError("campaign schedule is empty");

    const Cell cell = build_cell(spec.latch, spec.sizing);
    for (const auto& [node, t] : sched)
        if (!cell.net.has_node(node)) throw SimError("campaign: unknown node '" + node + "'");

    CampaignResult result;
    result.spec = spec;
    result.clock_first_rise = clock.first_rise;
    result.clock_period = clock.period;

    double t_max = 0.0;
    for (const auto& [node, t] : sched) t_max = std::max(t_max, clock.hold_end_after(t));

    struct Item {
        std::string node;
        double t_start;
        int stored;
    };
    std::vector<Item> items;
    for (int stored : spec.stored_values)
        for (const auto& [node, t] : sched) items.push_back({node, t, stored});

    // One fault-free reference per stored value: polarity resolution and the
    // settled levels every strike is expected to return to.
    std::map<int, Trace> references;
    std::map<int, Netlist> benches;
    for (int stored : spec.stored_values) {
        if (references.count(stored)) continue;
        Netlist bench = canonical_testbench(spec.latch, {stored}, 2, spec.sizing,
                                            config.env.vdd, clock);
        SimConfig ref_cfg = config;
        ref_cfg.t_stop = t_max + 10e-12;
        references.emplace(stored, transient(bench, ref_cfg));
        benches.emplace(stored, std::move(bench));
    }

    std::vector<InjectionOutcome> outcomes(items.size());
    parallel_for_index(items.size(), std::max(1u, spec.jobs), [&](std::size_t i) {
        const Item& item = items[i];
        const Trace& ref = references.at(item.stored);

        Injection inj;
        inj.node = item.node;
        inj.t_start = item.t_start;
        inj.q_inj = spec.q_inj;

        Netlist net = benches.at(item.stored);
        net.add(make_injection(inj, ref, config.env.vdd));

        // Both readouts stay inside the hold phase: past its end the pass
        // gates reopen and the input re-drives the state.
        const double r2 = clock.hold_end_after(inj.t_start) - kReadoutMargin;
        const double r1 = std::min(inj.t_start + kReadoutDelay, r2);
        SimConfig run_cfg = config;
        run_cfg.t_stop = r2 + 2e-12;

        const Trace trace = transient(net, run_cfg);
        const auto logic = latch_hold_state(spec.latch, item.stored);
        const auto expected = expected_state_from_reference(
            ref, r2, logic, config.env.vdd, "q", cell.pass_weak_nodes, config.env);
        outcomes[i] = classify(trace, inj, expected, {r1, r2}, item.stored);
    });

    result.outcomes = std::move(outcomes);
    return result;
}

std::string campaign_report_json(const CampaignResult& result, const SimConfig& config) {
    Json j;
    j["latch"] = cell_kind_name(result.spec.latch);
    j["q_inj_fC"] = result.spec.q_inj * 1e15;
    j["schedule"] = result.spec.schedule == ScheduleKind::Default      ? "default"
                    : result.spec.schedule == ScheduleKind::Exhaustive ? "exhaustive"
                                                                       : "custom";
    j["clock"] = {{"first_rise_ns", result.clock_first_rise * 1e9},
                  {"period_ns", result.clock_period * 1e9}};
    j["config"] = config_to_json(config);
    Json outs = Json::array();
    for (const auto& o : result.outcomes) {
        Json e;
        e["node"] = o.injection.node;
        e["t_start_ns"] = o.injection.t_start * 1e9;
        e["stored"] = o.stored;
        e["classification"] = upset_class_name(o.classification);
        e["v_excursion_mV"] = o.v_excursion * 1e3;
        if (o.t_recover)
            e["t_recover_ps"] = *o.t_recover * 1e12;
        else
            e["t_recover_ps"] = nullptr;
        outs.push_back(std::move(e));
    }
    j["outcomes"] = std::move(outs);
    j["all_recovered"] = result.all_recovered();
    return j.dump(2) + "\n";
}

}  // namespace latchsim
