#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "latchsim/cells.hpp"
#include "latchsim/engine.hpp"

namespace latchsim {

/// One single-node strike. Polarity 0 = auto: oppose the node's value just
/// before the strike so every injection is a worst-case flip attempt.
struct Injection {
    std::string node;
    double t_start = 0.0;
    double q_inj = 0.0;      // coulombs
    double tau1 = 0.1e-12;
    double tau2 = 3e-12;
    int polarity = 0;        // 0 = auto, otherwise +1 / -1
};

enum class UpsetClass { Recovered, Upset, Unresolved };

const char* upset_class_name(UpsetClass c);

struct InjectionOutcome {
    Injection injection;
    int stored = 0;
    UpsetClass classification = UpsetClass::Unresolved;
    double v_excursion = 0.0;               // volts, peak deviation of struck node
    std::optional<double> t_recover;        // seconds from t_start, set when Recovered
};

/// Builds the strike source for a node, resolving auto polarity against the
/// node voltage in the fault-free reference trace.
ISource make_injection(const Injection& inj, const Trace& reference, double vdd);

/// Settled voltages the trace is expected to return to, taken from a
/// fault-free reference run. Nodes in `weak_high` are restored through an
/// n-channel pass device: when they hold a one, any settled value between
/// the pass-restored level (vdd - vth) and the full rail is legitimate.
struct ExpectedState {
    std::map<std::string, double> levels;   // state node -> volts
    std::map<std::string, Logic> logic;     // state node -> stored logic
    std::set<std::string> weak_high;        // pass-device restored nodes
    double pass_restored_level = 0.0;       // vdd - vth of the built-in nmos
    double vdd = 0.8;
    std::string output = "q";
};

ExpectedState expected_state_from_reference(const Trace& reference, double readout_t,
                                            const std::map<std::string, Logic>& logic,
                                            double vdd, const std::string& output = "q",
                                            const std::vector<std::string>& weak_high = {},
                                            const EnvCondition& env = {});

/// Classifies one injection run against the expected state at the readout
/// instants. Recovered: every state node within 10% of vdd of its expected
/// level at all readouts. Upset: state settled (|dV/dt| < 1 mV/ps) with the
/// output at the complement rail. Anything else: Unresolved.
InjectionOutcome classify(const Trace& trace, const Injection& injection,
                          const ExpectedState& expected,
                          const std::vector<double>& readout_times, int stored);

enum class ScheduleKind { Default, Exhaustive, Custom };

/// Injection campaign. Default reproduces the published per-node schedule
/// against the canonical 2 GHz clock (every strike lands in a hold phase);
/// Exhaustive strikes every state node once per stored value early in the
/// second hold phase. One strike per simulation.
struct CampaignSpec {
    CellKind latch = CellKind::LOCO;
    std::vector<std::string> nodes;          // empty = all state nodes
    std::vector<int> stored_values = {0, 1};
    double q_inj = 2.5e-15;
    ScheduleKind schedule = ScheduleKind::Default;
    std::vector<std::pair<std::string, double>> custom_schedule;
    Sizing sizing;
    unsigned jobs = 1;
};

/// The (node, t_start) list a spec expands to for one stored value.
std::vector<std::pair<std::string, double>> campaign_schedule(const CampaignSpec& spec);

struct CampaignResult {
    CampaignSpec spec;
    std::vector<InjectionOutcome> outcomes;  // schedule order, per stored value
    double clock_first_rise = 0.0;           // phase audit
    double clock_period = 0.0;

    bool all_recovered() const;
};

CampaignResult run_campaign(const CampaignSpec& spec, const SimConfig& config);

/// Campaign report as JSON text (schema documented in README).
std::string campaign_report_json(const CampaignResult& result, const SimConfig& config);

}  // namespace latchsim
