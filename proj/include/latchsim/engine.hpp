#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "latchsim/netlist.hpp"

namespace latchsim {

/// Extra linear conductance between two nodes. Not expressible in the text
/// format; used by test harnesses that need an ideal resistance.
struct Shunt {
    std::string n1, n2;
    double g = 0.0;  // siemens
};

struct SimConfig {
    EnvCondition env;
    double t_stop = 1e-9;
    double dt_nominal = 50e-15;
    double dt_fine = 1e-15;
    std::vector<std::pair<double, double>> fine_windows;
    double v_tol = 1e-6;   // volts
    double i_tol = 1e-9;   // amperes
    int max_newton_iters = 60;
    double gmin = 1e-12;            // siemens, every node to ground
    double node_cap_floor = 0.1e-15;  // farads, every non-rail node to ground
    std::vector<Shunt> shunts;
    std::map<std::string, double> initial_conditions;  // node -> volts at t=0
};

struct OperatingPoint {
    std::map<std::string, double> voltages;  // rails included
};

enum class StepKind : std::uint8_t { Dc = 0, Trapezoidal = 1, BackwardEuler = 2 };

/// Transient result. All series share the time grid; supply_currents[k] is
/// the current each voltage source delivers into the circuit (positive out
/// of its + terminal).
struct Trace {
    std::vector<double> times;
    std::vector<std::string> node_names;              // non-ground nodes
    std::vector<std::vector<double>> voltages;        // [node][step]
    std::vector<std::string> vsource_names;
    std::vector<std::vector<double>> supply_currents; // [source][step]
    std::vector<StepKind> step_kinds;                 // integrator per point

    std::size_t size() const { return times.size(); }
    int node_index(const std::string& name) const;
    int vsource_index(const std::string& name) const;
    /// Linear interpolation between grid points; clamped outside the grid.
    double value_at(const std::string& node, double t) const;
    double supply_current_at(const std::string& vsource, double t) const;
};

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonConvergence : SimError {
    using SimError::SimError;
};
struct StepUnderflow : SimError {
    using SimError::SimError;
};

/// Newton solution of the nonlinear DC system with all waveforms at t=0.
/// Falls back to gmin stepping, then source stepping. Nodes with no DC path
/// settle to the value implied by gmin (0 V).
OperatingPoint dc_operating_point(const Netlist& netlist, const SimConfig& config);

/// Implicit transient analysis from a settled t=0 state. Trapezoidal by
/// default; a step whose Newton solve fails is retried with backward Euler
/// at dt/4 (halving further until dt_fine/64, then StepUnderflow). The grid
/// is fixed-step with fine windows around every strike source and every
/// configured window; all source breakpoints land on the grid exactly.
/// report_nodes restricts recorded voltages (empty = all nodes).
Trace transient(const Netlist& netlist, const SimConfig& config,
                const std::vector<std::string>& report_nodes = {});

/// Max KCL residual (A) over non-rail nodes for a candidate DC solution
/// (capacitors open). Independent certification for solver outputs.
double kcl_residual(const Netlist& netlist, const SimConfig& config,
                    const std::map<std::string, double>& voltages, double t);

/// Replays the companion-model currents along a recorded trace and returns
/// the worst KCL residual over all accepted points. A correct trace stays
/// within config.i_tol.
double verify_trace(const Netlist& netlist, const SimConfig& config, const Trace& trace);

/// CSV export: header "t_s,<node>...,i_<vsource>_a", 17 significant digits.
std::string trace_to_csv(const Trace& trace);

/// The exact time grid the transient solver will use (exposed for tests and
/// protocol audits).
std::vector<double> transient_grid(const Netlist& netlist, const SimConfig& config);

}  // namespace latchsim
