#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "latchsim/devices.hpp"
#include "latchsim/waveform.hpp"

namespace latchsim {

// Flat transistor-level circuit description. Node "0" is ground; "vdd" is
// the conventional supply node and must be driven by a voltage source before
// simulation. Node and model names are case-insensitive and stored lowercase.

struct Mosfet {
    std::string name;
    std::string drain, gate, source;
    Polarity polarity = Polarity::N;
    double w_over_l = 1.0;
    std::string model;  // "nmos" / "pmos" built-ins or a .model name
};

struct Capacitor {
    std::string name;
    std::string n1, n2;
    double value = 0.0;  // farads
};

struct VSource {
    std::string name;
    std::string n_plus, n_minus;
    Waveform waveform;
};

/// Current source; a positive waveform value injects current into n_plus
/// (and pulls it out of n_minus).
struct ISource {
    std::string name;
    std::string n_plus, n_minus;
    Waveform waveform;
};

using Device = std::variant<Mosfet, Capacitor, VSource, ISource>;

const std::string& device_name(const Device& d);

struct Netlist {
    std::string name = "netlist";
    std::vector<std::string> nodes;  // insertion order; always contains "0"
    std::vector<Device> devices;
    std::map<std::string, MosfetParams> models;  // explicit .model cards

    Netlist() { nodes.push_back("0"); }

    bool has_node(const std::string& n) const;
    /// Registers the node if new and returns its canonical (lowercase) name.
    std::string add_node(const std::string& n);
    void add(Device d);

    /// Resolves a model by name; "nmos"/"pmos" fall back to built-ins.
    const MosfetParams& model_for(const std::string& name) const;

    std::size_t mosfet_count() const;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parses the SPICE-subset text format (see README for the grammar). Keywords
/// and node names are case-insensitive; device order is preserved. Throws
/// ParseError with a line number on any malformed input.
Netlist parse_netlist(const std::string& text, const std::string& name = "netlist");

/// Engineering-suffix number: 1.5k, 10u, 0.1f, 2p, 3n, 5m or plain floats.
double parse_value(const std::string& token);

struct Diagnostic {
    enum class Severity { Warning, Error };
    Severity severity;
    std::string message;
};

/// Structural checks: unique device names, positive geometry/values, waveform
/// invariants, a supply source on vdd, and a DC-path reachability scan that
/// flags floating nodes as warnings (high-impedance nodes are legal).
std::vector<Diagnostic> validate(const Netlist& netlist);

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags)
        if (d.severity == Diagnostic::Severity::Error) return true;
    return false;
}

/// Text form that parses back to a structurally equal netlist.
std::string serialize(const Netlist& netlist);

/// Structural equality: same node set, same device sequence (all parameters
/// bit-exact), same explicit models. The title is not compared.
bool structurally_equal(const Netlist& a, const Netlist& b);

}  // namespace latchsim
