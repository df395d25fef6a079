#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include "latchsim/cells.hpp"
#include "latchsim/engine.hpp"

namespace latchsim {

enum class UpsetClass;  // defined in fault.hpp

/// Critical charge result: either the smallest upsetting charge or a
/// statement that no upset occurred up to the search bound.
struct ExceedsBound {
    double bound;  // coulombs
};
using Qcrit = std::variant<double, ExceedsBound>;

struct LatchMetrics {
    double power = 0.0;    // W
    double t_dq = 0.0;     // s
    double t_cq = 0.0;     // s
    double t_avg = 0.0;    // s, (t_dq + t_cq)/2
    double t_setup = 0.0;  // s
    double t_hold = 0.0;   // s, may be negative
    bool t_setup_is_bound = false;  // no failing point found; value is the window edge
    bool t_hold_is_bound = false;
    double pdp = 0.0;      // J, power * t_avg
    std::optional<Qcrit> q_crit;
    int transistor_count = 0;
};

/// Average supply power over cycles 3-10 of a 10-cycle run with the data
/// input toggling every 2 cycles: vdd * (net charge delivered) / duration.
double measure_power(CellKind latch, const SimConfig& config, const Sizing& sizing = {});

/// Time between 50%-of-vdd crossings: the from_signal crossing at/after
/// from_edge_t to the next to_signal crossing after it. Throws if either
/// signal does not cross within the trace.
double measure_delay(const Trace& trace, const std::string& from_signal,
                     double from_edge_t, const std::string& to_signal, double vdd);

struct LatchDelays {
    double t_dq;  // worst of rising/falling data edge, transparent mode
    double t_cq;  // worst of rising/falling output, from the latching clock edge
};
LatchDelays measure_latch_delays(CellKind latch, const SimConfig& config,
                                 const Sizing& sizing = {});

/// Binary search (0.05 ps resolution) on the data transition time relative
/// to the latching clock edge; failure = wrong value read at the end of the
/// following hold phase. Returns the minimum passing margin, or nullopt when
/// no failing point exists inside the search window (reported as a bound).
std::optional<double> find_setup_time(CellKind latch, const SimConfig& config,
                                      const Sizing& sizing = {});
std::optional<double> find_hold_time(CellKind latch, const SimConfig& config,
                                     const Sizing& sizing = {});

/// One setup/hold trial: data edge `delta` seconds before (setup) or after
/// (hold) the latching clock edge; true when the intended value is read back
/// at the end of the following hold phase. Exposed so searches' endpoints can
/// be re-certified by direct simulation.
bool setup_hold_probe(CellKind latch, const SimConfig& config, int target, double delta,
                      bool is_setup, const Sizing& sizing = {});

inline double pdp(double power, double t_avg) { return power * t_avg; }

/// (proposed - compared) / compared.
inline double relative_delta(double proposed, double compared) {
    if (compared == 0.0) throw std::invalid_argument("relative_delta: compared value is zero");
    return (proposed - compared) / compared;
}

/// Mean of |i(t)| over [t0, t1], trapezoidal quadrature on the trace grid
/// (end segments interpolated). Throws if the window is not covered.
double avg_current(const Trace& trace, double t0, double t1,
                   const std::string& vsource = "vvdd");

/// Critical charge of one node by bisection on the injected charge, using
/// the upset classifier as oracle (Unresolved counts as Upset). Probes q_max
/// first; if the node recovers there the result is ExceedsBound(q_max).
struct QcritSearch {
    Qcrit result;
    double last_recovered = 0.0;   // highest charge classified Recovered
    double first_upset = 0.0;      // lowest charge classified Upset (0 if none)
    int unresolved_probes = 0;
};
QcritSearch find_qcrit(CellKind latch, const std::string& node, int stored,
                       const SimConfig& config, double q_max = 100e-15,
                       double resolution = 0.05e-15, const Sizing& sizing = {});

/// Single fresh strike-and-classify trial at charge q, the same protocol the
/// search runs; lets callers re-certify a search's endpoints independently.
UpsetClass qcrit_probe(CellKind latch, const std::string& node, int stored,
                       const SimConfig& config, double q, const Sizing& sizing = {});

/// Latch-level critical charge: minimum over all state nodes and both stored
/// values.
Qcrit find_qcrit_latch(CellKind latch, const SimConfig& config, double q_max = 100e-15,
                       double resolution = 0.05e-15, const Sizing& sizing = {},
                       unsigned jobs = 1);

/// Population standard deviation: sqrt(sum (x - mean)^2 / N).
template <typename Scalar>
Scalar stddev(std::span<const Scalar> samples) {
    if (samples.empty()) throw std::invalid_argument("stddev: empty sample list");
    Scalar mean = 0;
    for (Scalar x : samples) mean += x;
    mean /= static_cast<Scalar>(samples.size());
    Scalar ss = 0;
    for (Scalar x : samples) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<Scalar>(samples.size()));
}

/// Population mean absolute deviation: sum |x - mean| / N.
template <typename Scalar>
Scalar avg_dev(std::span<const Scalar> samples) {
    if (samples.empty()) throw std::invalid_argument("avg_dev: empty sample list");
    Scalar mean = 0;
    for (Scalar x : samples) mean += x;
    mean /= static_cast<Scalar>(samples.size());
    Scalar ad = 0;
    for (Scalar x : samples) ad += std::abs(x - mean);
    return ad / static_cast<Scalar>(samples.size());
}

inline double stddev(const std::vector<double>& v) { return stddev(std::span<const double>(v)); }
inline double avg_dev(const std::vector<double>& v) { return avg_dev(std::span<const double>(v)); }

/// Full per-latch characterization (q_crit optional; it dominates runtime).
LatchMetrics measure_latch(CellKind latch, const SimConfig& config, bool with_qcrit,
                           double q_max = 100e-15, const Sizing& sizing = {},
                           unsigned jobs = 1);

std::string metrics_report_json(CellKind latch, const LatchMetrics& m, const SimConfig& config);

}  // namespace latchsim
