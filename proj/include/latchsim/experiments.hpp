#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latchsim/metrics.hpp"

namespace latchsim {

enum class PvtAxis { Vth, Temp, Vdd };

const char* pvt_axis_name(PvtAxis axis);
std::optional<PvtAxis> pvt_axis_from_name(const std::string& name);

/// Sweep grids: Vth shift 0.01..0.08 V step 0.01 (8 points), temperature
/// -40..150 degC step 10 (20 points), supply 0.5..1.0 V step 0.05 (11).
std::vector<EnvCondition> pvt_grid(PvtAxis axis, const EnvCondition& nominal = {});

/// Grid over a caller-chosen range on the same axis (from == to gives one
/// point). The published sweeps use pvt_grid.
std::vector<EnvCondition> pvt_grid_custom(PvtAxis axis, double from, double to, double step,
                                          const EnvCondition& nominal = {});

struct PvtPoint {
    EnvCondition env;
    bool valid = false;
    double power = 0.0;  // W
    double t_avg = 0.0;  // s
    std::string error;   // set when invalid
};

struct PvtSweepResult {
    PvtAxis axis;
    std::vector<PvtPoint> points;
    double sigma_power = 0.0;  // over valid points, Eq.-style population form
    double sigma_delay = 0.0;
    int invalid_count = 0;
};

/// One power + delay measurement per grid point, all other conditions
/// nominal. Per-point failures are recorded and skipped in the statistics.
PvtSweepResult pvt_sweep(CellKind latch, PvtAxis axis, const SimConfig& config,
                         const Sizing& sizing = {}, unsigned jobs = 1);

std::string pvt_csv(const PvtSweepResult& result, const SimConfig& config);
std::string pvt_summary_json(CellKind latch, const PvtSweepResult& result,
                             const SimConfig& config);

/// Monte Carlo configuration. Gaussian draws: threshold shift per polarity
/// at 10%/3 of |vth0| (1 sigma), supply at 20%/3 of nominal, temperature
/// sigma in degC (no published range exists for it; it is configurable and
/// called out in reports).
struct McConfig {
    int n_samples = 100;
    std::uint64_t seed = 1;
    double vth_rel_sigma = 0.10 / 3.0;
    double vdd_rel_sigma = 0.20 / 3.0;
    double temp_sigma = 20.0;
};

struct McSample {
    int index = 0;
    EnvCondition env;
    bool valid = false;
    double power = 0.0;
    double t_avg = 0.0;
    std::string error;
};

struct McSummary {
    double sigma_power = 0.0;
    double ad_power = 0.0;
    double sigma_delay = 0.0;
    double ad_delay = 0.0;
    int excluded = 0;
};

struct McResult {
    McConfig mc;
    std::vector<McSample> samples;
    McSummary summary;
};

/// Per-sample RNG streams are derived from (seed, index), so the result is
/// bitwise identical for any worker count and execution order.
McResult monte_carlo(CellKind latch, const McConfig& mc, const SimConfig& config,
                     const Sizing& sizing = {}, unsigned jobs = 1);

std::string mc_samples_csv(const McResult& result, const SimConfig& config);
std::string mc_summary_json(CellKind latch, const McResult& result, const SimConfig& config);

struct ShortCircuitResult {
    double i_avg = 0.0;       // A, mean |supply current| over the window
    double t0 = 50e-12;
    double t1 = 250e-12;
    double edge1 = 80e-12;    // data switch times
    double edge2 = 170e-12;
    Trace trace;
};

/// Transparent-mode switching-current protocol: clock pinned high, data
/// edges at exactly 80 ps and 170 ps, |i(vdd)| averaged over [50 ps, 250 ps].
ShortCircuitResult short_circuit_protocol(CellKind latch, const SimConfig& config,
                                          const Sizing& sizing = {});

}  // namespace latchsim
