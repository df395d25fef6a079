#include "latchsim/experiments.hpp"

#include <cmath>
#include <cstdio>

#include "latchsim/parallel.hpp"
#include "latchsim/rng.hpp"
#include "report.hpp"

namespace latchsim {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct PowerDelay {
    double power, t_avg;
};

PowerDelay measure_point(CellKind latch, const SimConfig& cfg, const Sizing& sizing) {
    PowerDelay pd{};
    pd.power = measure_power(latch, cfg, sizing);
    const LatchDelays d = measure_latch_delays(latch, cfg, sizing);
    pd.t_avg = 0.5 * (d.t_dq + d.t_cq);
    return pd;
}

void summarize(const std::vector<double>& power, const std::vector<double>& delay,
               double& sigma_p, double& sigma_d) {
    sigma_p = power.empty() ? 0.0 : stddev(power);
    sigma_d = delay.empty() ? 0.0 : stddev(delay);
}

}  // namespace

const char* pvt_axis_name(PvtAxis axis) {
    switch (axis) {
        case PvtAxis::Vth: return "vth";
        case PvtAxis::Temp: return "temp";
        case PvtAxis::Vdd: return "vdd";
    }
    return "?";
}

std::optional<PvtAxis> pvt_axis_from_name(const std::string& name) {
    if (name == "vth") return PvtAxis::Vth;
    if (name == "temp" || name == "temperature") return PvtAxis::Temp;
    if (name == "vdd" || name == "voltage") return PvtAxis::Vdd;
    return std::nullopt;
}

std::vector<EnvCondition> pvt_grid_custom(PvtAxis axis, double from, double to, double step,
                                          const EnvCondition& nominal) {
    if (step <= 0.0 || to < from) throw std::invalid_argument("pvt_grid: bad range");
    std::vector<EnvCondition> grid;
    // half-step slack so the declared endpoint is never dropped to rounding
    for (int i = 0; from + i * step <= to + step / 2; ++i) {
        EnvCondition e = nominal;
        const double v = from + i * step;
        switch (axis) {
            case PvtAxis::Vth: e.dvth = v; break;
            case PvtAxis::Temp: e.temperature = v; break;
            case PvtAxis::Vdd: e.vdd = v; break;
        }
        grid.push_back(e);
    }
    return grid;
}

std::vector<EnvCondition> pvt_grid(PvtAxis axis, const EnvCondition& nominal) {
    switch (axis) {
        case PvtAxis::Vth: return pvt_grid_custom(axis, 0.01, 0.08, 0.01, nominal);
        case PvtAxis::Temp: return pvt_grid_custom(axis, -40.0, 150.0, 10.0, nominal);
        case PvtAxis::Vdd: return pvt_grid_custom(axis, 0.5, 1.0, 0.05, nominal);
    }
    return {};
}

PvtSweepResult pvt_sweep(CellKind latch, PvtAxis axis, const SimConfig& config,
                         const Sizing& sizing, unsigned jobs) {
    PvtSweepResult result;
    result.axis = axis;
    const auto grid = pvt_grid(axis, config.env);
    result.points.resize(grid.size());

    parallel_for_index(grid.size(), std::max(1u, jobs), [&](std::size_t i) {
        PvtPoint& pt = result.points[i];
        pt.env = grid[i];
        SimConfig cfg = config;
        cfg.env = grid[i];
        try {
            const PowerDelay pd = measure_point(latch, cfg, sizing);
            pt.power = pd.power;
            pt.t_avg = pd.t_avg;
            pt.valid = true;
        } catch (const std::exception& e) {
            pt.valid = false;
            pt.error = e.what();
        }
    });

    std::vector<double> power, delay;
    for (const auto& pt : result.points) {
        if (!pt.valid) {
            ++result.invalid_count;
            continue;
        }
        power.push_back(pt.power);
        delay.push_back(pt.t_avg);
    }
    summarize(power, delay, result.sigma_power, result.sigma_delay);
    return result;
}

std::string pvt_csv(const PvtSweepResult& result, const SimConfig& config) {
    std::string out = "# axis=" + std::string(pvt_axis_name(result.axis)) +
                      " nominal_vdd_v=" + fmt(config.env.vdd) +
                      " nominal_temp_c=" + fmt(config.env.temperature) +
                      " dt_nominal_s=" + fmt(config.dt_nominal) + "\n";
    out += "dvth_v,temp_c,vdd_v,valid,power_uW,t_avg_ps\n";
    for (const auto& pt : result.points) {
        out += fmt(pt.env.dvth) + "," + fmt(pt.env.temperature) + "," + fmt(pt.env.vdd) + "," +
               (pt.valid ? "1" : "0") + "," + fmt(pt.power * 1e6) + "," + fmt(pt.t_avg * 1e12) +
               "\n";
    }
    return out;
}

std::string pvt_summary_json(CellKind latch, const PvtSweepResult& result,
                             const SimConfig& config) {
    Json j;
    j["latch"] = cell_kind_name(latch);
    j["axis"] = pvt_axis_name(result.axis);
    j["points"] = result.points.size();
    j["invalid_points"] = result.invalid_count;
    j["sigma_power_uW"] = result.sigma_power * 1e6;
    j["sigma_delay_ps"] = result.sigma_delay * 1e12;
    j["config"] = config_to_json(config);
    return j.dump(2) + "\n";
}

McResult monte_carlo(CellKind latch, const McConfig& mc, const SimConfig& config,
                     const Sizing& sizing, unsigned jobs) {
    if (mc.n_samples < 1) throw std::invalid_argument("monte_carlo: n_samples must be >= 1");
    McResult result;
    result.mc = mc;
    result.samples.resize(static_cast<std::size_t>(mc.n_samples));

    const double vth_n_mag = std::abs(default_nmos().vth0);
    const double vth_p_mag = std::abs(default_pmos().vth0);

    parallel_for_index(result.samples.size(), std::max(1u, jobs), [&](std::size_t i) {
        McSample& s = result.samples[i];
        s.index = static_cast<int>(i);
        // Private stream per sample; draw order is fixed: vth_n, vth_p, vdd, temp.
        SplitMix64 rng(substream_seed(mc.seed, i));
        EnvCondition env = config.env;
        env.dvth_n = mc.vth_rel_sigma * vth_n_mag * rng.next_gaussian();
        env.dvth_p = mc.vth_rel_sigma * vth_p_mag * rng.next_gaussian();
        env.vdd = config.env.vdd * (1.0 + mc.vdd_rel_sigma * rng.next_gaussian());
        env.temperature = config.env.temperature + mc.temp_sigma * rng.next_gaussian();
        s.env = env;

        SimConfig cfg = config;
        cfg.env = env;
        try {
            const PowerDelay pd = measure_point(latch, cfg, sizing);
            s.power = pd.power;
            s.t_avg = pd.t_avg;
            s.valid = true;
        } catch (const std::exception& e) {
            s.valid = false;
            s.error = e.what();
        }
    });

    std::vector<double> power, delay;
    for (const auto& s : result.samples) {
        if (!s.valid) {
            ++result.summary.excluded;
            continue;
        }
        power.push_back(s.power);
        delay.push_back(s.t_avg);
    }
    if (!power.empty()) {
        result.summary.sigma_power = stddev(power);
        result.summary.ad_power = avg_dev(power);
        result.summary.sigma_delay = stddev(delay);
        result.summary.ad_delay = avg_dev(delay);
    }
    return result;
}

std::string mc_samples_csv(const McResult& result, const SimConfig& config) {
    std::string out = "# seed=" + std::to_string(result.mc.seed) +
                      " n_samples=" + std::to_string(result.mc.n_samples) +
                      " vth_rel_sigma=" + fmt(result.mc.vth_rel_sigma) +
                      " vdd_rel_sigma=" + fmt(result.mc.vdd_rel_sigma) +
                      " temp_sigma_c=" + fmt(result.mc.temp_sigma) +
                      " nominal_vdd_v=" + fmt(config.env.vdd) +
                      " dt_nominal_s=" + fmt(config.dt_nominal) + "\n";
    out += "i,vth_n,vth_p,vdd,temp,power_uW,t_avg_ps\n";
    for (const auto& s : result.samples) {
        out += std::to_string(s.index) + "," + fmt(s.env.dvth_n) + "," + fmt(s.env.dvth_p) + "," +
               fmt(s.env.vdd) + "," + fmt(s.env.temperature) + "," +
               (s.valid ? fmt(s.power * 1e6) : "nan") + "," +
               (s.valid ? fmt(s.t_avg * 1e12) : "nan") + "\n";
    }
    return out;
}

std::string mc_summary_json(CellKind latch, const McResult& result, const SimConfig& config) {
    Json j;
    j["latch"] = cell_kind_name(latch);
    j["n_samples"] = result.mc.n_samples;
    j["seed"] = result.mc.seed;
    j["vth_rel_sigma"] = result.mc.vth_rel_sigma;
    j["vdd_rel_sigma"] = result.mc.vdd_rel_sigma;
    j["temp_sigma_c"] = result.mc.temp_sigma;
    j["temp_sigma_note"] = "temperature spread has no published range; configurable";
    j["excluded_samples"] = result.summary.excluded;
    j["sigma_power_uW"] = result.summary.sigma_power * 1e6;
    j["ad_power_uW"] = result.summary.ad_power * 1e6;
    j["sigma_delay_ps"] = result.summary.sigma_delay * 1e12;
    j["ad_delay_ps"] = result.summary.ad_delay * 1e12;
    j["config"] = config_to_json(config);
    return j.dump(2) + "\n";
}

ShortCircuitResult short_circuit_protocol(CellKind latch, const SimConfig& config,
                                          const Sizing& sizing) {
    const double vdd = config.env.vdd;
    ShortCircuitResult r;
    PwlWave d;
    d.points = {{0.0, 0.0}, {r.edge1, 0.0}, {r.edge1 + 5e-12, vdd},
                {r.edge2, vdd}, {r.edge2 + 5e-12, 0.0}};
    Netlist bench = pinned_clock_testbench(latch, true, d, sizing, vdd);
    SimConfig cfg = config;
    cfg.t_stop = 300e-12;
    r.trace = transient(bench, cfg);
    r.i_avg = avg_current(r.trace, r.t0, r.t1, "vvdd");
    return r;
}

}  // namespace latchsim
