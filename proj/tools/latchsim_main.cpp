#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <latchsim/experiments.hpp>
#include <latchsim/fault.hpp>
#include <latchsim/metrics.hpp>
#include <latchsim/parallel.hpp>

namespace fs = std::filesystem;
using namespace latchsim;

namespace {

struct GlobalOpts {
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    std::string dt;
    std::string format = "json";
    bool long_mode = false;
    unsigned jobs = default_jobs();
};

SimConfig base_config(const GlobalOpts& g) {
    SimConfig cfg;  // canonical setup: 0.8 V, 27 C, 2 GHz benches
    if (!g.dt.empty()) {
        cfg.dt_nominal = parse_value(g.dt);
        cfg.dt_fine = std::min(cfg.dt_fine, cfg.dt_nominal);
    }
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
}

CellKind parse_kind(const std::string& name) {
    const auto kind = cell_kind_from_name(name);
    if (!kind) throw std::runtime_error("unknown cell kind '" + name + "'");
    return *kind;
}

int cmd_cells_dump(const std::string& kind_name) {
    const Cell cell = build_cell(parse_kind(kind_name));
    std::cout << serialize(cell.net);
    return 0;
}

int cmd_truthtable(const GlobalOpts& g, const std::string& cell_name) {
    if (cell_name != "osc") throw std::runtime_error("truth table runner supports --cell osc");
    const auto rows = osc_truth_table_check(base_config(g));
    bool all_pass = true;
    std::printf("%-4s %-4s %-9s %-10s %-10s %s\n", "i1", "i2", "prev_out", "o1_V", "o2_V",
                "result");
    for (const auto& r : rows) {
        all_pass &= r.pass;
        std::printf("%-4d %-4d %-9s %-10.4f %-10.4f %s%s%s\n", static_cast<int>(r.i1),
                    static_cast<int>(r.i2),
                    r.prior ? (*r.prior == Logic::High ? "1" : "0") : "-", r.o1, r.o2,
                    r.pass ? "PASS" : "FAIL", r.detail.empty() ? "" : " ", r.detail.c_str());
    }
    return all_pass ? 0 : 1;
}

int cmd_simulate(const GlobalOpts& g, const std::string& netlist_path, const std::string& tstop,
                 const std::string& report) {
    std::ifstream f(netlist_path);
    if (!f) throw std::runtime_error("cannot open " + netlist_path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const Netlist net = parse_netlist(text, fs::path(netlist_path).stem().string());

    const auto diags = validate(net);
    for (const auto& d : diags)
        std::cerr << (d.severity == Diagnostic::Severity::Error ? "error: " : "warning: ")
                  << d.message << "\n";
    if (has_errors(diags)) return 2;

    SimConfig cfg = base_config(g);
    cfg.t_stop = parse_value(tstop);

    std::vector<std::string> nodes;
    if (!report.empty()) {
        std::stringstream ss(report);
        std::string tok;
        while (std::getline(ss, tok, ',')) nodes.push_back(tok);
    }
    const Trace tr = transient(net, cfg, nodes);
    const fs::path out = fs::path(g.out_dir) / "trace.csv";
    write_file(out, trace_to_csv(tr));
    std::cout << out.string() << "\n";
    return 0;
}

int cmd_campaign(const GlobalOpts& g, const std::string& latch, const std::string& qinj,
                 const std::string& schedule, const std::string& stored) {
    CampaignSpec spec;
    spec.latch = parse_kind(latch);
    spec.q_inj = parse_value(qinj);
    spec.jobs = g.jobs;
    if (schedule == "default") spec.schedule = ScheduleKind::Default;
    else if (schedule == "exhaustive") spec.schedule = ScheduleKind::Exhaustive;
    else throw std::runtime_error("unknown schedule '" + schedule + "'");
    spec.stored_values.clear();
    {
        std::stringstream ss(stored);
        std::string tok;
        while (std::getline(ss, tok, ',')) spec.stored_values.push_back(std::stoi(tok));
    }

    const SimConfig cfg = base_config(g);
    const CampaignResult result = run_campaign(spec, cfg);

    const fs::path out = fs::path(g.out_dir) / ("campaign_" + latch + ".json");
    write_file(out, campaign_report_json(result, cfg));

    int recovered = 0, upset = 0, unresolved = 0;
    for (const auto& o : result.outcomes) {
        if (o.classification == UpsetClass::Recovered) ++recovered;
        else if (o.classification == UpsetClass::Upset) ++upset;
        else ++unresolved;
    }
    std::cout << latch << ": " << recovered << "/" << result.outcomes.size()
              << " recovered, " << upset << " upset, " << unresolved << " unresolved -> "
              << out.string() << "\n";
    return result.all_recovered() ? 0 : 1;
}

int cmd_metrics(const GlobalOpts& g, const std::string& latch, const std::string& qmax,
                bool skip_qcrit) {
    const CellKind kind = parse_kind(latch);
    const SimConfig cfg = base_config(g);
    const LatchMetrics m =
        measure_latch(kind, cfg, !skip_qcrit, parse_value(qmax), Sizing{}, g.jobs);
    const std::string json = metrics_report_json(kind, m, cfg);
    write_file(fs::path(g.out_dir) / ("metrics_" + latch + ".json"), json);
    std::cout << json;
    return 0;
}

int cmd_compare(const GlobalOpts& g, const std::string& latch, const std::string& baseline) {
    const CellKind a = parse_kind(latch);
    const CellKind b = parse_kind(baseline);
    const SimConfig cfg = base_config(g);
    const LatchMetrics ma = measure_latch(a, cfg, false, 100e-15, Sizing{}, g.jobs);
    const LatchMetrics mb = measure_latch(b, cfg, false, 100e-15, Sizing{}, g.jobs);

    nlohmann::ordered_json j;
    j["proposed"] = latch;
    j["compared"] = baseline;
    j["delta_n_trans_pct"] = 100.0 * relative_delta(ma.transistor_count, mb.transistor_count);
    j["delta_power_pct"] = 100.0 * relative_delta(ma.power, mb.power);
    j["delta_t_avg_pct"] = 100.0 * relative_delta(ma.t_avg, mb.t_avg);
    j["delta_pdp_pct"] = 100.0 * relative_delta(ma.pdp, mb.pdp);
    const std::string json = j.dump(2) + "\n";
    write_file(fs::path(g.out_dir) / ("compare_" + latch + "_vs_" + baseline + ".json"), json);
    std::cout << json;
    return 0;
}

int cmd_shortcircuit(const GlobalOpts& g, const std::string& latch) {
    const CellKind kind = parse_kind(latch);
    const SimConfig cfg = base_config(g);
    const ShortCircuitResult r = short_circuit_protocol(kind, cfg);
    nlohmann::ordered_json j;
    j["latch"] = latch;
    j["i_avg_uA"] = r.i_avg * 1e6;
    j["window_ps"] = {r.t0 * 1e12, r.t1 * 1e12};
    j["d_edges_ps"] = {r.edge1 * 1e12, r.edge2 * 1e12};
    const std::string json = j.dump(2) + "\n";
    write_file(fs::path(g.out_dir) / ("shortcircuit_" + latch + ".json"), json);
    std::cout << json;
    return 0;
}

int cmd_pvt(const GlobalOpts& g, const std::string& latch, const std::string& axis_name) {
    const CellKind kind = parse_kind(latch);
    const auto axis = pvt_axis_from_name(axis_name);
    if (!axis) throw std::runtime_error("unknown axis '" + axis_name + "' (vth|temp|vdd)");
    const SimConfig cfg = base_config(g);
    const PvtSweepResult r = pvt_sweep(kind, *axis, cfg, Sizing{}, g.jobs);
    write_file(fs::path(g.out_dir) / ("pvt_" + axis_name + ".csv"), pvt_csv(r, cfg));
    const std::string json = pvt_summary_json(kind, r, cfg);
    write_file(fs::path(g.out_dir) / ("pvt_" + axis_name + "_summary.json"), json);
    std::cout << json;
    return 0;
}

int cmd_mc(const GlobalOpts& g, const std::string& latch, int samples) {
    const CellKind kind = parse_kind(latch);
    McConfig mc;
    mc.seed = g.seed;
    mc.n_samples = g.long_mode ? 2000 : samples;
    SimConfig cfg = base_config(g);
    if (g.dt.empty()) {
        cfg.dt_nominal = 100e-15;  // desk-scale default for sampling runs
        cfg.dt_fine = 100e-15;
    }
    const McResult r = monte_carlo(kind, mc, cfg, Sizing{}, g.jobs);
    write_file(fs::path(g.out_dir) / "mc_samples.csv", mc_samples_csv(r, cfg));
    const std::string json = mc_summary_json(kind, r, cfg);
    write_file(fs::path(g.out_dir) / "mc_summary.json", json);
    std::cout << json;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latchsim: transistor-level latch simulation and upset-resilience harness"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--out", g.out_dir, "output directory for reports");
    app.add_option("--seed", g.seed, "random seed for sampling runs");
    app.add_option("--dt", g.dt, "nominal time step, e.g. 50f");
    app.add_option("--format", g.format, "report container (json|csv)");
    app.add_flag("--long", g.long_mode, "full-scale runs (mc: 2000 samples)");
    app.add_option("--jobs", g.jobs, "worker threads for independent runs");

    auto* cells = app.add_subcommand("cells", "cell generators");
    cells->fallthrough();
    cells->require_subcommand(1);
    auto* dump = cells->add_subcommand("dump", "emit a cell netlist");
    dump->fallthrough();
    std::string dump_kind;
    dump->add_option("--kind", dump_kind, "cell kind")->required();

    auto* truthtable = app.add_subcommand("truthtable", "simulated truth-table conformance");
    truthtable->fallthrough();
    std::string tt_cell = "osc";
    truthtable->add_option("--cell", tt_cell, "cell to check");

    auto* simulate = app.add_subcommand("simulate", "transient run over a netlist file");
    simulate->fallthrough();
    std::string sim_netlist, sim_tstop = "1n", sim_report;
    simulate->add_option("--netlist", sim_netlist, "netlist file")->required();
    simulate->add_option("--tstop", sim_tstop, "simulation end time");
    simulate->add_option("--report", sim_report, "comma-separated nodes (default: all)");

    auto* campaign = app.add_subcommand("campaign", "upset-injection campaign");
    campaign->fallthrough();
    std::string c_latch, c_qinj = "2.5f", c_schedule = "default", c_stored = "0,1";
    campaign->add_option("--latch", c_latch, "latch kind")->required();
    campaign->add_option("--qinj", c_qinj, "injected charge");
    campaign->add_option("--schedule", c_schedule, "default|exhaustive");
    campaign->add_option("--stored", c_stored, "stored values, e.g. 0,1");

    auto* metrics = app.add_subcommand("metrics", "full latch characterization");
    metrics->fallthrough();
    std::string m_latch, m_qmax = "100f";
    bool m_skip_qcrit = false;
    metrics->add_option("--latch", m_latch, "latch kind")->required();
    metrics->add_option("--qmax", m_qmax, "critical-charge search bound");
    metrics->add_flag("--skip-qcrit", m_skip_qcrit, "skip the critical-charge search");

    auto* compare = app.add_subcommand("compare", "relative overhead report");
    compare->fallthrough();
    std::string cmp_latch, cmp_baseline;
    compare->add_option("--latch", cmp_latch, "proposed latch")->required();
    compare->add_option("--baseline", cmp_baseline, "compared latch")->required();

    auto* shortcircuit = app.add_subcommand("shortcircuit", "transparent-mode switching current");
    shortcircuit->fallthrough();
    std::string sc_latch;
    shortcircuit->add_option("--latch", sc_latch, "latch kind")->required();

    auto* pvt = app.add_subcommand("pvt", "process/voltage/temperature sweep");
    pvt->fallthrough();
    std::string p_latch, p_axis;
    pvt->add_option("--latch", p_latch, "latch kind")->required();
    pvt->add_option("--axis", p_axis, "vth|temp|vdd")->required();

    auto* mc = app.add_subcommand("mc", "monte-carlo variation run");
    mc->fallthrough();
    std::string mc_latch;
    int mc_samples = 100;
    mc->add_option("--latch", mc_latch, "latch kind")->required();
    mc->add_option("--samples", mc_samples, "sample count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (dump->parsed()) return cmd_cells_dump(dump_kind);
        if (truthtable->parsed()) return cmd_truthtable(g, tt_cell);
        if (simulate->parsed()) return cmd_simulate(g, sim_netlist, sim_tstop, sim_report);
        if (campaign->parsed()) return cmd_campaign(g, c_latch, c_qinj, c_schedule, c_stored);
        if (metrics->parsed()) return cmd_metrics(g, m_latch, m_qmax, m_skip_qcrit);
        if (compare->parsed()) return cmd_compare(g, cmp_latch, cmp_baseline);
        if (shortcircuit->parsed()) return cmd_shortcircuit(g, sc_latch);
        if (pvt->parsed()) return cmd_pvt(g, p_latch, p_axis);
        if (mc->parsed()) return cmd_mc(g, mc_latch, mc_samples);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
