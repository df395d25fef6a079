#include "latchsim/engine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace latchsim {

namespace {

constexpr double kTimeTiny = 1e-21;   // grid dedupe tolerance, far below any dt
constexpr double kNewtonClamp = 0.3;  // volts per iteration

enum class Mode { Dc, Trap, Be };

struct FetInst {
    int d, g, s;
    double wl;
    MosfetParams params;
};
struct CapInst {
    int a, b;  // current counted positive a -> b
    double c;
};
struct VsrcInst {
    int p, m;
    const Waveform* wave;
    int branch;
    std::string name;
};
struct IsrcInst {
    int p, m;
    const Waveform* wave;
};
struct ShuntInst {
    int a, b;
    double g;
};

struct CapState {
    double i = 0.0;   // companion current at the last accepted point
    double dv = 0.0;  // v(a) - v(b) at the last accepted point
};

/// Flattened circuit: node indices (ground = -1), resolved device parameters,
/// elaboration-time capacitors (gate lumps and per-node floors included).
struct Circuit {
    std::vector<std::string> node_names;
    std::map<std::string, int> node_index;  // includes "0" -> -1
    std::vector<FetInst> fets;
    std::vector<CapInst> caps;
    std::vector<VsrcInst> vsrcs;
    std::vector<IsrcInst> isrcs;
    std::vector<ShuntInst> shunts;
    std::set<int> rail_nodes;  // voltage-source terminals (non-ground)
    int n_nodes = 0;
    int n_unknowns = 0;

    int index_of(const std::string& name) const {
        auto it = node_index.find(name);
        if (it == node_index.end()) throw SimError("unknown node '" + name + "'");
        return it->second;
    }
};

Circuit elaborate(const Netlist& net, const SimConfig& cfg) {
    auto diags = validate(net);
    if (has_errors(diags)) {
        std::string msg = "invalid netlist:";
        for (const auto& d : diags)
            if (d.severity == Diagnostic::Severity::Error) msg += " " + d.message + ";";
        throw SimError(msg);
    }

    Circuit ckt;
    ckt.node_index["0"] = -1;
    for (const auto& n : net.nodes) {
        if (n == "0") continue;
        ckt.node_index[n] = ckt.n_nodes;
        ckt.node_names.push_back(n);
        ++ckt.n_nodes;
    }

    for (const auto& d : net.devices) {
        if (const auto* m = std::get_if<Mosfet>(&d)) {
            ckt.fets.push_back({ckt.index_of(m->drain), ckt.index_of(m->gate),
                                ckt.index_of(m->source), m->w_over_l, net.model_for(m->model)});
        } else if (const auto* c = std::get_if<Capacitor>(&d)) {
            ckt.caps.push_back({ckt.index_of(c->n1), ckt.index_of(c->n2), c->value});
        } else if (const auto* v = std::get_if<VSource>(&d)) {
            const int p = ckt.index_of(v->n_plus);
            const int m2 = ckt.index_of(v->n_minus);
            ckt.vsrcs.push_back({p, m2, &v->waveform, 0, v->name});
            if (p >= 0) ckt.rail_nodes.insert(p);
            if (m2 >= 0) ckt.rail_nodes.insert(m2);
        } else if (const auto* i = std::get_if<ISource>(&d)) {
            ckt.isrcs.push_back({ckt.index_of(i->n_plus), ckt.index_of(i->n_minus), &i->waveform});
        }
    }
    for (std::size_t k = 0; k < ckt.vsrcs.size(); ++k)
        ckt.vsrcs[k].branch = ckt.n_nodes + static_cast<int>(k);
    ckt.n_unknowns = ckt.n_nodes + static_cast<int>(ckt.vsrcs.size());

    // Gate lump and per-node floor capacitance on non-rail nodes only; rail
    // nodes are pinned so extra charge there never enters the dynamics.
    for (const auto& f : ckt.fets) {
        const double cg = f.params.cg0 * f.wl;
        if (f.g >= 0 && cg > 0 && !ckt.rail_nodes.count(f.g)) ckt.caps.push_back({f.g, -1, cg});
    }
    if (cfg.node_cap_floor > 0) {
        for (int n = 0; n < ckt.n_nodes; ++n)
            if (!ckt.rail_nodes.count(n)) ckt.caps.push_back({n, -1, cfg.node_cap_floor});
    }

    for (const auto& s : cfg.shunts)
        ckt.shunts.push_back({ckt.index_of(s.n1), ckt.index_of(s.n2), s.g});

    return ckt;
}

double at(const Eigen::VectorXd& x, int i) { return i < 0 ? 0.0 : x[i]; }

class Solver {
public:
    Solver(const Netlist& net, const SimConfig& cfg)
        : cfg_(cfg), ckt_(elaborate(net, cfg)) {
        const int n = ckt_.n_unknowns;
        x_.setZero(n);
        F_.setZero(n);
        J_.setZero(n, n);
        dx_.setZero(n);
        cap_state_.resize(ckt_.caps.size());
    }

    const Circuit& circuit() const { return ckt_; }

    /// Residual (and optionally Jacobian) of the MNA system at x. Node rows
    /// hold KCL (currents leaving the node), branch rows the source voltage
    /// equations. Capacitors contribute through the companion model selected
    /// by `mode`; cap_state_ supplies the history terms.
    void assemble(const Eigen::VectorXd& x, double t, Mode mode, double dt, bool jacobian,
                  double gmin_eff, double src_scale) {
        F_.setZero();
        if (jacobian) J_.setZero();
        auto add_j = [&](int r, int c, double v) {
            if (r >= 0 && c >= 0) J_(r, c) += v;
        };

        for (const auto& f : ckt_.fets) {
            const double vgs = at(x, f.g) - at(x, f.s);
            const double vds = at(x, f.d) - at(x, f.s);
            double ids, gm, gds;
            mosfet_eval(f.params, cfg_.env, f.wl, vgs, vds, ids, gm, gds);
            if (f.d >= 0) F_[f.d] += ids;
            if (f.s >= 0) F_[f.s] -= ids;
            if (jacobian) {
                add_j(f.d, f.g, gm);
                add_j(f.d, f.d, gds);
                add_j(f.d, f.s, -gm - gds);
                add_j(f.s, f.g, -gm);
                add_j(f.s, f.d, -gds);
                add_j(f.s, f.s, gm + gds);
            }
        }

        if (mode != Mode::Dc) {
            for (std::size_t k = 0; k < ckt_.caps.size(); ++k) {
                const auto& c = ckt_.caps[k];
                const double dv = at(x, c.a) - at(x, c.b);
                const double g_eq = (mode == Mode::Trap ? 2.0 : 1.0) * c.c / dt;
                double i;
                if (mode == Mode::Trap)
                    i = g_eq * dv - (g_eq * cap_state_[k].dv + cap_state_[k].i);
                else
                    i = g_eq * (dv - cap_state_[k].dv);
                if (c.a >= 0) F_[c.a] += i;
                if (c.b >= 0) F_[c.b] -= i;
                if (jacobian) {
                    add_j(c.a, c.a, g_eq);
                    add_j(c.a, c.b, -g_eq);
                    add_j(c.b, c.a, -g_eq);
                    add_j(c.b, c.b, g_eq);
                }
            }
        }

        for (const auto& v : ckt_.vsrcs) {
            const double ib = x[v.branch];
            if (v.p >= 0) F_[v.p] -= ib;
            if (v.m >= 0) F_[v.m] += ib;
            F_[v.branch] = at(x, v.p) - at(x, v.m) - src_scale * waveform_value(*v.wave, t);
            if (jacobian) {
                if (v.p >= 0) {
                    J_(v.p, v.branch) -= 1.0;
                    J_(v.branch, v.p) = 1.0;
                }
                if (v.m >= 0) {
                    J_(v.m, v.branch) += 1.0;
                    J_(v.branch, v.m) = -1.0;
                }
            }
        }

        for (const auto& i : ckt_.isrcs) {
            const double w = src_scale * waveform_value(*i.wave, t);
            if (i.p >= 0) F_[i.p] -= w;
            if (i.m >= 0) F_[i.m] += w;
        }

        for (int n = 0; n < ckt_.n_nodes; ++n) {
            F_[n] += gmin_eff * x[n];
            if (jacobian) J_(n, n) += gmin_eff;
        }

        for (const auto& s : ckt_.shunts) {
            const double i = s.g * (at(x, s.a) - at(x, s.b));
            if (s.a >= 0) F_[s.a] += i;
            if (s.b >= 0) F_[s.b] -= i;
            if (jacobian) {
                add_j(s.a, s.a, s.g);
                add_j(s.a, s.b, -s.g);
                add_j(s.b, s.a, -s.g);
                add_j(s.b, s.b, s.g);
            }
        }
    }

    double max_node_residual() const {
        double m = 0.0;
        for (int n = 0; n < ckt_.n_nodes; ++n) m = std::max(m, std::abs(F_[n]));
        return m;
    }

    /// Damped Newton iteration. Convergence requires both a small final
    /// update and a KCL residual within i_tol.
    bool newton(double t, Mode mode, double dt, double gmin_eff, double src_scale,
                bool pin_ics) {
        const int n = ckt_.n_unknowns;
        if (n == 0) return true;
        double last_dx = 1e30;
        for (int iter = 0; iter < cfg_.max_newton_iters; ++iter) {
            assemble(x_, t, mode, dt, true, gmin_eff, src_scale);
            if (pin_ics) pin_initial_conditions();
            if (last_dx <= cfg_.v_tol && max_node_residual() <= cfg_.i_tol) return true;
            lu_.compute(J_);
            dx_ = lu_.solve(-F_);
            double m = 0.0;
            for (int k = 0; k < ckt_.n_nodes; ++k) m = std::max(m, std::abs(dx_[k]));
            if (m > kNewtonClamp) dx_ *= kNewtonClamp / m;
            x_ += dx_;
            last_dx = std::min(m, kNewtonClamp);
        }
        assemble(x_, t, mode, dt, false, gmin_eff, src_scale);
        return false;
    }

    /// DC solve with fallbacks: plain Newton, then gmin stepping from 1e-3 S
    /// down to the configured gmin in decades, then supply ramping in tenths.
    void solve_dc(double t) {
        if (newton(t, Mode::Dc, 0.0, cfg_.gmin, 1.0, true)) return;

        x_.setZero();
        bool ok = true;
        for (double g = 1e-3; g > cfg_.gmin; g *= 0.1) {
            ok = newton(t, Mode::Dc, 0.0, g, 1.0, true);
            if (!ok) break;
        }
        if (ok && newton(t, Mode::Dc, 0.0, cfg_.gmin, 1.0, true)) return;

        x_.setZero();
        ok = true;
        for (int s = 1; s <= 10; ++s) {
            ok = newton(t, Mode::Dc, 0.0, cfg_.gmin, 0.1 * s, true);
            if (!ok) break;
        }
        if (ok) return;

        int worst = 0;
        double res = 0.0;
        for (int n2 = 0; n2 < ckt_.n_nodes; ++n2)
            if (std::abs(F_[n2]) > res) { res = std::abs(F_[n2]); worst = n2; }
        throw NonConvergence("dc solve failed: worst node '" +
                             (ckt_.n_nodes ? ckt_.node_names[worst] : std::string("-")) +
                             "' residual " + std::to_string(res) + " A");
    }

    void update_cap_state(const Eigen::VectorXd& x, Mode mode, double dt) {
        for (std::size_t k = 0; k < ckt_.caps.size(); ++k) {
            const auto& c = ckt_.caps[k];
            const double dv = at(x, c.a) - at(x, c.b);
            double i = 0.0;
            if (mode == Mode::Trap) {
                const double g_eq = 2.0 * c.c / dt;
                i = g_eq * dv - (g_eq * cap_state_[k].dv + cap_state_[k].i);
            } else if (mode == Mode::Be) {
                i = c.c / dt * (dv - cap_state_[k].dv);
            }
            cap_state_[k].i = i;
            cap_state_[k].dv = dv;
        }
    }

    void init_cap_state_from_x() { update_cap_state(x_, Mode::Dc, 0.0); }

    Eigen::VectorXd& state() { return x_; }
    std::vector<CapState>& cap_state() { return cap_state_; }
    const SimConfig& config() const { return cfg_; }

private:
    void pin_initial_conditions() {
        for (const auto& [node, v0] : cfg_.initial_conditions) {
            const int r = ckt_.index_of(node);
            if (r < 0) continue;
            J_.row(r).setZero();
            J_(r, r) = 1.0;
            F_[r] = x_[r] - v0;
        }
    }

    SimConfig cfg_;
    Circuit ckt_;
    Eigen::VectorXd x_, F_, dx_;
    Eigen::MatrixXd J_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    std::vector<CapState> cap_state_;

    friend double latchsim::verify_trace(const Netlist&, const SimConfig&, const Trace&);
    friend double latchsim::kcl_residual(const Netlist&, const SimConfig&,
                                         const std::map<std::string, double>&, double);
};

std::vector<std::pair<double, double>> fine_windows(const Circuit& ckt, const SimConfig& cfg) {
    std::vector<std::pair<double, double>> windows = cfg.fine_windows;
    auto add_strike_window = [&](const Waveform& w) {
        if (const auto* d = std::get_if<DoubleExpWave>(&w))
            windows.emplace_back(d->t_start, d->t_start + 20.0 * d->tau2);
    };
    for (const auto& v : ckt.vsrcs) add_strike_window(*v.wave);
    for (const auto& i : ckt.isrcs) add_strike_window(*i.wave);
    for (auto& w : windows) {
        w.first = std::max(0.0, w.first);
        w.second = std::min(cfg.t_stop, w.second);
    }
    return windows;
}

std::vector<double> build_grid(const Circuit& ckt, const SimConfig& cfg) {
    std::vector<double> bps{0.0, cfg.t_stop};
    for (const auto& v : ckt.vsrcs) append_breakpoints(*v.wave, cfg.t_stop, bps);
    for (const auto& i : ckt.isrcs) append_breakpoints(*i.wave, cfg.t_stop, bps);
    const auto windows = fine_windows(ckt, cfg);
    for (const auto& w : windows) {
        bps.push_back(w.first);
        bps.push_back(w.second);
    }
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end(),
                          [](double a, double b) { return b - a < kTimeTiny; }),
              bps.end());
    while (!bps.empty() && bps.front() < 0.0) bps.erase(bps.begin());

    auto in_fine = [&](double t) {
        for (const auto& w : windows)
            if (t >= w.first - kTimeTiny && t < w.second - kTimeTiny) return true;
        return false;
    };

    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(cfg.t_stop / cfg.dt_nominal) + 64);
    grid.push_back(0.0);
    double t = 0.0;
    std::size_t bp = 0;
    while (t < cfg.t_stop - kTimeTiny) {
        while (bp < bps.size() && bps[bp] <= t + kTimeTiny) ++bp;
        double next = t + (in_fine(t) ? cfg.dt_fine : cfg.dt_nominal);
        if (bp < bps.size() && bps[bp] <= next + kTimeTiny) next = bps[bp];
        if (next > cfg.t_stop) next = cfg.t_stop;
        grid.push_back(next);
        t = next;
    }
    return grid;
}

}  // namespace

int Trace::node_index(const std::string& name) const {
    for (std::size_t i = 0; i < node_names.size(); ++i)
        if (node_names[i] == name) return static_cast<int>(i);
    return -1;
}

int Trace::vsource_index(const std::string& name) const {
    for (std::size_t i = 0; i < vsource_names.size(); ++i)
        if (vsource_names[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {
double interp_series(const std::vector<double>& times, const std::vector<double>& ys, double t) {
    if (times.empty()) throw SimError("empty trace");
    if (t <= times.front()) return ys.front();
    if (t >= times.back()) return ys.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times.begin());
    const double t0 = times[k - 1], t1 = times[k];
    const double w = (t - t0) / (t1 - t0);
    return ys[k - 1] * (1.0 - w) + ys[k] * w;
}
}  // namespace

double Trace::value_at(const std::string& node, double t) const {
    if (node == "0") return 0.0;
    const int i = node_index(node);
    if (i < 0) throw SimError("node '" + node + "' not recorded in trace");
    return interp_series(times, voltages[static_cast<std::size_t>(i)], t);
}

double Trace::supply_current_at(const std::string& vsource, double t) const {
    const int i = vsource_index(vsource);
    if (i < 0) throw SimError("source '" + vsource + "' not recorded in trace");
    return interp_series(times, supply_currents[static_cast<std::size_t>(i)], t);
}

OperatingPoint dc_operating_point(const Netlist& netlist, const SimConfig& config) {
    Solver solver(netlist, config);
    solver.solve_dc(0.0);
    OperatingPoint op;
    op.voltages["0"] = 0.0;
    const auto& ckt = solver.circuit();
    for (int n = 0; n < ckt.n_nodes; ++n) op.voltages[ckt.node_names[n]] = solver.state()[n];
    return op;
}

std::vector<double> transient_grid(const Netlist& netlist, const SimConfig& config) {
    Solver solver(netlist, config);
    return build_grid(solver.circuit(), config);
}

Trace transient(const Netlist& netlist, const SimConfig& config,
                const std::vector<std::string>& report_nodes) {
    Solver solver(netlist, config);
    const Circuit& ckt = solver.circuit();
    const auto grid = build_grid(ckt, config);

    std::vector<int> record;  // circuit node index per recorded series
    Trace trace;
    if (report_nodes.empty()) {
        trace.node_names = ckt.node_names;
        for (int n = 0; n < ckt.n_nodes; ++n) record.push_back(n);
    } else {
        for (const auto& name : report_nodes) {
            record.push_back(ckt.index_of(name));
            trace.node_names.push_back(name);
        }
    }
    trace.voltages.resize(record.size());
    for (auto& v : trace.voltages) v.reserve(grid.size());
    for (const auto& v : ckt.vsrcs) trace.vsource_names.push_back(v.name);
    trace.supply_currents.resize(ckt.vsrcs.size());
    for (auto& s : trace.supply_currents) s.reserve(grid.size());
    trace.times.reserve(grid.size());
    trace.step_kinds.reserve(grid.size());

    auto record_point = [&](double t, StepKind kind) {
        trace.times.push_back(t);
        trace.step_kinds.push_back(kind);
        for (std::size_t i = 0; i < record.size(); ++i)
            trace.voltages[i].push_back(record[i] < 0 ? 0.0 : solver.state()[record[i]]);
        for (std::size_t i = 0; i < ckt.vsrcs.size(); ++i)
            trace.supply_currents[i].push_back(solver.state()[ckt.vsrcs[i].branch]);
    };

    solver.solve_dc(0.0);
    solver.init_cap_state_from_x();
    record_point(0.0, StepKind::Dc);

    const double dt_min = config.dt_fine / 64.0;
    Eigen::VectorXd saved = solver.state();

    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double t0 = grid[k - 1];
        const double t1 = grid[k];
        const double dt = t1 - t0;

        // The DC point carries no capacitor-current history (initial
        // conditions may hide a nonzero one), so the first step integrates
        // with backward Euler; trapezoidal takes over afterwards.
        if (k == 1) {
            if (!solver.newton(t1, Mode::Be, dt, config.gmin, 1.0, false))
                throw NonConvergence("transient failed on the first step");
            solver.update_cap_state(solver.state(), Mode::Be, dt);
            record_point(t1, StepKind::BackwardEuler);
            continue;
        }

        saved = solver.state();
        if (solver.newton(t1, Mode::Trap, dt, config.gmin, 1.0, false)) {
            solver.update_cap_state(solver.state(), Mode::Trap, dt);
            record_point(t1, StepKind::Trapezoidal);
            continue;
        }

        // Trapezoidal step rejected: integrate the interval with backward
        // Euler sub-steps starting at dt/4, halving on further failures.
        solver.state() = saved;
        double t_cur = t0;
        double dt_try = dt / 4.0;
        while (t_cur < t1 - kTimeTiny) {
            const double step = std::min(dt_try, t1 - t_cur);
            saved = solver.state();
            if (solver.newton(t_cur + step, Mode::Be, step, config.gmin, 1.0, false)) {
                solver.update_cap_state(solver.state(), Mode::Be, step);
                t_cur += step;
                record_point(t_cur, StepKind::BackwardEuler);
            } else {
                solver.state() = saved;
                dt_try *= 0.5;
                if (dt_try < dt_min)
                    throw StepUnderflow("step underflow at t = " + std::to_string(t_cur) +
                                        " s (dt below dt_fine/64)");
            }
        }
    }
    return trace;
}

double kcl_residual(const Netlist& netlist, const SimConfig& config,
                    const std::map<std::string, double>& voltages, double t) {
    Solver solver(netlist, config);
    const Circuit& ckt = solver.circuit();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(ckt.n_unknowns);
    for (int n = 0; n < ckt.n_nodes; ++n) {
        auto it = voltages.find(ckt.node_names[n]);
        if (it != voltages.end()) x[n] = it->second;
    }
    solver.assemble(x, t, Mode::Dc, 0.0, false, config.gmin, 1.0);
    double worst = 0.0;
    for (int n = 0; n < ckt.n_nodes; ++n) {
        if (ckt.rail_nodes.count(n)) continue;  // source current absorbs these rows
        worst = std::max(worst, std::abs(solver.F_[n]));
    }
    return worst;
}

double verify_trace(const Netlist& netlist, const SimConfig& config, const Trace& trace) {
    Solver solver(netlist, config);
    const Circuit& ckt = solver.circuit();
    if (trace.node_names.size() != static_cast<std::size_t>(ckt.n_nodes))
        throw SimError("verify_trace requires a trace recording all nodes");

    std::vector<int> col(ckt.n_nodes, -1);  // circuit node -> trace series
    for (int n = 0; n < ckt.n_nodes; ++n) {
        const int i = trace.node_index(ckt.node_names[n]);
        if (i < 0) throw SimError("trace missing node '" + ckt.node_names[n] + "'");
        col[n] = i;
    }

    Eigen::VectorXd x = Eigen::VectorXd::Zero(ckt.n_unknowns);
    double worst = 0.0;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        for (int n = 0; n < ckt.n_nodes; ++n)
            x[n] = trace.voltages[static_cast<std::size_t>(col[n])][k];
        for (std::size_t s = 0; s < ckt.vsrcs.size(); ++s)
            x[ckt.vsrcs[s].branch] = trace.supply_currents[s][k];

        const double t = trace.times[k];
        Mode mode = Mode::Dc;
        double dt = 0.0;
        if (k > 0) {
            mode = trace.step_kinds[k] == StepKind::Trapezoidal ? Mode::Trap : Mode::Be;
            dt = t - trace.times[k - 1];
        }
        solver.assemble(x, t, mode, dt, false, config.gmin, 1.0);
        // Branch currents are taken from the trace, so every node row must
        // balance, rails included. The t=0 point is exempt for nodes held by
        // an initial condition (their row is satisfied by the implicit pin).
        for (int n = 0; n < ckt.n_nodes; ++n) {
            if (k == 0 && config.initial_conditions.count(ckt.node_names[n])) continue;
            worst = std::max(worst, std::abs(solver.F_[n]));
        }
        if (k + 1 < trace.size()) solver.update_cap_state(x, mode, dt);
    }
    return worst;
}

std::string trace_to_csv(const Trace& trace) {
    std::string out = "t_s";
    for (const auto& n : trace.node_names) out += "," + n;
    for (const auto& s : trace.vsource_names) out += ",i_" + s + "_a";
    out += "\n";
    char buf[64];
    for (std::size_t k = 0; k < trace.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", trace.times[k]);
        out += buf;
        for (const auto& v : trace.voltages) {
            std::snprintf(buf, sizeof buf, ",%.17g", v[k]);
            out += buf;
        }
        for (const auto& s : trace.supply_currents) {
            std::snprintf(buf, sizeof buf, ",%.17g", s[k]);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

}  // namespace latchsim
