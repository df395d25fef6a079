#include "latchsim/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <queue>
#include <set>
#include <sstream>

namespace latchsim {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ParseError(msg + ", line " + std::to_string(line));
}

std::vector<std::string> tokenize(const std::string& line) {
    std::string padded;
    padded.reserve(line.size() + 8);
    for (char c : line) {
        if (c == '(' || c == ')') {
            padded += ' ';
            padded += c;
            padded += ' ';
        } else {
            padded += c;
        }
    }
    std::istringstream ss(padded);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(lower(tok));
    return tokens;
}

double parse_value_at(const std::string& token, int line) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const double base = std::strtod(begin, &end);
    if (end == begin) fail(line, "malformed parameter '" + token + "'");
    if (*end == '\0') return base;
    if (end + 1 != begin + token.size())
        fail(line, "malformed parameter '" + token + "'");
    switch (std::tolower(static_cast<unsigned char>(*end))) {
        case 'f': return base * 1e-15;
        case 'p': return base * 1e-12;
        case 'n': return base * 1e-9;
        case 'u': return base * 1e-6;
        case 'm': return base * 1e-3;
        case 'k': return base * 1e3;
        default: fail(line, "malformed parameter '" + token + "'");
    }
}

/// Extracts the argument list between '(' and ')' starting at tokens[pos].
std::vector<double> paren_args(const std::vector<std::string>& tokens, std::size_t pos,
                               int line) {
    if (pos >= tokens.size() || tokens[pos] != "(") fail(line, "expected '('");
    std::vector<double> args;
    ++pos;
    while (pos < tokens.size() && tokens[pos] != ")") {
        args.push_back(parse_value_at(tokens[pos], line));
        ++pos;
    }
    if (pos >= tokens.size()) fail(line, "missing ')'");
    if (pos + 1 != tokens.size()) fail(line, "trailing tokens after ')'");
    return args;
}

void check_pulse(const PulseWave& p, int line) {
    if (p.t_rise <= 0 || p.t_fall <= 0) fail(line, "pulse rise/fall times must be positive");
    if (p.period <= p.t_rise + p.t_width + p.t_fall)
        fail(line, "pulse period must exceed rise + width + fall");
}

void check_pwl(const PwlWave& w, int line) {
    for (std::size_t i = 1; i < w.points.size(); ++i)
        if (w.points[i].first <= w.points[i - 1].first)
            fail(line, "pwl times must be strictly increasing");
}

void check_double_exp(const DoubleExpWave& w, int line) {
    if (w.tau1 == w.tau2) fail(line, "snu time constants must differ");
    if (w.q_inj < 0) fail(line, "snu charge must be non-negative");
    if (w.sign != 1 && w.sign != -1) fail(line, "snu sign must be +1 or -1");
}

Waveform parse_source_waveform(const std::vector<std::string>& tokens, std::size_t pos,
                               int line, bool current_source) {
    const std::string& kw = tokens[pos];
    if (current_source) {
        if (kw != "snu") fail(line, "unknown card");
        auto args = paren_args(tokens, pos + 1, line);
        if (args.size() != 5) fail(line, "SNU takes 5 arguments");
        DoubleExpWave w{args[0], args[1], args[2], args[3], static_cast<int>(args[4])};
        check_double_exp(w, line);
        return w;
    }
    if (kw == "dc") {
        if (pos + 2 != tokens.size()) fail(line, "DC takes 1 argument");
        return DcWave{parse_value_at(tokens[pos + 1], line)};
    }
    if (kw == "pulse") {
        auto args = paren_args(tokens, pos + 1, line);
        if (args.size() != 7) fail(line, "PULSE takes 7 arguments");
        PulseWave w{args[0], args[1], args[2], args[3], args[4], args[5], args[6]};
        check_pulse(w, line);
        return w;
    }
    if (kw == "pwl") {
        auto args = paren_args(tokens, pos + 1, line);
        if (args.size() < 2 || args.size() % 2 != 0) fail(line, "PWL takes (t v) pairs");
        PwlWave w;
        for (std::size_t i = 0; i < args.size(); i += 2) w.points.emplace_back(args[i], args[i + 1]);
        check_pwl(w, line);
        return w;
    }
    fail(line, "unknown card");
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string wave_text(const Waveform& w) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DcWave>) {
                return "DC " + fmt(v.v);
            } else if constexpr (std::is_same_v<T, PulseWave>) {
                return "PULSE(" + fmt(v.v1) + " " + fmt(v.v2) + " " + fmt(v.t_delay) + " " +
                       fmt(v.t_rise) + " " + fmt(v.t_fall) + " " + fmt(v.t_width) + " " +
                       fmt(v.period) + ")";
            } else if constexpr (std::is_same_v<T, PwlWave>) {
                std::string s = "PWL(";
                for (std::size_t i = 0; i < v.points.size(); ++i) {
                    if (i) s += " ";
                    s += fmt(v.points[i].first) + " " + fmt(v.points[i].second);
                }
                return s + ")";
            } else {
                return "SNU(" + fmt(v.q_inj) + " " + fmt(v.tau1) + " " + fmt(v.tau2) + " " +
                       fmt(v.t_start) + " " + std::to_string(v.sign) + ")";
            }
        },
        w);
}

bool wave_equal(const Waveform& a, const Waveform& b) {
    if (a.index() != b.index()) return false;
    if (const auto* d = std::get_if<DcWave>(&a)) return d->v == std::get<DcWave>(b).v;
    if (const auto* p = std::get_if<PulseWave>(&a)) {
        const auto& q = std::get<PulseWave>(b);
        return p->v1 == q.v1 && p->v2 == q.v2 && p->t_delay == q.t_delay &&
               p->t_rise == q.t_rise && p->t_fall == q.t_fall && p->t_width == q.t_width &&
               p->period == q.period;
    }
    if (const auto* w = std::get_if<PwlWave>(&a)) return w->points == std::get<PwlWave>(b).points;
    const auto& d1 = std::get<DoubleExpWave>(a);
    const auto& d2 = std::get<DoubleExpWave>(b);
    return d1.q_inj == d2.q_inj && d1.tau1 == d2.tau1 && d1.tau2 == d2.tau2 &&
           d1.t_start == d2.t_start && d1.sign == d2.sign;
}

bool params_equal(const MosfetParams& a, const MosfetParams& b) {
    return a.polarity == b.polarity && a.vth0 == b.vth0 && a.kp0 == b.kp0 &&
           a.lambda == b.lambda && a.cg0 == b.cg0 && a.tc_vth == b.tc_vth &&
           a.mu_exp == b.mu_exp && a.t_ref == b.t_ref;
}

}  // namespace

const std::string& device_name(const Device& d) {
    return std::visit([](const auto& dev) -> const std::string& { return dev.name; }, d);
}

bool Netlist::has_node(const std::string& n) const {
    const std::string key = lower(n);
    return std::find(nodes.begin(), nodes.end(), key) != nodes.end();
}

std::string Netlist::add_node(const std::string& n) {
    std::string key = lower(n);
    if (std::find(nodes.begin(), nodes.end(), key) == nodes.end()) nodes.push_back(key);
    return key;
}

void Netlist::add(Device d) {
    std::visit(
        [this](auto& dev) {
            dev.name = lower(dev.name);
            using T = std::decay_t<decltype(dev)>;
            if constexpr (std::is_same_v<T, Mosfet>) {
                dev.drain = add_node(dev.drain);
                dev.gate = add_node(dev.gate);
                dev.source = add_node(dev.source);
                dev.model = lower(dev.model);
            } else if constexpr (std::is_same_v<T, Capacitor>) {
                dev.n1 = add_node(dev.n1);
                dev.n2 = add_node(dev.n2);
            } else {
                dev.n_plus = add_node(dev.n_plus);
                dev.n_minus = add_node(dev.n_minus);
            }
        },
        d);
    devices.push_back(std::move(d));
}

const MosfetParams& Netlist::model_for(const std::string& name) const {
    const std::string key = lower(name);
    auto it = models.find(key);
    if (it != models.end()) return it->second;
    static const MosfetParams nmos = default_nmos();
    static const MosfetParams pmos = default_pmos();
    if (key == "nmos") return nmos;
    if (key == "pmos") return pmos;
    throw std::out_of_range("unknown model '" + name + "'");
}

std::size_t Netlist::mosfet_count() const {
    std::size_t n = 0;
    for (const auto& d : devices)
        if (std::holds_alternative<Mosfet>(d)) ++n;
    return n;
}

double parse_value(const std::string& token) { return parse_value_at(lower(token), 0); }

Netlist parse_netlist(const std::string& text, const std::string& name) {
    Netlist net;
    net.name = name;
    std::set<std::string> seen_names;
    bool ended = false;

    std::istringstream stream(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        const auto first = raw.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (raw[first] == '*') continue;
        if (ended) fail(line_no, "content after .end");

        auto tokens = tokenize(raw);
        const std::string& head = tokens[0];

        if (head == ".end") {
            if (tokens.size() != 1) fail(line_no, "trailing tokens after .end");
            ended = true;
            continue;
        }
        if (head == ".model") {
            if (tokens.size() < 3) fail(line_no, "malformed .model card");
            const std::string& mname = tokens[1];
            MosfetParams params;
            if (tokens[2] == "nmos") params = default_nmos();
            else if (tokens[2] == "pmos") params = default_pmos();
            else fail(line_no, "model polarity must be NMOS or PMOS");
            for (std::size_t i = 3; i < tokens.size(); ++i) {
                const auto eq = tokens[i].find('=');
                if (eq == std::string::npos) fail(line_no, "malformed parameter '" + tokens[i] + "'");
                const std::string key = tokens[i].substr(0, eq);
                const double val = parse_value_at(tokens[i].substr(eq + 1), line_no);
                if (key == "vth") params.vth0 = val;
                else if (key == "kp") params.kp0 = val;
                else if (key == "lambda") params.lambda = val;
                else if (key == "cg") params.cg0 = val;
                else fail(line_no, "malformed parameter '" + tokens[i] + "'");
            }
            if (params.kp0 <= 0) fail(line_no, "kp must be positive");
            if (params.cg0 < 0) fail(line_no, "cg must be non-negative");
            if ((params.polarity == Polarity::N) != (params.vth0 > 0))
                fail(line_no, "vth sign must match model polarity");
            if (!net.models.emplace(mname, params).second)
                fail(line_no, "duplicate model name '" + mname + "'");
            continue;
        }
        if (head[0] == '.') fail(line_no, "unknown card");

        if (!seen_names.insert(head).second) fail(line_no, "duplicate device name '" + head + "'");

        switch (head[0]) {
            case 'm': {
                if (tokens.size() != 6) fail(line_no, "mosfet card takes 5 fields");
                const std::string& spec = tokens[5];
                if (spec.rfind("w/l=", 0) != 0) fail(line_no, "expected W/L=<ratio>");
                const double wl = parse_value_at(spec.substr(4), line_no);
                if (wl <= 0) fail(line_no, "w_over_l must be positive");
                // polarity resolved against models after all cards are read
                net.add(Mosfet{head, tokens[1], tokens[2], tokens[3], Polarity::N, wl, tokens[4]});
                break;
            }
            case 'c': {
                if (tokens.size() != 4) fail(line_no, "capacitor card takes 3 fields");
                const double value = parse_value_at(tokens[3], line_no);
                if (value <= 0) fail(line_no, "capacitor value must be positive");
                net.add(Capacitor{head, tokens[1], tokens[2], value});
                break;
            }
            case 'v':
                if (tokens.size() < 4) fail(line_no, "voltage source card too short");
                net.add(VSource{head, tokens[1], tokens[2],
                                parse_source_waveform(tokens, 3, line_no, false)});
                break;
            case 'i':
                if (tokens.size() < 4) fail(line_no, "current source card too short");
                net.add(ISource{head, tokens[1], tokens[2],
                                parse_source_waveform(tokens, 3, line_no, true)});
                break;
            default: fail(line_no, "unknown card");
        }
    }
    if (!ended) throw ParseError("missing .end");

    for (auto& d : net.devices) {
        if (auto* m = std::get_if<Mosfet>(&d)) {
            try {
                m->polarity = net.model_for(m->model).polarity;
            } catch (const std::out_of_range&) {
                throw ParseError("unknown model '" + m->model + "' for device '" + m->name + "'");
            }
        }
    }
    return net;
}

std::string serialize(const Netlist& netlist) {
    std::string out = "* " + (netlist.name.empty() ? std::string("netlist") : netlist.name) + "\n";
    for (const auto& [name, p] : netlist.models) {
        out += ".model " + name + (p.polarity == Polarity::N ? " NMOS" : " PMOS") +
               " VTH=" + fmt(p.vth0) + " KP=" + fmt(p.kp0) + " LAMBDA=" + fmt(p.lambda) +
               " CG=" + fmt(p.cg0) + "\n";
    }
    for (const auto& d : netlist.devices) {
        out += std::visit(
            [](const auto& dev) -> std::string {
                using T = std::decay_t<decltype(dev)>;
                if constexpr (std::is_same_v<T, Mosfet>) {
                    return dev.name + " " + dev.drain + " " + dev.gate + " " + dev.source + " " +
                           dev.model + " W/L=" + fmt(dev.w_over_l);
                } else if constexpr (std::is_same_v<T, Capacitor>) {
                    return dev.name + " " + dev.n1 + " " + dev.n2 + " " + fmt(dev.value);
                } else {
                    return dev.name + " " + dev.n_plus + " " + dev.n_minus + " " +
                           wave_text(dev.waveform);
                }
            },
            d);
        out += "\n";
    }
    out += ".end\n";
    return out;
}

bool structurally_equal(const Netlist& a, const Netlist& b) {
    std::set<std::string> na(a.nodes.begin(), a.nodes.end());
    std::set<std::string> nb(b.nodes.begin(), b.nodes.end());
    if (na != nb) return false;
    if (a.devices.size() != b.devices.size()) return false;
    for (std::size_t i = 0; i < a.devices.size(); ++i) {
        const Device& da = a.devices[i];
        const Device& db = b.devices[i];
        if (da.index() != db.index()) return false;
        bool same = std::visit(
            [&](const auto& x) -> bool {
                using T = std::decay_t<decltype(x)>;
                const auto& y = std::get<T>(db);
                if constexpr (std::is_same_v<T, Mosfet>) {
                    return x.name == y.name && x.drain == y.drain && x.gate == y.gate &&
                           x.source == y.source && x.polarity == y.polarity &&
                           x.w_over_l == y.w_over_l && x.model == y.model;
                } else if constexpr (std::is_same_v<T, Capacitor>) {
                    return x.name == y.name && x.n1 == y.n1 && x.n2 == y.n2 && x.value == y.value;
                } else {
                    return x.name == y.name && x.n_plus == y.n_plus && x.n_minus == y.n_minus &&
                           wave_equal(x.waveform, y.waveform);
                }
            },
            da);
        if (!same) return false;
    }
    if (a.models.size() != b.models.size()) return false;
    for (auto ita = a.models.begin(), itb = b.models.begin(); ita != a.models.end(); ++ita, ++itb) {
        if (ita->first != itb->first || !params_equal(ita->second, itb->second)) return false;
    }
    return true;
}

std::vector<Diagnostic> validate(const Netlist& netlist) {
    std::vector<Diagnostic> diags;
    auto error = [&](std::string m) {
        diags.push_back({Diagnostic::Severity::Error, std::move(m)});
    };
    auto warning = [&](std::string m) {
        diags.push_back({Diagnostic::Severity::Warning, std::move(m)});
    };

    if (!netlist.has_node("0")) error("ground node 0 missing");

    std::set<std::string> names;
    std::set<std::string> node_set(netlist.nodes.begin(), netlist.nodes.end());
    bool powered = false;

    for (const auto& d : netlist.devices) {
        const std::string& nm = device_name(d);
        if (!names.insert(nm).second) error("duplicate device name '" + nm + "'");

        std::visit(
            [&](const auto& dev) {
                using T = std::decay_t<decltype(dev)>;
                if constexpr (std::is_same_v<T, Mosfet>) {
                    if (dev.w_over_l <= 0) error("w_over_l must be positive for '" + dev.name + "'");
                    for (const std::string* n : {&dev.drain, &dev.gate, &dev.source})
                        if (!node_set.count(*n)) error("undeclared node '" + *n + "'");
                    try {
                        (void)netlist.model_for(dev.model);
                    } catch (const std::out_of_range&) {
                        error("unknown model '" + dev.model + "' for device '" + dev.name + "'");
                    }
                } else if constexpr (std::is_same_v<T, Capacitor>) {
                    if (dev.value <= 0) error("capacitor value must be positive for '" + dev.name + "'");
                    if (!node_set.count(dev.n1) || !node_set.count(dev.n2))
                        error("undeclared node on '" + dev.name + "'");
                } else {
                    if (!node_set.count(dev.n_plus) || !node_set.count(dev.n_minus))
                        error("undeclared node on '" + dev.name + "'");
                    if constexpr (std::is_same_v<T, VSource>) {
                        if (dev.n_plus == "vdd" || dev.n_minus == "vdd") powered = true;
                    }
                    // waveform invariants
                    if (const auto* p = std::get_if<PulseWave>(&dev.waveform)) {
                        if (p->t_rise <= 0 || p->t_fall <= 0)
                            error("pulse rise/fall must be positive on '" + dev.name + "'");
                        else if (p->period <= p->t_rise + p->t_width + p->t_fall)
                            error("pulse period too short on '" + dev.name + "'");
                    } else if (const auto* w = std::get_if<PwlWave>(&dev.waveform)) {
                        for (std::size_t i = 1; i < w->points.size(); ++i)
                            if (w->points[i].first <= w->points[i - 1].first) {
                                error("pwl times not strictly increasing on '" + dev.name + "'");
                                break;
                            }
                    } else if (const auto* x = std::get_if<DoubleExpWave>(&dev.waveform)) {
                        if (x->tau1 == x->tau2) error("snu time constants equal on '" + dev.name + "'");
                        if (x->q_inj < 0) error("snu charge negative on '" + dev.name + "'");
                    }
                }
            },
            d);
    }

    if (netlist.has_node("vdd") || !powered) {
        if (!powered) error("unpowered: no voltage source references vdd");
    }

    // DC-path scan: rails are ground and every voltage-source terminal;
    // MOSFET channels conduct, capacitors and current sources do not.
    std::map<std::string, std::vector<std::string>> adj;
    std::queue<std::string> frontier;
    std::set<std::string> reached{"0"};
    frontier.push("0");
    for (const auto& d : netlist.devices) {
        if (const auto* m = std::get_if<Mosfet>(&d)) {
            adj[m->drain].push_back(m->source);
            adj[m->source].push_back(m->drain);
        } else if (const auto* v = std::get_if<VSource>(&d)) {
            adj[v->n_plus].push_back(v->n_minus);
            adj[v->n_minus].push_back(v->n_plus);
            for (const std::string* n : {&v->n_plus, &v->n_minus})
                if (reached.insert(*n).second) frontier.push(*n);
        }
    }
    while (!frontier.empty()) {
        const std::string n = frontier.front();
        frontier.pop();
        for (const auto& next : adj[n])
            if (reached.insert(next).second) frontier.push(next);
    }
    for (const auto& n : netlist.nodes)
        if (!reached.count(n)) warning("floating node '" + n + "' (no DC path to a rail)");

    return diags;
}

}  // namespace latchsim
