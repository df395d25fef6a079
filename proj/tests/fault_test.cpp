#include <doctest.h>

#include <latchsim/fault.hpp>

using namespace latchsim;

namespace {

SimConfig quick_config() {
    SimConfig cfg;
    return cfg;
}

Trace reference_run(CellKind kind, int stored, double t_stop) {
    const Netlist bench = canonical_testbench(kind, {stored}, 2);
    SimConfig cfg = quick_config();
    cfg.t_stop = t_stop;
    return transient(bench, cfg);
}

}  // namespace

TEST_CASE("auto polarity opposes the stored value") {
    const Trace ref = reference_run(CellKind::LOCO, 1, 0.7e-9);
    Injection inj;
    inj.t_start = 0.6e-9;
    inj.q_inj = 2.5e-15;

    inj.node = "q";  // held high
    const ISource pull_down = make_injection(inj, ref, 0.8);
    CHECK(std::get<DoubleExpWave>(pull_down.waveform).sign == -1);

    inj.node = "n1";  // held low when storing one
    const ISource pull_up = make_injection(inj, ref, 0.8);
    CHECK(std::get<DoubleExpWave>(pull_up.waveform).sign == +1);
    CHECK(pull_up.n_plus == "n1");
    CHECK(pull_up.n_minus == "0");
}

TEST_CASE("published schedule expands verbatim") {
    CampaignSpec spec;
    spec.latch = CellKind::LOCO;
    const auto sched = campaign_schedule(spec);
    REQUIRE(sched.size() == 16);
    const std::vector<std::pair<std::string, double>> expect = {
        {"n0", 0.50e-9}, {"n0", 0.60e-9}, {"n0", 1.00e-9}, {"n0", 1.10e-9},
        {"n1", 1.50e-9}, {"n1", 1.60e-9}, {"n4", 2.00e-9}, {"n4", 2.10e-9},
        {"n3", 2.50e-9}, {"n3", 2.60e-9}, {"n5", 3.00e-9}, {"n5", 3.10e-9},
        {"q", 3.53e-9},  {"q", 3.65e-9},  {"n2", 4.50e-9}, {"n2", 4.60e-9},
    };
    CHECK(sched == expect);

    // every strike lands in a hold phase of the canonical clock
    const ClockSpec clock;
    for (const auto& [node, t] : sched) {
        CAPTURE(node);
        CHECK(clock.in_hold(t));
    }

    spec.schedule = ScheduleKind::Exhaustive;
    CHECK(campaign_schedule(spec).size() == 7);  // one per state node
}

TEST_CASE("null injection classifies as recovered with zero excursion") {
    const double t_start = 0.6e-9;
    const Trace ref = reference_run(CellKind::LOCO, 0, 0.76e-9);
    Injection inj;
    inj.node = "n1";
    inj.t_start = t_start;
    inj.q_inj = 0.0;

    const auto logic = latch_hold_state(CellKind::LOCO, 0);
    const auto expected = expected_state_from_reference(ref, 0.745e-9, logic, 0.8);
    const auto outcome = classify(ref, inj, expected, {t_start + 150e-12, 0.745e-9}, 0);
    CHECK(outcome.classification == UpsetClass::Recovered);
    CHECK(outcome.v_excursion < 1e-3);
    REQUIRE(outcome.t_recover.has_value());
    CHECK(*outcome.t_recover == 0.0);
}

TEST_CASE("classification needs the readout window") {
    const Trace ref = reference_run(CellKind::LOCO, 0, 0.7e-9);
    Injection inj;
    inj.node = "n1";
    inj.t_start = 0.6e-9;
    inj.q_inj = 1e-15;
    const auto logic = latch_hold_state(CellKind::LOCO, 0);
    const auto expected = expected_state_from_reference(ref, 0.69e-9, logic, 0.8);
    CHECK_THROWS_AS((void)classify(ref, inj, expected, {0.9e-9}, 0), SimError);
    CHECK_THROWS_AS((void)classify(ref, inj, expected, {}, 0), SimError);
}

TEST_CASE("single strike on a hardened node recovers") {
    CampaignSpec spec;
    spec.latch = CellKind::LOCO;
    spec.nodes = {"n1"};
    spec.stored_values = {0};
    const auto result = run_campaign(spec, quick_config());
    REQUIRE(result.outcomes.size() == 2);  // 1.50 ns and 1.60 ns
    for (const auto& o : result.outcomes) {
        CAPTURE(o.injection.t_start);
        CHECK(o.classification == UpsetClass::Recovered);
        CHECK(o.v_excursion > 0.08);  // the strike visibly moved the node
        CHECK(o.t_recover.has_value());
    }
}

TEST_CASE("pass-held node recovers to its degraded restore level") {
    // Strike n0 while it holds a one: the feedback pass device restores it to
    // one n-threshold below the rail, which counts as recovered.
    CampaignSpec spec;
    spec.latch = CellKind::LOCO;
    spec.nodes = {"n0"};
    spec.stored_values = {1};
    spec.schedule = ScheduleKind::Exhaustive;
    const auto result = run_campaign(spec, quick_config());
    REQUIRE(result.outcomes.size() == 1);
    CHECK(result.outcomes[0].classification == UpsetClass::Recovered);
}

TEST_CASE("excursion shrinks with the injected charge") {
    // sampled monotonicity probe: a smaller recovered charge may not overshoot
    // a larger one by more than measurement noise
    auto excursion_at = [&](double q) {
        CampaignSpec spec;
        spec.latch = CellKind::LOCO;
        spec.nodes = {"n1"};
        spec.stored_values = {0};
        spec.schedule = ScheduleKind::Exhaustive;
        spec.q_inj = q;
        const auto result = run_campaign(spec, quick_config());
        REQUIRE(result.outcomes.size() == 1);
        REQUIRE(result.outcomes[0].classification == UpsetClass::Recovered);
        return result.outcomes[0].v_excursion;
    };
    const double e_small = excursion_at(1.0e-15);
    const double e_large = excursion_at(2.5e-15);
    CHECK(e_small <= e_large + 5e-3);
}

TEST_CASE("unhardened keeper node upsets") {
    CampaignSpec spec;
    spec.latch = CellKind::StandardLatch;
    spec.nodes = {"n_keep"};
    spec.stored_values = {1};
    spec.schedule = ScheduleKind::Exhaustive;
    const auto result = run_campaign(spec, quick_config());
    REQUIRE(result.outcomes.size() == 1);
    CHECK(result.outcomes[0].classification == UpsetClass::Upset);
    CHECK(!result.all_recovered());
}

TEST_CASE("output strike in transparent mode is re-driven from the input") {
    CampaignSpec spec;
    spec.latch = CellKind::LOCO;
    spec.schedule = ScheduleKind::Custom;
    spec.custom_schedule = {{"q", 0.35e-9}};  // transparent phase
    spec.stored_values = {0};
    const auto result = run_campaign(spec, quick_config());
    REQUIRE(result.outcomes.size() == 1);
    CHECK(result.outcomes[0].classification == UpsetClass::Recovered);
}

TEST_CASE("one strike source per simulation") {
    // the bench carries no strike sources of its own, so composing it with
    // one injection yields exactly one double-exponential source
    const Netlist bench = canonical_testbench(CellKind::LOCO, {0}, 2);
    auto count_strikes = [](const Netlist& n) {
        int count = 0;
        for (const auto& d : n.devices) {
            if (const auto* i = std::get_if<ISource>(&d))
                count += std::holds_alternative<DoubleExpWave>(i->waveform);
            if (const auto* v = std::get_if<VSource>(&d))
                count += std::holds_alternative<DoubleExpWave>(v->waveform);
        }
        return count;
    };
    CHECK(count_strikes(bench) == 0);

    const Trace ref = reference_run(CellKind::LOCO, 0, 0.7e-9);
    Injection inj;
    inj.node = "n1";
    inj.t_start = 0.6e-9;
    inj.q_inj = 2.5e-15;
    Netlist net = bench;
    net.add(make_injection(inj, ref, 0.8));
    CHECK(count_strikes(net) == 1);
}

TEST_CASE("campaign report is machine-readable and complete") {
    CampaignSpec spec;
    spec.latch = CellKind::LOCO;
    spec.nodes = {"n1"};
    spec.stored_values = {0};
    spec.schedule = ScheduleKind::Exhaustive;
    const SimConfig cfg = quick_config();
    const auto result = run_campaign(spec, cfg);
    const std::string json = campaign_report_json(result, cfg);
    CHECK(json.find("\"latch\": \"loco\"") != std::string::npos);
    CHECK(json.find("\"q_inj_fC\": 2.5") != std::string::npos);
    CHECK(json.find("\"classification\"") != std::string::npos);
    CHECK(json.find("\"config\"") != std::string::npos);
    CHECK(json.find("\"clock\"") != std::string::npos);
}
