#include <doctest.h>

#include <latchsim/metrics.hpp>
#include <latchsim/rng.hpp>

#include "oracles.hpp"

using namespace latchsim;

namespace {

/// Hand-built trace carrying one supply-current series.
Trace synthetic_current_trace(const std::vector<double>& times, const std::vector<double>& amps) {
    Trace tr;
    tr.times = times;
    tr.node_names = {"x"};
    tr.voltages = {std::vector<double>(times.size(), 0.0)};
    tr.vsource_names = {"vvdd"};
    tr.supply_currents = {amps};
    tr.step_kinds.assign(times.size(), StepKind::Trapezoidal);
    return tr;
}

}  // namespace

TEST_CASE("product and delta arithmetic anchors") {
    // published-rounded operands reproduce the published products
    CHECK(std::abs(pdp(0.18e-6, 5.24e-12) * 1e18 - 0.93) <= 0.02);
    CHECK(std::abs(pdp(0.74e-6, 19.5e-12) * 1e18 - 14.48) <= 0.1);
    CHECK(pdp(0.0, 123.0) == 0.0);
    CHECK((5.86 + 4.62) / 2 == doctest::Approx(5.24));

    CHECK(std::abs(relative_delta(23, 24) * 100 - (-4.17)) <= 0.01);
    CHECK(std::abs(relative_delta(23, 40) * 100 - (-42.50)) <= 0.01);
    CHECK(relative_delta(7.5, 7.5) == 0.0);
    CHECK_THROWS_AS(relative_delta(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("population statistics") {
    const std::vector<double> v{1.0, 2.0, 3.0};
    CHECK(stddev(v) == doctest::Approx(0.8165).epsilon(1e-4));
    CHECK(avg_dev(v) == doctest::Approx(0.6667).epsilon(1e-4));

    const std::vector<double> c(17, 4.2);
    CHECK(stddev(c) <= 1e-12);
    CHECK(avg_dev(c) <= 1e-12);

    CHECK_THROWS_AS((void)stddev(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS((void)avg_dev(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("statistics match a brute-force oracle") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.next_u64() % 40;
        std::vector<double> xs(n);
        for (auto& x : xs) x = 10.0 * rng.next_unit() - 5.0;

        const double sigma = stddev(xs);
        const double ad = avg_dev(xs);
        CHECK(sigma == doctest::Approx(oracles::stddev_brute(xs)).epsilon(1e-12));
        CHECK(ad == doctest::Approx(oracles::avg_dev_brute(xs)).epsilon(1e-12));
        CHECK(ad <= sigma + 1e-15);  // mean absolute deviation never exceeds sigma

        // translation invariance and |k| scaling
        std::vector<double> shifted(xs), scaled(xs);
        for (auto& x : shifted) x += 3.25;
        for (auto& x : scaled) x *= -2.5;
        CHECK(stddev(shifted) == doctest::Approx(sigma).epsilon(1e-9));
        CHECK(stddev(scaled) == doctest::Approx(2.5 * sigma).epsilon(1e-9));
        CHECK(avg_dev(shifted) == doctest::Approx(ad).epsilon(1e-9));
        CHECK(avg_dev(scaled) == doctest::Approx(2.5 * ad).epsilon(1e-9));
    }
}

TEST_CASE("average rectified current") {
    SUBCASE("constant current passes through") {
        std::vector<double> t, i;
        for (int k = 0; k <= 100; ++k) {
            t.push_back(k * 1e-12);
            i.push_back(1e-6);
        }
        const Trace tr = synthetic_current_trace(t, i);
        CHECK(avg_current(tr, 10e-12, 90e-12) == doctest::Approx(1e-6).epsilon(1e-12));
    }
    SUBCASE("sign-alternating series rectifies") {
        std::vector<double> t, i;
        for (int k = 0; k <= 100; ++k) {
            t.push_back(k * 1e-12);
            i.push_back(k % 2 ? 1e-6 : -1e-6);
        }
        // |i| is 1 uA at every sample, so the rectified average is 1 uA
        const Trace tr = synthetic_current_trace(t, i);
        const double avg = avg_current(tr, 0.0, 100e-12);
        CHECK(avg == doctest::Approx(1e-6).epsilon(1e-12));
        for (auto& x : i) x = -x;
        const Trace flipped = synthetic_current_trace(t, i);
        CHECK(avg_current(flipped, 0.0, 100e-12) == doctest::Approx(avg).epsilon(1e-12));
    }
    SUBCASE("window outside the trace throws") {
        const Trace tr = synthetic_current_trace({0.0, 1e-12}, {0.0, 0.0});
        CHECK_THROWS_AS((void)avg_current(tr, 0.0, 2e-12), SimError);
        CHECK_THROWS_AS((void)avg_current(tr, 1e-12, 0.5e-12), SimError);
    }
}

TEST_CASE("delay of a signal against itself is zero") {
    std::vector<double> t, v;
    for (int k = 0; k <= 20; ++k) {
        t.push_back(k * 1e-12);
        v.push_back(k < 10 ? 0.0 : 0.8);
    }
    Trace tr;
    tr.times = t;
    tr.node_names = {"sig"};
    tr.voltages = {v};
    tr.step_kinds.assign(t.size(), StepKind::Trapezoidal);
    CHECK(measure_delay(tr, "sig", 0.0, "sig", 0.8) == 0.0);
    CHECK_THROWS_AS((void)measure_delay(tr, "sig", 15e-12, "sig", 0.8), SimError);
}

TEST_CASE("power measurement reacts to activity and capacitance") {
    SimConfig cfg;
    cfg.dt_nominal = 200e-15;  // coarse grid is fine for an energy integral
    cfg.dt_fine = 200e-15;
    const double toggling = measure_power(CellKind::StandardLatch, cfg);
    CHECK(toggling > 0.0);

    // no-activity control: pinned clock, constant data
    SimConfig cfg2 = cfg;
    cfg2.t_stop = 5e-9;
    const Netlist quiet = pinned_clock_testbench(CellKind::StandardLatch, true, DcWave{0.0});
    const Trace tr = transient(quiet, cfg2);
    double q = 0.0;
    for (std::size_t k = 1; k < tr.size(); ++k) {
        if (tr.times[k - 1] < 1e-9) continue;
        q += 0.5 * (tr.supply_current_at("vvdd", tr.times[k - 1]) +
                    tr.supply_current_at("vvdd", tr.times[k])) *
             (tr.times[k] - tr.times[k - 1]);
    }
    const double static_power = 0.8 * q / 4e-9;
    CHECK(static_power < 0.01 * toggling);

    // more node capacitance means more dynamic power
    SimConfig heavy = cfg;
    heavy.node_cap_floor = 2.0 * cfg.node_cap_floor;
    CHECK(measure_power(CellKind::StandardLatch, heavy) > toggling);
}

TEST_CASE("setup and hold searches certify their brackets") {
    SimConfig cfg;
    cfg.dt_nominal = 200e-15;
    cfg.dt_fine = 200e-15;

    const auto setup = find_setup_time(CellKind::StandardLatch, cfg);
    REQUIRE(setup.has_value());
    // returned margin passes for both transition directions...
    CHECK(setup_hold_probe(CellKind::StandardLatch, cfg, 1, *setup, true));
    CHECK(setup_hold_probe(CellKind::StandardLatch, cfg, 0, *setup, true));
    // ...and is minimal: a step below the resolution fails somewhere
    const bool below_fails = !setup_hold_probe(CellKind::StandardLatch, cfg, 1, *setup - 0.06e-12, true) ||
                             !setup_hold_probe(CellKind::StandardLatch, cfg, 0, *setup - 0.06e-12, true);
    CHECK(below_fails);

    const auto hold = find_hold_time(CellKind::StandardLatch, cfg);
    if (hold) {
        CHECK(setup_hold_probe(CellKind::StandardLatch, cfg, 1, *hold, false));
        CHECK(setup_hold_probe(CellKind::StandardLatch, cfg, 0, *hold, false));
        CHECK(*hold >= -50e-12);
        CHECK(*hold <= 50e-12);
    }
}

TEST_CASE("latch characterization keeps its arithmetic identities") {
    SimConfig cfg;
    cfg.dt_nominal = 200e-15;
    cfg.dt_fine = 200e-15;
    const LatchMetrics m = measure_latch(CellKind::StandardLatch, cfg, false);
    CHECK(m.power > 0.0);
    CHECK(m.t_avg == 0.5 * (m.t_dq + m.t_cq));
    CHECK(m.pdp == m.power * m.t_avg);
    CHECK(m.transistor_count == 12);
    CHECK(!m.q_crit.has_value());
    const std::string json = metrics_report_json(CellKind::StandardLatch, m, cfg);
    CHECK(json.find("\"n_trans\": 12") != std::string::npos);
    CHECK(json.find("\"q_crit_fC\": null") != std::string::npos);
}

TEST_CASE("critical-charge search degenerate bound") {
    SimConfig cfg;
    const auto r = find_qcrit(CellKind::StandardLatch, "n_keep", 1, cfg, 0.0);
    const auto* bound = std::get_if<ExceedsBound>(&r.result);
    REQUIRE(bound != nullptr);
    CHECK(bound->bound == 0.0);
}

TEST_CASE("critical charge of the keeper node is finite and certified") {
    SimConfig cfg;
    const double q_max = 20e-15;
    const auto r = find_qcrit(CellKind::StandardLatch, "n_keep", 1, cfg, q_max, 0.1e-15);
    const double* q = std::get_if<double>(&r.result);
    REQUIRE(q != nullptr);
    CHECK(*q > 0.0);
    CHECK(*q <= q_max);
    CHECK(r.first_upset - r.last_recovered <= 0.1e-15 * 1.001);
}
