#include <doctest.h>

#include <latchsim/devices.hpp>
#include <latchsim/rng.hpp>
#include <latchsim/waveform.hpp>

#include "oracles.hpp"

using namespace latchsim;

namespace {
const EnvCondition kNominal{};
const MosfetParams kN = default_nmos();
const MosfetParams kP = default_pmos();
}  // namespace

TEST_CASE("square-law regions at nominal bias") {
    // cutoff: vgs at 0.2 V is below the 0.3 V threshold
    CHECK(mosfet_ids(kN, kNominal, 1.0, 0.2, 0.8) == 0.0);
    // saturation: 0.5 * 200u * 0.5^2 * (1 + 0.1*0.8)
    CHECK(mosfet_ids(kN, kNominal, 1.0, 0.8, 0.8) == doctest::Approx(27.0e-6).epsilon(1e-12));
    // zero drain bias
    CHECK(mosfet_ids(kN, kNominal, 1.0, 0.8, 0.0) == 0.0);
}

TEST_CASE("analytic derivatives") {
    auto [gm_off, gds_off] = mosfet_gm_gds(kN, kNominal, 1.0, 0.2, 0.8);
    CHECK(gm_off == 0.0);
    CHECK(gds_off == 0.0);

    auto [gm_sat, gds_sat] = mosfet_gm_gds(kN, kNominal, 1.0, 0.8, 0.8);
    CHECK(gm_sat == doctest::Approx(108.0e-6).epsilon(1e-12));
    (void)gds_sat;

    // finite-difference certification away from region boundaries
    struct Pt {
        const MosfetParams* p;
        double vgs, vds;
    };
    const Pt pts[] = {{&kN, 0.8, 0.1},   {&kN, 0.8, 0.8},   {&kN, 0.5, 0.05}, {&kN, 0.7, -0.4},
                      {&kP, -0.8, -0.1}, {&kP, -0.8, -0.8}, {&kP, -0.5, -0.05}};
    for (const auto& pt : pts) {
        auto [gm, gds] = mosfet_gm_gds(*pt.p, kNominal, 2.0, pt.vgs, pt.vds);
        const double gm_fd = oracles::fdiff(
            [&](double v) { return mosfet_ids(*pt.p, kNominal, 2.0, v, pt.vds); }, pt.vgs);
        const double gds_fd = oracles::fdiff(
            [&](double v) { return mosfet_ids(*pt.p, kNominal, 2.0, pt.vgs, v); }, pt.vds);
        const double scale = std::max({std::abs(gm_fd), std::abs(gds_fd), 1e-9});
        CHECK(std::abs(gm - gm_fd) / scale < 1e-4);
        CHECK(std::abs(gds - gds_fd) / scale < 1e-4);
    }
}

TEST_CASE("continuity and monotonicity") {
    // continuity across the triode/saturation boundary and around vds = 0
    const double vov = 0.5;
    const double eps = 1e-9;
    const double at_minus = mosfet_ids(kN, kNominal, 1.0, 0.8, vov - eps);
    const double at_plus = mosfet_ids(kN, kNominal, 1.0, 0.8, vov + eps);
    CHECK(at_minus == doctest::Approx(at_plus).epsilon(1e-6));
    CHECK(std::abs(mosfet_ids(kN, kNominal, 1.0, 0.8, eps) -
                   mosfet_ids(kN, kNominal, 1.0, 0.8, -eps)) < 1e-9);

    // monotone non-decreasing in vds for fixed vgs > vth
    double prev = -1.0;
    for (double vds = 0.0; vds <= 1.2001; vds += 0.01) {
        const double i = mosfet_ids(kN, kNominal, 1.0, 0.7, vds);
        CHECK(i >= prev - 1e-15);
        prev = i;
    }
}

TEST_CASE("polarity symmetry") {
    SplitMix64 rng(7);
    for (int k = 0; k < 200; ++k) {
        const double vgs = 2.4 * rng.next_unit() - 1.2;
        const double vds = 2.4 * rng.next_unit() - 1.2;
        const double ip = mosfet_ids(kP, kNominal, 3.0, vgs, vds);
        MosfetParams mirrored = kP;
        mirrored.polarity = Polarity::N;
        mirrored.vth0 = -kP.vth0;
        const double in = mosfet_ids(mirrored, kNominal, 3.0, -vgs, -vds);
        CHECK(ip == doctest::Approx(-in).epsilon(1e-12));
    }
}

TEST_CASE("temperature and process shifts") {
    EnvCondition hot = kNominal;
    hot.temperature = 100.0;
    CHECK(mosfet_vth_magnitude<double>(kN, hot) < mosfet_vth_magnitude<double>(kN, kNominal));
    CHECK(mosfet_vth_magnitude<double>(kP, hot) < mosfet_vth_magnitude<double>(kP, kNominal));
    CHECK(mosfet_kp<double>(kN, hot) < mosfet_kp<double>(kN, kNominal));

    EnvCondition shifted = kNominal;
    shifted.dvth = 0.05;
    CHECK(mosfet_vth_magnitude<double>(kN, shifted) ==
          doctest::Approx(mosfet_vth_magnitude<double>(kN, kNominal) + 0.05));
    CHECK(mosfet_vth_magnitude<double>(kP, shifted) ==
          doctest::Approx(mosfet_vth_magnitude<double>(kP, kNominal) + 0.05));
    // per-polarity shifts act independently
    shifted.dvth_n = 0.01;
    CHECK(mosfet_vth_magnitude<double>(kN, shifted) - mosfet_vth_magnitude<double>(kP, shifted) ==
          doctest::Approx(0.01));
}

TEST_CASE("strike pulse waveform") {
    DoubleExpWave w{2.5e-15, 0.1e-12, 3e-12, 0.0, +1};
    CHECK(waveform_value(w, -1e-12) == 0.0);
    CHECK(waveform_value(w, 0.0) == 0.0);  // both exponentials equal 1

    const double t_peak = double_exp_peak_time(w.tau1, w.tau2);
    CHECK(t_peak == doctest::Approx(0.35185e-12).epsilon(1e-4));
    CHECK(waveform_value(w, t_peak) == doctest::Approx(0.7412e-3).epsilon(1e-3));

    // sampled argmax on a 1 fs grid agrees with the analytic peak
    double best_t = 0.0, best_v = -1.0;
    for (double t = 0.0; t <= 2e-12; t += 1e-15) {
        const double v = waveform_value(w, t);
        if (v > best_v) {
            best_v = v;
            best_t = t;
        }
    }
    CHECK(std::abs(best_t - t_peak) <= 5e-15);

    // total collected charge equals q_inj
    const double q = oracles::trapezoid([&](double t) { return waveform_value(w, t); }, 0.0,
                                        150e-12, 150000);
    CHECK(q == doctest::Approx(2.5e-15).epsilon(1e-3));

    // negative polarity mirrors
    DoubleExpWave neg = w;
    neg.sign = -1;
    CHECK(waveform_value(neg, t_peak) == doctest::Approx(-waveform_value(w, t_peak)));
}

TEST_CASE("pulse and pwl sources") {
    PulseWave p{0.0, 0.8, 250e-12, 5e-12, 5e-12, 245e-12, 500e-12};
    CHECK(waveform_value(p, 0.0) == 0.0);
    CHECK(waveform_value(p, 252.5e-12) == doctest::Approx(0.4));
    CHECK(waveform_value(p, 300e-12) == 0.8);
    CHECK(waveform_value(p, 502.5e-12) == doctest::Approx(0.4));
    CHECK(waveform_value(p, 600e-12) == 0.0);
    CHECK(waveform_value(p, 752.5e-12) == doctest::Approx(0.4));  // periodic

    PwlWave w;
    w.points = {{1e-9, 0.0}, {2e-9, 1.0}};
    CHECK(waveform_value(w, 0.0) == 0.0);  // clamped before
    CHECK(waveform_value(w, 1.5e-9) == doctest::Approx(0.5));
    CHECK(waveform_value(w, 5e-9) == 1.0);  // clamped after
}
