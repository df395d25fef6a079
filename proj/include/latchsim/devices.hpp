#pragma once

#include <cmath>
#include <cstdlib>
#include <utility>

namespace latchsim {

enum class Polarity { N, P };

/// Square-law MOSFET parameters. Threshold is signed (negative for P);
/// temperature enters through a linear threshold coefficient and a mobility
/// power law referenced to t_ref.
struct MosfetParams {
    Polarity polarity = Polarity::N;
    double vth0 = 0.30;      // V, signed
    double kp0 = 200e-6;     // A/V^2 at t_ref
    double lambda = 0.1;     // 1/V channel-length modulation
    double cg0 = 0.05e-15;   // F lumped gate capacitance per unit W/L
    double tc_vth = 0.7e-3;  // V/degC, reduces |vth| as T rises
    double mu_exp = -1.5;    // mobility temperature exponent
    double t_ref = 27.0;     // degC
};

inline MosfetParams default_nmos() { return MosfetParams{}; }

inline MosfetParams default_pmos() {
    MosfetParams p;
    p.polarity = Polarity::P;
    p.vth0 = -0.30;
    p.kp0 = 100e-6;
    return p;
}

/// Operating condition shared by a whole simulation. dvth shifts the
/// threshold magnitude of both polarities together; dvth_n / dvth_p are
/// signed per-polarity shifts on top of it (used by Monte Carlo mismatch).
struct EnvCondition {
    double temperature = 27.0;  // degC
    double vdd = 0.8;           // V
    double dvth = 0.0;          // V, symmetric |vth| shift
    double dvth_n = 0.0;        // V, N-device |vth| shift
    double dvth_p = 0.0;        // V, P-device |vth| shift
};

/// Effective threshold magnitude at the given condition (always >= 0 input
/// convention: callers treat it as |vth|).
template <typename Scalar>
Scalar mosfet_vth_magnitude(const MosfetParams& p, const EnvCondition& env) {
    const Scalar pol_shift = p.polarity == Polarity::N ? env.dvth_n : env.dvth_p;
    return std::abs(p.vth0) + env.dvth + pol_shift - p.tc_vth * (env.temperature - p.t_ref);
}

template <typename Scalar>
Scalar mosfet_kp(const MosfetParams& p, const EnvCondition& env) {
    const Scalar ratio = (env.temperature + 273.15) / (p.t_ref + 273.15);
    return p.kp0 * std::pow(ratio, p.mu_exp);
}

namespace detail {

/// N-channel drain current for vds >= 0, plus partials (d/dvgs, d/dvds).
/// Continuous across cutoff/triode/saturation boundaries.
template <typename Scalar>
void nmos_core(Scalar kp_wl, Scalar vth, Scalar lambda, Scalar vgs, Scalar vds,
               Scalar& ids, Scalar& gm, Scalar& gds) {
    const Scalar vov = vgs - vth;
    if (vov <= Scalar(0)) {
        ids = gm = gds = Scalar(0);
        return;
    }
    const Scalar clm = Scalar(1) + lambda * vds;
    if (vds < vov) {  // triode
        const Scalar q = vov * vds - Scalar(0.5) * vds * vds;
        ids = kp_wl * q * clm;
        gm = kp_wl * vds * clm;
        gds = kp_wl * ((vov - vds) * clm + q * lambda);
    } else {  // saturation
        const Scalar h = Scalar(0.5) * kp_wl * vov * vov;
        ids = h * clm;
        gm = kp_wl * vov * clm;
        gds = h * lambda;
    }
}

}  // namespace detail

/// Drain current (A) flowing into the drain terminal. PMOS is evaluated by
/// polarity symmetry on negated terminal voltages; a reversed channel
/// (vds < 0 after normalization) swaps the drain/source roles so the model
/// is continuous and source-drain symmetric for all real inputs.
template <typename Scalar>
void mosfet_eval(const MosfetParams& p, const EnvCondition& env, Scalar w_over_l,
                 Scalar vgs, Scalar vds, Scalar& ids, Scalar& gm, Scalar& gds) {
    const Scalar s = p.polarity == Polarity::N ? Scalar(1) : Scalar(-1);
    const Scalar vth = mosfet_vth_magnitude<Scalar>(p, env);
    const Scalar kp_wl = mosfet_kp<Scalar>(p, env) * w_over_l;

    Scalar vgs_n = s * vgs;
    Scalar vds_n = s * vds;
    Scalar i_n, gm_n, gds_n;
    if (vds_n >= Scalar(0)) {
        detail::nmos_core(kp_wl, vth, p.lambda, vgs_n, vds_n, i_n, gm_n, gds_n);
    } else {
        // Swapped channel: the nominal drain acts as source.
        Scalar i_r, gm_r, gds_r;
        detail::nmos_core(kp_wl, vth, p.lambda, vgs_n - vds_n, -vds_n, i_r, gm_r, gds_r);
        i_n = -i_r;
        gm_n = -gm_r;
        gds_n = gm_r + gds_r;
    }
    ids = s * i_n;
    gm = gm_n;   // d(ids)/d(vgs): sign factors cancel
    gds = gds_n; // d(ids)/d(vds)
}

inline double mosfet_ids(const MosfetParams& p, const EnvCondition& env,
                         double w_over_l, double vgs, double vds) {
    double ids, gm, gds;
    mosfet_eval(p, env, w_over_l, vgs, vds, ids, gm, gds);
    return ids;
}

/// (gm, gds) = partial derivatives of mosfet_ids w.r.t. vgs and vds.
inline std::pair<double, double> mosfet_gm_gds(const MosfetParams& p, const EnvCondition& env,
                                               double w_over_l, double vgs, double vds) {
    double ids, gm, gds;
    mosfet_eval(p, env, w_over_l, vgs, vds, ids, gm, gds);
    return {gm, gds};
}

}  // namespace latchsim
