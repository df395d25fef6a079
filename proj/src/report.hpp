#pragma once

#include <json.hpp>

#include "latchsim/engine.hpp"

namespace latchsim {

using Json = nlohmann::ordered_json;

/// Fully resolved configuration block embedded in every report so any run
/// can be reproduced from its own header.
inline Json config_to_json(const SimConfig& cfg) {
    Json j;
    j["vdd_v"] = cfg.env.vdd;
    j["temperature_c"] = cfg.env.temperature;
    j["dvth_v"] = cfg.env.dvth;
    j["dvth_n_v"] = cfg.env.dvth_n;
    j["dvth_p_v"] = cfg.env.dvth_p;
    j["t_stop_s"] = cfg.t_stop;
    j["dt_nominal_s"] = cfg.dt_nominal;
    j["dt_fine_s"] = cfg.dt_fine;
    j["v_tol_v"] = cfg.v_tol;
    j["i_tol_a"] = cfg.i_tol;
    j["max_newton_iters"] = cfg.max_newton_iters;
    j["gmin_s"] = cfg.gmin;
    j["node_cap_floor_f"] = cfg.node_cap_floor;
    return j;
}

}  // namespace latchsim
