#include "vocfrt/plant.hpp"

#include <cmath>

#include "vocfrt/errors.hpp"

namespace vocfrt {
namespace plant {

pm::ThreePhase grid_voltage(double t, const PlantParams& params) {
    const double th = params.omega_g * t;
    pm::ThreePhase v;
    v.a = params.v_g * std::cos(th);
    v.b = params.v_g * std::cos(th - pm::two_pi / 3.0);
    v.c = params.v_g * std::cos(th + pm::two_pi / 3.0);
    return v;
}

pm::ThreePhase fault_current(const PlantState& state) {
    pm::ThreePhase i;
    for (int ph = 0; ph < 3; ++ph) {
        if (state.fault_conducting[ph]) i[ph] = state.i_fault[ph];
    }
    return i;
}

pm::ThreePhase load_current(const PlantState& state, const PlantParams& params) {
    pm::ThreePhase i;
    if (params.r_load > 0.0) {
        for (int ph = 0; ph < 3; ++ph) i[ph] = state.v_pcc[ph] / params.r_load;
    }
    return i;
}

PlantState plant_derivative(const PlantState& state, const pm::ThreePhase& v_inv_cmd, double t,
                            const PlantParams& params, const FaultSpec& fault) {
    const pm::ThreePhase v_g = grid_voltage(t, params);
    const pm::ThreePhase i_f = fault_current(state);
    const pm::ThreePhase i_l = load_current(state, params);

    PlantState d;
    d.breaker_closed = state.breaker_closed;
    d.fault_conducting = state.fault_conducting;
    for (int ph = 0; ph < 3; ++ph) {
        d.i_inv[ph] =
            (v_inv_cmd[ph] - state.v_pcc[ph] - params.r_f * state.i_inv[ph]) / params.l_f;
        d.v_pcc[ph] = (state.i_inv[ph] - state.i_grid[ph] - i_f[ph] - i_l[ph]) / params.c_f;
        d.i_grid[ph] =
            state.breaker_closed
                ? (state.v_pcc[ph] - v_g[ph] - params.r_g * state.i_grid[ph]) / params.l_g
                : 0.0;
        d.i_fault[ph] =
            state.fault_conducting[ph]
                ? (state.v_pcc[ph] - fault.impedance * state.i_fault[ph]) / fault.series_inductance
                : 0.0;
    }
    return d;
}

PlantState breaker_trip(const PlantState& state, const std::string& reason) {
    if (!state.breaker_closed) {
        throw AlreadyOpen("breaker already open");
    }
    PlantState next = state;
    next.breaker_closed = false;
    next.i_grid = pm::ThreePhase{};
    next.trip_reason = reason;
    return next;
}

pm::ThreePhase kcl_residual(const PlantState& state, const PlantState& deriv,
                            const PlantParams& params) {
    const pm::ThreePhase i_f = fault_current(state);
    const pm::ThreePhase i_l = load_current(state, params);
    pm::ThreePhase r;
    for (int ph = 0; ph < 3; ++ph) {
        r[ph] = params.c_f * deriv.v_pcc[ph] -
                (state.i_inv[ph] - state.i_grid[ph] - i_f[ph] - i_l[ph]);
    }
    return r;
}

}  // namespace plant
}  // namespace vocfrt
