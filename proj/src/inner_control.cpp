#include "vocfrt/inner_control.hpp"

#include <algorithm>
#include <cmath>

namespace vocfrt {
namespace ctrl {

DqPair voltage_pi_step(const pm::Dq0& v_ref, const pm::Dq0& v_meas, const CtrlState& state,
                       const InnerParams& params) {
    const double e_d = v_ref.d - v_meas.d;
    const double e_q = v_ref.q - v_meas.q;
    DqPair out;
    out.d = params.k_pv * e_d + state.vloop_int_d - params.omega_n * params.c_f * v_meas.q;
    out.q = params.k_pv * e_q + state.vloop_int_q + params.omega_n * params.c_f * v_meas.d;
    return out;
}

LimitedRef limit_current(const DqPair& i_ref, const CurrentLimits& limits) {
    LimitedRef r;
    r.ref = i_ref;
    if (r.ref.d > limits.i_d_upper) {
        r.ref.d = limits.i_d_upper;
        r.flags.d_upper = true;
    } else if (r.ref.d < limits.i_d_lower) {
        r.ref.d = limits.i_d_lower;
        r.flags.d_lower = true;
    }
    // Magnitude clamp with d-axis (active current) priority: q gets the
    // headroom left after d. A d demand beyond the total limit collapses
    // the reference onto the d axis.
    if (std::abs(r.ref.d) >= limits.i_max_mag) {
        r.ref.d = std::copysign(limits.i_max_mag, r.ref.d);
        r.ref.q = 0.0;
        r.flags.magnitude = true;
    } else if (std::hypot(r.ref.d, r.ref.q) > limits.i_max_mag) {
        const double q_room = std::sqrt(limits.i_max_mag * limits.i_max_mag - r.ref.d * r.ref.d);
        r.ref.q = std::copysign(q_room, r.ref.q);
        r.flags.magnitude = true;
    }
    return r;
}

CtrlState anti_windup(const CtrlState& state, const SatFlags& flags, const DqPair& error_dq,
                      const InnerParams& params, double dt) {
    CtrlState next = state;
    next.saturated = flags;

    next.sat_hold_d = std::max(0.0, state.sat_hold_d - dt);
    next.sat_hold_q = std::max(0.0, state.sat_hold_q - dt);
    if (next.sat_hold_d == 0.0) next.sat_dir_d = 0;
    if (next.sat_hold_q == 0.0) next.sat_dir_q = 0;

    if (flags.d_upper) {
        next.sat_hold_d = sat_hold_time;
        next.sat_dir_d = +1;
    } else if (flags.d_lower) {
        next.sat_hold_d = sat_hold_time;
        next.sat_dir_d = -1;
    }
    if (flags.magnitude) {
        next.sat_hold_q = sat_hold_time;
        next.sat_dir_q = (error_dq.q < 0.0) ? -1 : +1;
        if (!flags.d_upper && !flags.d_lower && std::abs(state.vloop_int_d) > 0.0) {
            next.sat_hold_d = sat_hold_time;
            next.sat_dir_d = (error_dq.d < 0.0) ? -1 : +1;
        }
    }

    // Frozen only in the held windup direction; the exit path always
    // integrates.
    const bool freeze_d = next.sat_hold_d > 0.0 && error_dq.d * next.sat_dir_d > 0.0;
    if (!freeze_d) next.vloop_int_d += params.k_iv * error_dq.d * dt;

    const bool freeze_q = next.sat_hold_q > 0.0 && error_dq.q * next.sat_dir_q > 0.0;
    if (!freeze_q) next.vloop_int_q += params.k_iv * error_dq.q * dt;

    return next;
}

pm::Dq0 current_pi_step(const DqPair& i_ref, const pm::Dq0& i_meas, const pm::Dq0& v_pcc,
                        CtrlState& state, const InnerParams& params, double dt) {
    const double e_d = i_ref.d - i_meas.d;
    const double e_q = i_ref.q - i_meas.q;

    pm::Dq0 cmd;
    cmd.d = params.k_pc * e_d + state.cloop_int_d + v_pcc.d -
            params.omega_n * params.l_f * i_meas.q;
    cmd.q = params.k_pc * e_q + state.cloop_int_q + v_pcc.q +
            params.omega_n * params.l_f * i_meas.d;
    cmd.zero = 0.0;
    cmd.theta = i_meas.theta;

    state.cloop_int_d += params.k_ic * e_d * dt;
    state.cloop_int_q += params.k_ic * e_q * dt;
    return cmd;
}

}  // namespace ctrl
}  // namespace vocfrt
