#ifndef VOCFRT_INNER_CONTROL_HPP
#define VOCFRT_INNER_CONTROL_HPP

#include "vocfrt/phase_math.hpp"

namespace vocfrt {
namespace ctrl {

/// Gains of the nested voltage/current PI loops plus the filter values
/// used for feed-forward and cross-decoupling.
struct InnerParams {
    double k_pv = 0.0;     // A/V
    double k_iv = 0.0;     // A/(V s)
    double k_pc = 0.0;     // V/A
    double k_ic = 0.0;     // V/(A s)
    double c_f = 0.0;      // F, capacitor feed-forward
    double l_f = 0.0;      // H, decoupling inductance
    double omega_n = 0.0;  // rad/s
};

/// d-axis clamp plus total reference-magnitude clamp. All values are
/// peak amperes in the amplitude-invariant frame.
struct CurrentLimits {
    double i_d_upper = 0.0;
    double i_d_lower = 0.0;
    double i_max_mag = 0.0;
};

/// Which clamps engaged during limit_current.
struct SatFlags {
    bool d_upper = false;
    bool d_lower = false;
    bool magnitude = false;

    bool any() const { return d_upper || d_lower || magnitude; }
};

/// Integrator states of one voltage/current loop instance. The
/// sat_hold/sat_dir fields latch a clamp engagement for a short window
/// so ripple-rate flag flicker cannot ratchet an integrator into the
/// clamped direction between samples.
struct CtrlState {
    double vloop_int_d = 0.0;  // A
    double vloop_int_q = 0.0;  // A
    double cloop_int_d = 0.0;  // V
    double cloop_int_q = 0.0;  // V
    SatFlags saturated;
    double sat_hold_d = 0.0;  // s remaining
    double sat_hold_q = 0.0;  // s remaining
    int sat_dir_d = 0;        // windup direction being held off
    int sat_dir_q = 0;
};

/// Anti-windup latch window.
constexpr double sat_hold_time = 0.005;  // s

struct DqPair {
    double d = 0.0;
    double q = 0.0;
};

/// Unsaturated current reference from the voltage loop:
///   I_d* = K_pv e_d + int_d - w C_f v_meas_q
///   I_q* = K_pv e_q + int_q + w C_f v_meas_d
/// with e = v_ref - v_meas. Pure: integrators are read, not advanced
/// (anti_windup owns the conditional integration).
DqPair voltage_pi_step(const pm::Dq0& v_ref, const pm::Dq0& v_meas, const CtrlState& state,
                       const InnerParams& params);

/// Clamp the d component to [i_d_lower, i_d_upper], then scale the
/// result down to i_max_mag preserving its angle if still too long.
struct LimitedRef {
    DqPair ref;
    SatFlags flags;
};
LimitedRef limit_current(const DqPair& i_ref, const CurrentLimits& limits);

/// Conditional integration of the voltage-loop integrators: an axis
/// whose clamp engaged only integrates when the error points out of
/// saturation. Returns the advanced state with flags recorded.
CtrlState anti_windup(const CtrlState& state, const SatFlags& flags, const DqPair& error_dq,
                      const InnerParams& params, double dt);

/// Inner current loop: PI on the current error plus measured-voltage
/// feed-forward and w L_f cross-decoupling. Advances the current-loop
/// integrators in place and returns the inverter voltage command.
pm::Dq0 current_pi_step(const DqPair& i_ref, const pm::Dq0& i_meas, const pm::Dq0& v_pcc,
                        CtrlState& state, const InnerParams& params, double dt);

}  // namespace ctrl
}  // namespace vocfrt

#endif
