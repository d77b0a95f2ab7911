#ifndef VOCFRT_VO_CORE_HPP
#define VOCFRT_VO_CORE_HPP

#include <cmath>

#include "vocfrt/phase_math.hpp"

namespace vocfrt {
namespace voc {

/// Oscillator parameters. P_ref/Q_ref are three-phase totals; each
/// per-phase oscillator compares them against 3x its own phase power.
struct VocParams {
    double omega_n = 0.0;  // rad/s, nominal frequency
    double v_n = 0.0;      // V peak, nominal amplitude
    double k_v = 1.0;      // V/V, voltage gain
    double k_i = 1.0;      // A/A, current gain
    double c_osc = 0.0;    // F, oscillator capacitance
    double xi = 0.0;       // 1/(V^2 s), amplitude-correction gain
    double p_ref = 0.0;    // W
    double q_ref = 0.0;    // var
};

/// One phase's orthogonal oscillator pair. v_alpha is the physical
/// voltage reference; v_beta lags it by 90 degrees.
struct OscState {
    double v_alpha = 0.0;
    double v_beta = 0.0;

    double amplitude() const { return std::sqrt(v_alpha * v_alpha + v_beta * v_beta); }
    double angle() const { return std::atan2(v_beta, v_alpha); }
};

/// Amplitude floor below which the 1/V^2 droop terms are considered
/// blown up, as a fraction of v_n.
constexpr double amplitude_floor_frac = 1e-3;

/// Continuous-time derivative of one oscillator driven by the per-phase
/// feedback current pair fb (alpha in phase with v_alpha convention).
/// Throws AmplitudeCollapse when amplitude is below the floor.
OscState voc_derivative(const OscState& state, const pm::AlphaBeta0& fb, const VocParams& params);

/// d-axis current at which the oscillator's active-power droop rests:
/// the current reference implied by p_ref at amplitude v_voc.
double i_dvoc_ref(double v_voc, double p_ref, double v_n_floor_abs);

/// Frequency and amplitude-rate residuals of the droop laws at a given
/// amplitude and measured power; both are zero at steady state.
struct DroopResidual {
    double delta_omega = 0.0;  // rad/s
    double dv = 0.0;           // V/s
};
DroopResidual droop_residual(const OscState& state, double p, double q, const VocParams& params);

/// 3x the instantaneous per-phase power of one oscillator pair against a
/// current pair: the three-phase-equivalent powers the droop laws see.
pm::PowerSample pair_power(const OscState& v, const pm::AlphaBeta0& i);

}  // namespace voc
}  // namespace vocfrt

#endif
