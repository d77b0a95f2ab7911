#include "vocfrt/vo_core.hpp"

#include "vocfrt/errors.hpp"

namespace vocfrt {
namespace voc {

pm::PowerSample pair_power(const OscState& v, const pm::AlphaBeta0& i) {
    pm::PowerSample s;
    s.p = 1.5 * (v.v_alpha * i.alpha + v.v_beta * i.beta);
    s.q = 1.5 * (v.v_beta * i.alpha - v.v_alpha * i.beta);
    return s;
}

OscState voc_derivative(const OscState& state, const pm::AlphaBeta0& fb, const VocParams& params) {
    const double v2 = state.v_alpha * state.v_alpha + state.v_beta * state.v_beta;
    const double floor = amplitude_floor_frac * params.v_n;
    if (v2 < floor * floor) {
        throw AmplitudeCollapse("oscillator amplitude below floor");
    }

    const pm::PowerSample pw = pair_power(state, fb);
    const double kk = params.k_v * params.k_i / (3.0 * params.c_osc);

    const double omega = params.omega_n - kk / v2 * (pw.p - params.p_ref);
    const double amp_coeff = params.xi / (params.k_v * params.k_v) *
                                 (2.0 * params.v_n * params.v_n - 2.0 * v2) -
                             kk / v2 * (pw.q - params.q_ref);

    OscState d;
    d.v_alpha = amp_coeff * state.v_alpha - omega * state.v_beta;
    d.v_beta = amp_coeff * state.v_beta + omega * state.v_alpha;
    return d;
}

double i_dvoc_ref(double v_voc, double p_ref, double v_n_floor_abs) {
    if (v_voc < v_n_floor_abs) {
        throw AmplitudeCollapse("amplitude below floor in current reference");
    }
    return 2.0 * p_ref / (3.0 * v_voc);
}

DroopResidual droop_residual(const OscState& state, double p, double q, const VocParams& params) {
    const double v2 = state.v_alpha * state.v_alpha + state.v_beta * state.v_beta;
    const double kk = params.k_v * params.k_i / (3.0 * params.c_osc);
    DroopResidual r;
    r.delta_omega = -kk / v2 * (p - params.p_ref);
    r.dv = params.xi / (params.k_v * params.k_v) * std::sqrt(v2) *
               (2.0 * params.v_n * params.v_n - 2.0 * v2) -
           kk / std::sqrt(v2) * (q - params.q_ref);
    return r;
}

}  // namespace voc
}  // namespace vocfrt
