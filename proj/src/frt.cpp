#include "vocfrt/frt.hpp"

#include <algorithm>
#include <cmath>

#include "vocfrt/errors.hpp"

namespace vocfrt {
namespace frt {

namespace {

// Normalized frequency-locked-loop gain and adaption clamp. The loop is
// deliberately slow and only adapts on a healthy bus; through sags the
// estimate holds so frozen phase references keep rotating at the last
// good frequency.
constexpr double fll_gain = 2.0;
constexpr double fll_clamp_frac = 0.05;

// Phase/frequency estimates only follow the tracker while it is actually
// locked (small residual); through transients they coast at the last
// good frequency so sags cannot drag the reference.
constexpr double lock_residual_frac = 0.1;

}  // namespace

DetectorState detector_init(double amplitude, const std::array<double, 3>& theta0, double omega) {
    DetectorState s;
    for (int ph = 0; ph < 3; ++ph) {
        s.trackers[ph] = pm::sogi_converged(amplitude, theta0[ph], omega);
        s.amplitude[ph] = amplitude;
        s.phase[ph] = theta0[ph];
    }
    s.omega_est = omega;
    return s;
}

DetectorState detector_step(const DetectorState& state, const pm::ThreePhase& v_pcc,
                            const FrtParams& params, double v_n, double omega_n, double dt) {
    DetectorState next = state;
    const int debounce_samples = std::max(1, static_cast<int>(std::lround(params.debounce / dt)));
    const std::size_t hist_len =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(detector_rewind_window / dt)));

    double fll_err_sum = 0.0;
    int fll_terms = 0;

    for (int ph = 0; ph < 3; ++ph) {
        if (next.phase_hist[ph].size() != hist_len) {
            next.phase_hist[ph].assign(hist_len, state.phase[ph]);
        }

        next.trackers[ph] = pm::sogi_step(state.trackers[ph], v_pcc[ph], state.omega_est, dt);
        const pm::QuadraturePair& trk = next.trackers[ph];
        next.amplitude[ph] = std::hypot(trk.direct, trk.quadrature);

        const double residual = v_pcc[ph] - trk.direct - trk.dc;
        const bool locked = std::abs(residual) < lock_residual_frac * v_n &&
                            next.amplitude[ph] >= detector_lock_amplitude * v_n;

        if (locked) {
            // Snap the continuous phase estimate to the tracker output.
            const double meas = std::atan2(trk.quadrature, trk.direct);
            const double advanced = state.phase[ph] + state.omega_est * dt;
            next.phase[ph] = advanced + pm::wrap_angle(meas - advanced);
        } else if (state.locked[ph]) {
            // Lock just lost: rewind onto the oldest buffered phase so the
            // estimate predates the disturbance, then coast.
            const std::size_t oldest = next.hist_pos;  // about to be overwritten
            next.phase[ph] = next.phase_hist[ph][oldest] +
                             state.omega_est * (static_cast<double>(hist_len) * dt);
        } else {
            next.phase[ph] = state.phase[ph] + state.omega_est * dt;
        }
        next.locked[ph] = locked;
        next.phase_hist[ph][next.hist_pos % hist_len] = next.phase[ph];

        if (locked && !state.fault_flag[ph]) {
            const double norm = trk.direct * trk.direct + trk.quadrature * trk.quadrature;
            fll_err_sum += -fll_gain * pm::sogi_k * state.omega_est * residual * trk.quadrature / norm;
            ++fll_terms;
        }

        if (next.amplitude[ph] < params.fault_threshold * v_n) {
            next.below_count[ph] = state.below_count[ph] + 1;
            next.above_count[ph] = 0;
            if (next.below_count[ph] >= debounce_samples) next.fault_flag[ph] = true;
        } else if (next.amplitude[ph] > params.clear_threshold * v_n) {
            next.above_count[ph] = state.above_count[ph] + 1;
            next.below_count[ph] = 0;
            if (next.above_count[ph] >= debounce_samples) next.fault_flag[ph] = false;
        } else {
            next.below_count[ph] = 0;
            next.above_count[ph] = 0;
        }
    }
    next.hist_pos = (next.hist_pos + 1) % hist_len;

    if (fll_terms > 0) {
        next.omega_est = state.omega_est + fll_err_sum / fll_terms * dt;
        next.omega_est = std::clamp(next.omega_est, (1.0 - fll_clamp_frac) * omega_n,
                                    (1.0 + fll_clamp_frac) * omega_n);
    }
    return next;
}

FrtMode select_mode(const std::array<bool, 3>& flags) {
    FrtMode m;
    m.faulted = flags;
    const int n = (flags[0] ? 1 : 0) + (flags[1] ? 1 : 0) + (flags[2] ? 1 : 0);
    if (n == 0) {
        m.kind = ModeKind::normal;
    } else if (n == 3) {
        m.kind = ModeKind::voltage_sync;
    } else {
        m.kind = ModeKind::current_sync;
    }
    return m;
}

pm::ThreePhase voltage_sync_feedback(const pm::ThreePhase& v_voc, const pm::ThreePhase& unit_vectors,
                                     double v_voc_nominal, double gamma) {
    pm::ThreePhase fb;
    for (int ph = 0; ph < 3; ++ph) {
        fb[ph] = gamma * (v_voc[ph] - v_voc_nominal * unit_vectors[ph]);
    }
    return fb;
}

pm::AlphaBeta0 voltage_sync_feedback_pair(const pm::AlphaBeta0& v_voc_pair,
                                          const pm::AlphaBeta0& unit_pair, double v_voc_nominal,
                                          double gamma) {
    pm::AlphaBeta0 fb;
    fb.alpha = gamma * (v_voc_pair.alpha - v_voc_nominal * unit_pair.alpha);
    fb.beta = gamma * (v_voc_pair.beta - v_voc_nominal * unit_pair.beta);
    return fb;
}

std::array<pm::AlphaBeta0, 3> current_sync_feedback(const std::array<pm::AlphaBeta0, 3>& i_out_pairs,
                                                    const FrtMode& mode) {
    if (mode.kind != ModeKind::current_sync) {
        throw ModeMismatch("current-sync feedback requested outside current-sync mode");
    }
    std::array<pm::AlphaBeta0, 3> fb = i_out_pairs;
    const int n_faulted = mode.faulted_count();

    if (n_faulted == 1) {
        int k = 0;
        while (!mode.faulted[k]) ++k;
        pm::AlphaBeta0 sum;
        for (int ph = 0; ph < 3; ++ph) {
            if (ph == k) continue;
            sum.alpha += i_out_pairs[ph].alpha;
            sum.beta += i_out_pairs[ph].beta;
        }
        fb[k].alpha = -sum.alpha;
        fb[k].beta = -sum.beta;
        fb[k].zero = 0.0;
    } else {
        int z = 0;
        while (mode.faulted[z]) ++z;
        // Positive sequence a->b->c: the next phase lags the healthy one
        // by 120 degrees, the previous one leads it.
        const int after = (z + 1) % 3;
        const int before = (z + 2) % 3;
        fb[after] = pm::rotate_pair(i_out_pairs[z], -pm::two_pi / 3.0);
        fb[before] = pm::rotate_pair(i_out_pairs[z], pm::two_pi / 3.0);
    }
    return fb;
}

double power_ref_adapt(const FrtMode& mode, double v_pcc_fault, const ctrl::CurrentLimits& limits,
                       double p_ref) {
    if (mode.kind == ModeKind::normal) return p_ref;
    const double cap = std::max(0.0, 1.5 * v_pcc_fault * limits.i_d_upper);
    return std::min(p_ref, cap);
}

}  // namespace frt
}  // namespace vocfrt
