#include "vocfrt/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vocfrt/errors.hpp"

namespace vocfrt {
namespace sim {

void Scenario::validate_and_finalize() {
    if (!(dt > 0.0) || dt > 50e-6 + 1e-12) {
        throw ConfigError("dt_us must be in (0, 50]");
    }
    if (decimate < 1) throw ConfigError("decimate must be >= 1");
    if (duration <= 0.0) throw ConfigError("duration_s must be positive");
    const bool any_fault_phase = fault.phases[0] || fault.phases[1] || fault.phases[2];
    if (any_fault_phase) {
        if (fault.t_clear <= fault.t_start) throw ConfigError("fault t_clear_s must exceed t_start_s");
        if (fault.impedance <= 0.0) throw ConfigError("fault impedance_ohm must be positive");
        if (fault.t_start < duration && duration < fault.t_clear + 0.5) {
            throw ConfigError("duration_s must be at least fault t_clear_s + 0.5");
        }
    }
    if (voc.v_n <= 0.0 || voc.omega_n <= 0.0 || voc.k_v <= 0.0 || voc.k_i <= 0.0 ||
        voc.c_osc <= 0.0 || voc.xi <= 0.0) {
        throw ConfigError("voc parameters must be positive");
    }
    if (inner.k_pv <= 0.0 || inner.k_iv <= 0.0 || inner.k_pc <= 0.0 || inner.k_ic <= 0.0) {
        throw ConfigError("inner loop gains must be positive");
    }
    if (limits.i_d_lower > limits.i_d_upper) throw ConfigError("i_d_lower_A must not exceed i_d_upper_A");
    if (limits.i_max_mag <= 0.0) throw ConfigError("i_max_mag_A_peak must be positive");
    if (frt.gamma <= 0.0) throw ConfigError("gamma_A_per_V must be positive");
    if (frt.clear_threshold <= frt.fault_threshold) {
        throw ConfigError("clear_threshold_pu must exceed fault_threshold_pu");
    }
    if (frt.debounce <= 0.0) throw ConfigError("debounce_s must be positive");
    if (plant.l_f <= 0.0 || plant.c_f <= 0.0 || plant.l_g <= 0.0) {
        throw ConfigError("plant inductances and capacitance must be positive");
    }
    if (plant.r_f < 0.0 || plant.r_g < 0.0) throw ConfigError("plant resistances must be non-negative");

    voc.p_ref = p_ref;
    voc.q_ref = q_ref;
    inner.c_f = plant.c_f;
    inner.l_f = plant.l_f;
    inner.omega_n = voc.omega_n;
}

Scenario default_scenario() {
    Scenario sc;
    const double omega = pm::two_pi * 50.0;
    const double v_pk = 400.0 * std::sqrt(2.0);

    sc.duration = 1.5;
    sc.dt = 10e-6;
    sc.decimate = 10;
    sc.p_ref = 9000.0;
    sc.q_ref = 0.0;

    sc.voc.omega_n = omega;
    sc.voc.v_n = v_pk;
    sc.voc.k_v = 1.0;
    sc.voc.k_i = 1.0;
    // Frequency droop of 4% of nominal at a 15 kW power excursion.
    sc.voc.c_osc = sc.voc.k_v * sc.voc.k_i * 15000.0 / (0.04 * omega * 3.0 * v_pk * v_pk);
    sc.voc.xi = 4e-4;

    sc.inner.k_pv = 0.1;
    sc.inner.k_iv = 5.0;
    sc.inner.k_pc = pm::two_pi * 1000.0 * 2e-3;  // ~1 kHz current loop at l_f
    sc.inner.k_ic = 314.159265358979;

    sc.limits.i_d_upper = 20.0;
    sc.limits.i_d_lower = 0.0;
    sc.limits.i_max_mag = 20.0 * std::sqrt(2.0);

    sc.frt.gamma = 0.3;
    sc.frt.fault_threshold = 0.85;
    sc.frt.clear_threshold = 0.90;
    sc.frt.debounce = 0.005;

    sc.plant.l_f = 2e-3;
    sc.plant.c_f = 8e-6;
    sc.plant.r_f = 0.05;
    // Short-circuit ratio ~5 with X/R = 2 at the 15 kVA / 400 V base.
    const double z_base = 3.0 * 400.0 * 400.0 / 15000.0;
    const double z_g = z_base / 5.0;
    const double xr = 2.0;
    sc.plant.l_g = z_g * xr / std::sqrt(1.0 + xr * xr) / omega;
    sc.plant.r_g = z_g / std::sqrt(1.0 + xr * xr);
    sc.plant.v_g = v_pk;
    sc.plant.omega_g = omega;
    sc.plant.r_load = 160.0;

    sc.validate_and_finalize();
    return sc;
}

double load_angle(double theta_voc, double theta_grid) {
    return pm::wrap_angle(theta_voc - theta_grid);
}

namespace {

std::array<double, 3> grid_phase_offsets() {
    return {0.0, -pm::two_pi / 3.0, pm::two_pi / 3.0};
}

pm::ThreePhase output_current(const plant::PlantState& pl, const plant::PlantParams& pp) {
    const pm::ThreePhase i_f = plant::fault_current(pl);
    const pm::ThreePhase i_l = plant::load_current(pl, pp);
    pm::ThreePhase i;
    for (int ph = 0; ph < 3; ++ph) i[ph] = pl.i_grid[ph] + i_f[ph] + i_l[ph];
    return i;
}

void push_windows(SimState& s, const Scenario& sc) {
    const pm::ThreePhase i_out = output_current(s.plant, sc.plant);
    const std::size_t n = s.win_p[0].size();
    for (int ph = 0; ph < 3; ++ph) {
        s.win_p[ph][s.win_pos] = s.plant.v_pcc[ph] * i_out[ph];
        s.win_i2[ph][s.win_pos] = s.plant.i_inv[ph] * s.plant.i_inv[ph];
    }
    s.win_pos = (s.win_pos + 1) % n;
    if (s.win_fill < n) ++s.win_fill;
}

double window_mean(const std::vector<double>& w, std::size_t fill) {
    if (fill == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < fill; ++i) acc += w[i];
    return acc / static_cast<double>(fill);
}

struct ContDeriv {
    plant::PlantState pl;
    std::array<voc::OscState, 3> osc;
};

ContDeriv deriv(const plant::PlantState& pl, const std::array<voc::OscState, 3>& osc, double t,
                const pm::ThreePhase& v_cmd, const std::array<pm::AlphaBeta0, 3>& fb,
                const voc::VocParams& vp, const Scenario& sc) {
    ContDeriv d;
    d.pl = plant::plant_derivative(pl, v_cmd, t, sc.plant, sc.fault);
    for (int ph = 0; ph < 3; ++ph) d.osc[ph] = voc::voc_derivative(osc[ph], fb[ph], vp);
    return d;
}

}  // namespace

SimState init_state(const Scenario& sc) {
    SimState s;
    s.t = 0.0;

    // Warm start near the expected operating point: load angle from the
    // grid-reactance power transfer, integrators at the implied current.
    const std::array<double, 3> th0 = grid_phase_offsets();
    const double x_g = sc.plant.omega_g * sc.plant.l_g;
    double delta0 = std::asin(std::clamp(
        2.0 * sc.p_ref * x_g / (3.0 * sc.plant.v_g * sc.plant.v_g), -0.9, 0.9));
    double amp0 = sc.voc.v_n;
    double int_d0 = 2.0 * sc.p_ref / (3.0 * sc.voc.v_n);
    if (sc.init_override.enabled) {
        delta0 = sc.init_override.delta0;
        amp0 = sc.init_override.v_voc0;
        int_d0 = sc.init_override.vloop_int_d0;
    }
    std::mt19937_64 rng(sc.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int ph = 0; ph < 3; ++ph) {
        double a = amp0;
        double th = th0[ph] + delta0;
        if (sc.osc_perturb_frac > 0.0) {
            a *= 1.0 + sc.osc_perturb_frac * uni(rng);
            th += sc.osc_perturb_frac * M_PI * uni(rng);
        }
        s.osc[ph].v_alpha = a * std::cos(th);
        s.osc[ph].v_beta = a * std::sin(th);
    }

    s.plant.v_pcc = plant::grid_voltage(0.0, sc.plant);
    s.plant.breaker_closed = true;
    const double i_pk0 = sc.init_override.enabled ? 0.0 : 2.0 * sc.p_ref / (3.0 * sc.voc.v_n);
    for (int ph = 0; ph < 3; ++ph) {
        const double th = th0[ph] + delta0;
        s.plant.i_inv[ph] = i_pk0 * std::cos(th);
        s.plant.i_grid[ph] = i_pk0 * std::cos(th);
    }

    s.detector = frt::detector_init(sc.plant.v_g, th0, sc.voc.omega_n);
    for (int ph = 0; ph < 3; ++ph) {
        const double th = th0[ph] + delta0;
        s.i_inv_trk[ph] = pm::sogi_converged(i_pk0, th, sc.voc.omega_n);
        s.i_out_trk[ph] = pm::sogi_converged(i_pk0, th, sc.voc.omega_n);
    }

    for (int ph = 0; ph < 3; ++ph) s.loops[ph].vloop_int_d = int_d0;

    const std::size_t win_len =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(pm::two_pi / sc.voc.omega_n / sc.dt)));
    for (int ph = 0; ph < 3; ++ph) {
        s.win_p[ph].assign(win_len, 0.0);
        s.win_i2[ph].assign(win_len, 0.0);
    }
    push_windows(s, sc);

    s.p_ref_eff = sc.p_ref;
    s.delta_wrapped = load_angle(s.osc[0].angle(), 0.0);
    s.delta_unwrapped = s.delta_wrapped;
    return s;
}

namespace {

void controller_update(SimState& s, const Scenario& sc) {
    const pm::ThreePhase& v_pcc = s.plant.v_pcc;
    const pm::ThreePhase& i_inv = s.plant.i_inv;
    const pm::ThreePhase i_out = output_current(s.plant, sc.plant);

    // Measurement trackers.
    for (int ph = 0; ph < 3; ++ph) {
        s.i_inv_trk[ph] = pm::sogi_step(s.i_inv_trk[ph], i_inv[ph], sc.voc.omega_n, sc.dt);
        s.i_out_trk[ph] = pm::sogi_step(s.i_out_trk[ph], i_out[ph], sc.voc.omega_n, sc.dt);
    }
    s.detector = frt::detector_step(s.detector, v_pcc, sc.frt, sc.voc.v_n, sc.voc.omega_n, sc.dt);

    s.mode = sc.frt_enabled ? frt::select_mode(s.detector.fault_flag) : frt::FrtMode{};

    // Power reference for the active mode: cap at what the current limit
    // can push into the voltage that still carries power.
    if (s.mode.kind == frt::ModeKind::normal) {
        s.p_ref_eff = sc.p_ref;
    } else {
        double amp_sum = 0.0;
        int n = 0;
        for (int ph = 0; ph < 3; ++ph) {
            const bool counted = (s.mode.kind == frt::ModeKind::voltage_sync) || !s.mode.faulted[ph];
            if (counted) {
                amp_sum += s.detector.amplitude[ph];
                ++n;
            }
        }
        const double v_fault = (n > 0) ? amp_sum / n : 0.0;
        s.p_ref_eff = frt::power_ref_adapt(s.mode, v_fault, sc.limits, sc.p_ref);
    }

    // Oscillator feedback pairs.
    std::array<pm::AlphaBeta0, 3> fb;
    for (int ph = 0; ph < 3; ++ph) {
        fb[ph] = pm::AlphaBeta0{s.i_out_trk[ph].direct, s.i_out_trk[ph].quadrature, 0.0};
    }
    if (s.mode.kind == frt::ModeKind::current_sync) {
        fb = frt::current_sync_feedback(fb, s.mode);
    } else if (s.mode.kind == frt::ModeKind::voltage_sync) {
        for (int ph = 0; ph < 3; ++ph) {
            const pm::AlphaBeta0 osc_pair{s.osc[ph].v_alpha, s.osc[ph].v_beta, 0.0};
            const pm::AlphaBeta0 unit{std::cos(s.detector.phase[ph]), std::sin(s.detector.phase[ph]), 0.0};
            fb[ph] = frt::voltage_sync_feedback_pair(osc_pair, unit, sc.voc.v_n, sc.frt.gamma);
        }
    }
    s.fb = fb;

    // Per-phase nested loops in each phase's own oscillator frame.
    const double floor_abs = voc::amplitude_floor_frac * sc.voc.v_n;
    for (int ph = 0; ph < 3; ++ph) {
        const double theta = s.osc[ph].angle();
        const double amp = s.osc[ph].amplitude();

        pm::Dq0 v_ref;
        v_ref.d = amp;
        v_ref.q = 0.0;
        v_ref.theta = theta;

        const pm::AlphaBeta0 v_pair{v_pcc[ph], s.detector.trackers[ph].quadrature, 0.0};
        const pm::Dq0 v_meas = pm::park(v_pair, theta);
        const pm::AlphaBeta0 i_pair{i_inv[ph], s.i_inv_trk[ph].quadrature, 0.0};
        const pm::Dq0 i_meas = pm::park(i_pair, theta);

        const ctrl::DqPair unsat = ctrl::voltage_pi_step(v_ref, v_meas, s.loops[ph], sc.inner);
        const ctrl::LimitedRef lim = ctrl::limit_current(unsat, sc.limits);
        const ctrl::DqPair err{v_ref.d - v_meas.d, v_ref.q - v_meas.q};
        const ctrl::SatFlags aw_flags = sc.anti_windup_enabled ? lim.flags : ctrl::SatFlags{};
        s.loops[ph] = ctrl::anti_windup(s.loops[ph], aw_flags, err, sc.inner, sc.dt);
        s.loops[ph].saturated = lim.flags;

        const pm::Dq0 v_cmd_dq =
            ctrl::current_pi_step(lim.ref, i_meas, v_meas, s.loops[ph], sc.inner, sc.dt);
        s.v_cmd[ph] = pm::inverse_park(v_cmd_dq).alpha;
        s.sat[ph] = lim.flags;

        if (ph == 0) {
            s.i_dpi_a = unsat.d;
            s.i_dvoc_a = voc::i_dvoc_ref(amp, s.p_ref_eff, floor_abs);
        }
    }
}

void integrate(SimState& s, const Scenario& sc) {
    // Arm the fault branch for steps starting inside the fault window.
    if (sc.fault.in_window(s.t)) {
        for (int ph = 0; ph < 3; ++ph) {
            if (sc.fault.phases[ph]) s.plant.fault_conducting[ph] = true;
        }
    }

    voc::VocParams vp = sc.voc;
    vp.p_ref = s.p_ref_eff;

    const plant::PlantState& p0 = s.plant;
    const std::array<voc::OscState, 3>& o0 = s.osc;
    const double dt = sc.dt;
    const double t = s.t;

    const ContDeriv k1 = deriv(p0, o0, t, s.v_cmd, s.fb, vp, sc);

    plant::PlantState p1 = p0;
    std::array<voc::OscState, 3> o1 = o0;
    const auto stage = [&](const ContDeriv& k, double frac) {
        for (int ph = 0; ph < 3; ++ph) {
            p1.i_inv[ph] = p0.i_inv[ph] + frac * dt * k.pl.i_inv[ph];
            p1.v_pcc[ph] = p0.v_pcc[ph] + frac * dt * k.pl.v_pcc[ph];
            p1.i_grid[ph] = p0.i_grid[ph] + frac * dt * k.pl.i_grid[ph];
            p1.i_fault[ph] = p0.i_fault[ph] + frac * dt * k.pl.i_fault[ph];
            o1[ph].v_alpha = o0[ph].v_alpha + frac * dt * k.osc[ph].v_alpha;
            o1[ph].v_beta = o0[ph].v_beta + frac * dt * k.osc[ph].v_beta;
        }
    };

    stage(k1, 0.5);
    const ContDeriv k2 = deriv(p1, o1, t + 0.5 * dt, s.v_cmd, s.fb, vp, sc);
    stage(k2, 0.5);
    const ContDeriv k3 = deriv(p1, o1, t + 0.5 * dt, s.v_cmd, s.fb, vp, sc);
    stage(k3, 1.0);
    const ContDeriv k4 = deriv(p1, o1, t + dt, s.v_cmd, s.fb, vp, sc);

    plant::PlantState pn = p0;
    const auto combine = [&](double a, double b, double c, double d) {
        return dt / 6.0 * (a + 2.0 * (b + c) + d);
    };
    for (int ph = 0; ph < 3; ++ph) {
        pn.i_inv[ph] = p0.i_inv[ph] + combine(k1.pl.i_inv[ph], k2.pl.i_inv[ph], k3.pl.i_inv[ph],
                                              k4.pl.i_inv[ph]);
        pn.v_pcc[ph] = p0.v_pcc[ph] + combine(k1.pl.v_pcc[ph], k2.pl.v_pcc[ph], k3.pl.v_pcc[ph],
                                              k4.pl.v_pcc[ph]);
        pn.i_grid[ph] = p0.i_grid[ph] + combine(k1.pl.i_grid[ph], k2.pl.i_grid[ph],
                                                k3.pl.i_grid[ph], k4.pl.i_grid[ph]);
        pn.i_fault[ph] = p0.i_fault[ph] + combine(k1.pl.i_fault[ph], k2.pl.i_fault[ph],
                                                  k3.pl.i_fault[ph], k4.pl.i_fault[ph]);
        s.osc[ph].v_alpha = o0[ph].v_alpha + combine(k1.osc[ph].v_alpha, k2.osc[ph].v_alpha,
                                                     k3.osc[ph].v_alpha, k4.osc[ph].v_alpha);
        s.osc[ph].v_beta = o0[ph].v_beta + combine(k1.osc[ph].v_beta, k2.osc[ph].v_beta,
                                                   k3.osc[ph].v_beta, k4.osc[ph].v_beta);
    }
    if (!s.plant.breaker_closed) pn.i_grid = pm::ThreePhase{};
    // A conducting fault branch past t_clear opens at its current zero
    // crossing (forced open after a grace interval as a backstop).
    for (int ph = 0; ph < 3; ++ph) {
        if (!pn.fault_conducting[ph]) continue;
        const bool past_clear = t + dt >= sc.fault.t_clear;
        const bool crossed = pn.i_fault[ph] == 0.0 || (pn.i_fault[ph] > 0.0) != (p0.i_fault[ph] > 0.0);
        const bool overdue = t + dt > sc.fault.t_clear + 0.03;
        if (past_clear && (crossed || overdue)) {
            pn.fault_conducting[ph] = false;
            pn.i_fault[ph] = 0.0;
        }
    }
    s.plant = pn;
    s.t = t + dt;
}

void post_step_bookkeeping(SimState& s, const Scenario& sc) {
    push_windows(s, sc);

    // Load angle against the grid EMF.
    const double theta_grid = pm::wrap_angle(sc.plant.omega_g * s.t);
    const double wrapped = load_angle(s.osc[0].angle(), theta_grid);
    s.delta_unwrapped += pm::wrap_angle(wrapped - s.delta_wrapped);
    s.delta_wrapped = wrapped;

    // Unidirectional sources disconnect on sustained power reversal.
    if (!sc.bidirectional_source && s.plant.breaker_closed) {
        double p_avg = 0.0;
        for (int ph = 0; ph < 3; ++ph) p_avg += window_mean(s.win_p[ph], s.win_fill);
        const bool full_window = s.win_fill == s.win_p[0].size();
        if (full_window && p_avg < -reversal_frac * std::abs(sc.p_ref)) {
            s.reversal_hold += sc.dt;
        } else {
            s.reversal_hold = 0.0;
        }
        if (s.reversal_hold >= reversal_hold_s) {
            s.plant = plant::breaker_trip(s.plant, "active power reversal");
        }
    }

    for (int ph = 0; ph < 3; ++ph) {
        if (!std::isfinite(s.plant.i_inv[ph]) || !std::isfinite(s.plant.v_pcc[ph]) ||
            !std::isfinite(s.plant.i_grid[ph]) || !std::isfinite(s.osc[ph].v_alpha) ||
            !std::isfinite(s.osc[ph].v_beta)) {
            throw NonFinite("state left the finite range at t=" + std::to_string(s.t));
        }
    }
}

void record_row(RunRecord& rec, const SimState& s, const Scenario& sc) {
    rec.t.push_back(s.t);
    const pm::ThreePhase i_out = output_current(s.plant, sc.plant);
    const pm::PowerSample pw = pm::inst_power(s.plant.v_pcc, i_out);
    for (int ph = 0; ph < 3; ++ph) {
        rec.v_pcc[ph].push_back(s.plant.v_pcc[ph]);
        rec.i_inv[ph].push_back(s.plant.i_inv[ph]);
        rec.p_phase[ph].push_back(window_mean(s.win_p[ph], s.win_fill));
        rec.i_rms[ph].push_back(std::sqrt(window_mean(s.win_i2[ph], s.win_fill)));
        rec.v_voc_amp[ph].push_back(s.osc[ph].amplitude());
    }
    rec.p.push_back(pw.p);
    rec.q.push_back(pw.q);
    rec.v_voc_a.push_back(s.osc[0].amplitude());
    rec.sin_delta.push_back(std::sin(s.delta_wrapped));
    rec.frt_mode.push_back(static_cast<int>(s.mode.kind));
    int lim_d = 0;
    int lim_m = 0;
    for (int ph = 0; ph < 3; ++ph) {
        if (s.sat[ph].d_upper || s.sat[ph].d_lower) lim_d |= 1 << ph;
        if (s.sat[ph].magnitude) lim_m |= 1 << ph;
    }
    rec.limiter_d.push_back(lim_d);
    rec.limiter_mag.push_back(lim_m);
    rec.breaker.push_back(s.plant.breaker_closed ? 1 : 0);

    rec.delta_unwrapped.push_back(s.delta_unwrapped);
    rec.i_dpi_a.push_back(s.i_dpi_a);
    rec.i_dvoc_a.push_back(s.i_dvoc_a);
    rec.p_ref_eff.push_back(s.p_ref_eff);
}

}  // namespace

void step(SimState& s, const Scenario& sc) {
    integrate(s, sc);
    post_step_bookkeeping(s, sc);
    controller_update(s, sc);
}

RunResult run(const Scenario& sc) {
    RunResult result;
    SimState s = init_state(sc);
    const long n_steps = std::lround(sc.duration / sc.dt);

    try {
        controller_update(s, sc);
        record_row(result.record, s, sc);
        for (long k = 1; k <= n_steps; ++k) {
            step(s, sc);
            if (k % sc.decimate == 0) record_row(result.record, s, sc);
        }
    } catch (const NonFinite& e) {
        result.metrics.nonfinite = true;
        result.metrics.nonfinite_reason = e.what();
    } catch (const AmplitudeCollapse& e) {
        result.metrics.nonfinite = true;
        result.metrics.nonfinite_reason = e.what();
    }

    const Metrics events = detect_events(result.record, sc);
    const bool nf = result.metrics.nonfinite;
    const std::string reason = result.metrics.nonfinite_reason;
    result.metrics = events;
    if (nf) {
        result.metrics.nonfinite = true;
        result.metrics.nonfinite_reason = reason;
        result.metrics.run_valid = false;
    }
    return result;
}

namespace {

std::size_t index_at(const RunRecord& rec, double t) {
    // Records are uniformly sampled from t=0.
    if (rec.t.size() < 2) return 0;
    const double dt = rec.t[1] - rec.t[0];
    const long idx = std::lround(t / dt);
    return static_cast<std::size_t>(std::clamp<long>(idx, 0, static_cast<long>(rec.t.size()) - 1));
}

double mean_range(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    if (hi <= lo || lo >= v.size()) return 0.0;
    hi = std::min(hi, v.size());
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += v[i];
    return acc / static_cast<double>(hi - lo);
}

}  // namespace

Metrics detect_events(const RunRecord& rec, const Scenario& sc) {
    Metrics m;
    const std::size_t n = rec.size();
    if (n < 2) {
        m.run_valid = false;
        return m;
    }
    const double dt_rec = rec.t[1] - rec.t[0];
    const double cycle = pm::two_pi / sc.voc.omega_n;
    const bool has_fault = sc.has_fault();
    const double t_start = sc.fault.t_start;
    const double t_clear = sc.fault.t_clear;

    std::vector<double> p_avg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        p_avg[i] = rec.p_phase[0][i] + rec.p_phase[1][i] + rec.p_phase[2][i];
    }

    const std::size_t i_pre_hi = has_fault ? index_at(rec, t_start) : n - 1;
    const std::size_t i_pre_lo = (i_pre_hi > static_cast<std::size_t>(cycle / dt_rec))
                                     ? i_pre_hi - static_cast<std::size_t>(cycle / dt_rec)
                                     : 0;
    m.p_prefault = mean_range(p_avg, i_pre_lo, i_pre_hi);
    m.sin_delta_prefault = mean_range(rec.sin_delta, i_pre_lo, i_pre_hi);
    for (int ph = 0; ph < 3; ++ph) m.p_phase_prefault[ph] = mean_range(rec.p_phase[ph], i_pre_lo, i_pre_hi);

    if (has_fault && sc.p_ref != 0.0) {
        m.run_valid = std::abs(m.p_prefault - sc.p_ref) <= 0.01 * std::abs(sc.p_ref);
    }

    const std::size_t i_fault_lo = has_fault ? index_at(rec, t_start) : n;
    const std::size_t i_fault_hi = has_fault ? std::min(index_at(rec, t_clear), n - 1) : n;
    const double delta_pre_unwrapped = has_fault && i_pre_hi > 0 ? rec.delta_unwrapped[i_pre_hi - 1]
                                                                 : rec.delta_unwrapped.front();

    if (has_fault) {
        for (std::size_t i = i_fault_lo; i <= i_fault_hi && i < n; ++i) {
            m.max_abs_dsindelta_fault =
                std::max(m.max_abs_dsindelta_fault, std::abs(rec.sin_delta[i] - m.sin_delta_prefault));
            for (int ph = 0; ph < 3; ++ph) {
                m.i_rms_max_fault[ph] = std::max(m.i_rms_max_fault[ph], rec.i_rms[ph][i]);
            }
        }
        // Per-phase power band during the fault, skipping the detector
        // engagement transient (two fundamental cycles).
        const std::size_t i_band_lo = std::min(index_at(rec, t_start + 2.0 * cycle), n - 1);
        for (int ph = 0; ph < 3; ++ph) {
            double lo = rec.p_phase[ph][i_band_lo];
            double hi = lo;
            for (std::size_t i = i_band_lo; i <= i_fault_hi && i < n; ++i) {
                lo = std::min(lo, rec.p_phase[ph][i]);
                hi = std::max(hi, rec.p_phase[ph][i]);
            }
            m.p_phase_fault_min[ph] = lo;
            m.p_phase_fault_max[ph] = hi;
        }

        for (std::size_t i = i_fault_lo; i < n; ++i) {
            m.max_abs_dsindelta =
                std::max(m.max_abs_dsindelta, std::abs(rec.sin_delta[i] - m.sin_delta_prefault));
        }
        m.sync_loss = m.max_abs_dsindelta > sync_loss_threshold;

        // Full negative revolutions of the unwrapped load angle.
        int flips = 0;
        for (std::size_t i = i_fault_lo + 1; i < n; ++i) {
            const double prev = rec.delta_unwrapped[i - 1] - delta_pre_unwrapped;
            const double cur = rec.delta_unwrapped[i] - delta_pre_unwrapped;
            const double thresh = -pm::two_pi * (1 + flips);
            if (prev > thresh && cur <= thresh) ++flips;
        }
        m.flip_count = flips;

        // Post-clearance reversal and recovery.
        const std::size_t i_clear = std::min(index_at(rec, t_clear), n - 1);
        m.min_p_postclear = p_avg[i_clear];
        double hold = 0.0;
        for (std::size_t i = i_clear; i < n; ++i) {
            m.min_p_postclear = std::min(m.min_p_postclear, p_avg[i]);
            if (p_avg[i] < -reversal_frac * std::abs(sc.p_ref)) {
                hold += dt_rec;
                if (hold >= reversal_hold_s && !m.power_reversal) {
                    m.power_reversal = true;
                    m.power_reversal_time = rec.t[i];
                }
            } else {
                hold = 0.0;
            }
        }
        for (int ph = 0; ph < 3; ++ph) {
            double hold_ph = 0.0;
            const double thresh = -reversal_frac * std::abs(sc.p_ref) / 3.0;
            for (std::size_t i = i_fault_lo; i < n; ++i) {
                if (rec.p_phase[ph][i] < thresh) {
                    hold_ph += dt_rec;
                    if (hold_ph >= reversal_hold_s) m.phase_reversal[ph] = true;
                } else {
                    hold_ph = 0.0;
                }
            }
        }

        if (sc.p_ref != 0.0) {
            // Recovered once the cycle-averaged power no longer leaves the
            // band for a full fundamental cycle; shorter grazes from the
            // averaging residue do not restart the clock, which keeps the
            // metric robust across step sizes.
            const double band = recovery_band_frac * std::abs(sc.p_ref);
            double out_dur = 0.0;
            std::size_t rec_idx = i_clear;
            bool recovered_at_end = true;
            for (std::size_t i = i_clear; i < n; ++i) {
                if (std::abs(p_avg[i] - sc.p_ref) > band) {
                    out_dur += dt_rec;
                    if (out_dur >= cycle) rec_idx = std::min(i + 1, n - 1);
                    if (i + 1 == n) recovered_at_end = false;
                } else {
                    out_dur = 0.0;
                }
            }
            if (recovered_at_end) {
                m.recovery_time = std::max(0.0, rec.t[rec_idx] - t_clear);
            }
        }
    }

    const std::size_t i_tail = (n > static_cast<std::size_t>(0.05 / dt_rec))
                                   ? n - static_cast<std::size_t>(0.05 / dt_rec)
                                   : 0;
    m.p_final = mean_range(p_avg, i_tail, n);
    for (int ph = 0; ph < 3; ++ph) m.p_phase_final[ph] = mean_range(rec.p_phase[ph], i_tail, n);

    for (std::size_t i = 1; i < n; ++i) {
        if (rec.breaker[i - 1] == 1 && rec.breaker[i] == 0) {
            m.breaker_tripped = true;
            m.breaker_trip_time = rec.t[i];
            m.breaker_trip_reason = "active power reversal";
            break;
        }
    }
    return m;
}

}  // namespace sim
}  // namespace vocfrt
