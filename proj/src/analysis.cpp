#include "vocfrt/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <complex>
#include <cmath>
#include <thread>

#include "vocfrt/errors.hpp"

namespace vocfrt {
namespace analysis {

double idpi_quasistatic(const ClearanceSnapshot& snap, double delta, double integrator_state) {
    return snap.k_pv * (snap.v_voc_f - snap.v_pcc * std::cos(delta)) + integrator_state -
           snap.omega_n * snap.c_f * snap.v_pcc * std::sin(-delta);
}

namespace {

double amplitude_recovery_tau(const ClearanceSnapshot& snap) {
    // Linearization of the autonomous amplitude dynamics at the faulted
    // amplitude; clamped away from the inflection point.
    const double slope = snap.xi / (snap.k_v * snap.k_v) *
                         (2.0 * snap.v_n * snap.v_n - 6.0 * snap.v_voc_f * snap.v_voc_f);
    const double mag = std::max(std::abs(slope), 1.0);
    return 1.0 / mag;
}

struct ReducedState {
    double delta;
    double lambda;  // A, integral state
    double v_voc;
};

ReducedState reduced_deriv(const ReducedState& s, const ClearanceSnapshot& snap, double tau,
                           bool track_denominator) {
    ClearanceSnapshot local = snap;
    local.v_voc_f = s.v_voc;
    const double i_dpi = idpi_quasistatic(local, s.delta, s.lambda);
    const double i_dvoc = 2.0 * snap.p_ref / (3.0 * s.v_voc);
    const double denom = track_denominator ? s.v_voc : snap.v_voc_f;

    ReducedState d;
    d.delta = -snap.k_v * snap.k_i / (2.0 * snap.c_osc * denom) * (i_dpi - i_dvoc);
    d.lambda = snap.k_iv * (s.v_voc - snap.v_pcc * std::cos(s.delta));
    d.v_voc = (snap.v_n - s.v_voc) / tau;
    return d;
}

}  // namespace

DeltaTrajectory delta_trajectory(const ClearanceSnapshot& snap, double horizon, double dt,
                                 bool track_amplitude_denominator) {
    if (dt <= 0.0) throw ConfigError("delta_trajectory dt must be positive");
    DeltaTrajectory out;
    const double tau = amplitude_recovery_tau(snap);
    ReducedState s{snap.delta_c, snap.integrator, snap.v_voc_f};

    const long n = std::lround(horizon / dt);
    out.t.reserve(n + 1);
    for (long k = 0; k <= n; ++k) {
        const double t = k * dt;
        ClearanceSnapshot local = snap;
        local.v_voc_f = s.v_voc;
        out.t.push_back(t);
        out.delta.push_back(s.delta);
        out.v_voc.push_back(s.v_voc);
        out.i_dpi.push_back(idpi_quasistatic(local, s.delta, s.lambda));
        out.i_dvoc.push_back(2.0 * snap.p_ref / (3.0 * s.v_voc));

        if (!std::isfinite(s.delta) || s.delta < snap.delta_c - pm::two_pi) {
            out.diverged = true;
            break;
        }
        if (k == n) break;

        const ReducedState k1 = reduced_deriv(s, snap, tau, track_amplitude_denominator);
        ReducedState m{s.delta + 0.5 * dt * k1.delta, s.lambda + 0.5 * dt * k1.lambda,
                       s.v_voc + 0.5 * dt * k1.v_voc};
        const ReducedState k2 = reduced_deriv(m, snap, tau, track_amplitude_denominator);
        m = ReducedState{s.delta + 0.5 * dt * k2.delta, s.lambda + 0.5 * dt * k2.lambda,
                         s.v_voc + 0.5 * dt * k2.v_voc};
        const ReducedState k3 = reduced_deriv(m, snap, tau, track_amplitude_denominator);
        m = ReducedState{s.delta + dt * k3.delta, s.lambda + dt * k3.lambda, s.v_voc + dt * k3.v_voc};
        const ReducedState k4 = reduced_deriv(m, snap, tau, track_amplitude_denominator);

        s.delta += dt / 6.0 * (k1.delta + 2.0 * (k2.delta + k3.delta) + k4.delta);
        s.lambda += dt / 6.0 * (k1.lambda + 2.0 * (k2.lambda + k3.lambda) + k4.lambda);
        s.v_voc += dt / 6.0 * (k1.v_voc + 2.0 * (k2.v_voc + k3.v_voc) + k4.v_voc);
    }
    return out;
}

ClearanceCondition classify_clearance(const ClearanceSnapshot& snap) {
    const double i_dpi = idpi_quasistatic(snap, snap.delta_c, snap.integrator);
    const double i_dvoc = 2.0 * snap.p_ref / (3.0 * snap.v_voc_f);
    ClearanceCondition c;
    c.margin = i_dpi - i_dvoc;
    if (i_dpi > i_dvoc) {
        c.which = Condition::condition2;
    } else {
        c.which = Condition::condition1;
        c.boundary = (i_dpi == i_dvoc);
    }
    return c;
}

FrtCriteria frt_criteria(const sim::RunRecord& rec, const sim::Scenario& sc, double delta_band) {
    FrtCriteria out;
    const std::size_t n = rec.size();
    if (n < 2 || !sc.has_fault()) return out;
    const double dt_rec = rec.t[1] - rec.t[0];
    const auto idx = [&](double t) {
        return std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, t / dt_rec)), n - 1);
    };

    const std::size_t i_start = idx(sc.fault.t_start);
    const std::size_t i_clear = idx(sc.fault.t_clear);
    const double delta_pre = i_start > 0 ? rec.delta_unwrapped[i_start - 1] : rec.delta_unwrapped[0];

    for (std::size_t i = i_start; i <= i_clear && i < n; ++i) {
        out.max_abs_delta_dev =
            std::max(out.max_abs_delta_dev, std::abs(rec.delta_unwrapped[i] - delta_pre));
    }
    out.criterion1 = out.max_abs_delta_dev < delta_band;

    // Demand ordering while the load angle is negative, from clearance
    // until the oscillator amplitude is back within 2% of nominal.
    std::size_t i_rec = n;
    for (std::size_t i = i_clear; i < n; ++i) {
        if (std::abs(rec.v_voc_amp[0][i] - sc.voc.v_n) < 0.02 * sc.voc.v_n) {
            i_rec = i;
            break;
        }
    }
    for (std::size_t i = i_clear; i < std::min(i_rec, n); ++i) {
        if (rec.delta_unwrapped[i] - delta_pre < 0.0 && rec.i_dpi_a[i] >= rec.i_dvoc_a[i]) {
            out.criterion2 = false;
            break;
        }
    }
    return out;
}

ClearanceSnapshot snapshot_from_record(const sim::RunRecord& rec, const sim::Scenario& sc) {
    ClearanceSnapshot s;
    const std::size_t n = rec.size();
    const double dt_rec = rec.t[1] - rec.t[0];
    const auto idx = [&](double t) {
        return std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, t / dt_rec)), n - 1);
    };
    const std::size_t i_clear = idx(sc.fault.t_clear);
    const std::size_t i_settle = idx(sc.fault.t_clear + 0.02);

    s.v_voc_f = rec.v_voc_amp[0][i_clear];
    s.delta_c = rec.delta_unwrapped[i_clear];
    // Restored bus amplitude: peak estimate one cycle after clearance.
    double vmax = 0.0;
    const std::size_t i_hi = std::min(i_settle + idx(0.02), n - 1);
    for (std::size_t i = i_settle; i <= i_hi; ++i) vmax = std::max(vmax, std::abs(rec.v_pcc[0][i]));
    s.v_pcc = vmax;
    s.integrator = 2.0 * sc.p_ref / (3.0 * sc.voc.v_n);

    s.k_pv = sc.inner.k_pv;
    s.k_iv = sc.inner.k_iv;
    s.c_f = sc.inner.c_f;
    s.omega_n = sc.inner.omega_n;
    s.k_v = sc.voc.k_v;
    s.k_i = sc.voc.k_i;
    s.c_osc = sc.voc.c_osc;
    s.xi = sc.voc.xi;
    s.v_n = sc.voc.v_n;
    s.p_ref = sc.p_ref;
    return s;
}

ClearanceSnapshot snapshot_for_grid_point(const sim::Scenario& base, double delta_c, double sag,
                                          double droop_frac) {
    ClearanceSnapshot s;
    s.v_voc_f = base.voc.v_n * (1.0 - droop_frac * sag);
    // Restored bus amplitude right after clearance: the grid EMF plus
    // the drop of the still-railed inverter current (active limit on the
    // d axis, remaining headroom exporting reactive) through the grid
    // impedance and the local load.
    {
        using cplx = std::complex<double>;
        const double w = base.plant.omega_g;
        const cplx z_g(base.plant.r_g, w * base.plant.l_g);
        cplx y_node = 1.0 / z_g + cplx(0.0, w * base.plant.c_f);
        if (base.plant.r_load > 0.0) y_node += 1.0 / base.plant.r_load;
        const double q_room = std::sqrt(std::max(
            0.0, base.limits.i_max_mag * base.limits.i_max_mag -
                     base.limits.i_d_upper * base.limits.i_d_upper));
        const cplx i_inj = cplx(base.limits.i_d_upper, -q_room) * std::polar(1.0, delta_c);
        s.v_pcc = std::abs((base.plant.v_g / z_g + i_inj) / y_node);
    }
    s.delta_c = delta_c;
    s.integrator = 2.0 * base.p_ref / (3.0 * base.voc.v_n);

    s.k_pv = base.inner.k_pv;
    s.k_iv = base.inner.k_iv;
    s.c_f = base.inner.c_f;
    s.omega_n = base.inner.omega_n;
    s.k_v = base.voc.k_v;
    s.k_i = base.voc.k_i;
    s.c_osc = base.voc.c_osc;
    s.xi = base.voc.xi;
    s.v_n = base.voc.v_n;
    s.p_ref = base.p_ref;
    return s;
}

bool oracle_diverges(const sim::Scenario& base, const ClearanceSnapshot& snap, double horizon) {
    sim::Scenario sc = base;
    sc.frt_enabled = false;
    sc.bidirectional_source = true;
    sc.fault = plant::FaultSpec{};
    sc.duration = horizon;
    sc.init_override.enabled = true;
    sc.init_override.delta0 = snap.delta_c;
    sc.init_override.v_voc0 = snap.v_voc_f;
    sc.init_override.vloop_int_d0 = snap.integrator;
    sc.validate_and_finalize();

    sim::SimState s = sim::init_state(sc);
    const long n_steps = std::lround(sc.duration / sc.dt);
    try {
        for (long k = 1; k <= n_steps; ++k) {
            sim::step(s, sc);
            // Committed to a negative revolution once past the saddle.
            if (s.delta_unwrapped < -M_PI) return true;
        }
    } catch (...) {
        return true;
    }
    return false;
}

ClearanceGridResult run_clearance_grid(const sim::Scenario& base, const ClearanceGridSpec& spec,
                                       bool with_oracle, int workers) {
    ClearanceGridResult result;
    result.with_oracle = with_oracle;

    const int nd = std::max(1, spec.delta_count);
    const int ns = std::max(1, spec.sag_count);
    result.cells.resize(static_cast<std::size_t>(nd) * ns);

    for (int i = 0; i < nd; ++i) {
        const double delta =
            nd == 1 ? spec.delta_lo
                    : spec.delta_lo + (spec.delta_hi - spec.delta_lo) * i / (nd - 1.0);
        for (int j = 0; j < ns; ++j) {
            const double sag =
                ns == 1 ? spec.sag_lo : spec.sag_lo + (spec.sag_hi - spec.sag_lo) * j / (ns - 1.0);
            ClearanceGridCell& cell = result.cells[static_cast<std::size_t>(i) * ns + j];
            cell.delta_c = delta;
            cell.sag = sag;
            const ClearanceSnapshot snap =
                snapshot_for_grid_point(base, delta, sag, spec.v_vocf_droop_frac);
            cell.v_voc_f = snap.v_voc_f;
            cell.predicted = classify_clearance(snap);
        }
    }

    if (with_oracle) {
        std::atomic<std::size_t> next{0};
        const int n_workers = std::max(1, workers);
        auto worker = [&]() {
            while (true) {
                const std::size_t idx = next.fetch_add(1);
                if (idx >= result.cells.size()) break;
                ClearanceGridCell& cell = result.cells[idx];
                const ClearanceSnapshot snap = snapshot_for_grid_point(
                    base, cell.delta_c, cell.sag, spec.v_vocf_droop_frac);
                cell.oracle_diverged = oracle_diverges(base, snap, spec.oracle_horizon);
                cell.oracle_ran = true;
                cell.agree =
                    (cell.predicted.which == Condition::condition2) == cell.oracle_diverged;
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();

        std::size_t agree = 0;
        for (const auto& cell : result.cells) {
            if (cell.agree) ++agree;
        }
        result.agreement = static_cast<double>(agree) / result.cells.size();
    }
    return result;
}

}  // namespace analysis
}  // namespace vocfrt
