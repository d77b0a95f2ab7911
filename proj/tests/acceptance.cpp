// Acceptance suite: one case per release criterion, each printing a
// single pass/fail line so the run reads as a checklist.
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "vocfrt/analysis.hpp"
#include "vocfrt/scenario_io.hpp"

using namespace vocfrt;

namespace {

constexpr double omega50 = pm::two_pi * 50.0;

struct CachedRun {
    sim::Scenario scenario;
    sim::RunResult result;
    double wall_seconds = 0.0;
};

const CachedRun& preset_run(const std::string& name) {
    static std::map<std::string, CachedRun> cache;
    auto it = cache.find(name);
    if (it == cache.end()) {
        CachedRun r;
        r.scenario = io::to_scenario(io::preset_config(name));
        const auto t0 = std::chrono::steady_clock::now();
        r.result = sim::run(r.scenario);
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        it = cache.emplace(name, std::move(r)).first;
    }
    return it->second;
}

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
}

std::string fmt2(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

}  // namespace

TEST_CASE("criterion 1: output current stays under the limit during the fault") {
    bool pass = true;
    std::ostringstream detail;
    for (const char* name : {"paper-sec2-baseline", "paper-sec2-frt"}) {
        const CachedRun& r = preset_run(name);
        const double limit_rms = 20.0 * 1.05;
        double worst = 0.0;
        for (int ph = 0; ph < 3; ++ph) worst = std::max(worst, r.result.metrics.i_rms_max_fault[ph]);
        pass = pass && r.result.metrics.run_valid && worst <= limit_rms;
        // runtime budget: under 10 s per 1.5 s simulated
        const double budget = 10.0 * r.scenario.duration / 1.5;
        pass = pass && r.wall_seconds < budget;
        detail << name << " worst_rms=" << fmt2(worst) << "A wall=" << fmt2(r.wall_seconds) << "s  ";
    }
    detail << "(limit 21 A)";
    report(1, pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 2: baseline loses synchronization, reverses power, slips one turn") {
    const CachedRun& r = preset_run("paper-sec2-baseline");
    const sim::Metrics& m = r.result.metrics;
    const bool reconverged = std::abs(m.p_final - r.scenario.p_ref) <= 0.02 * r.scenario.p_ref;
    const bool pass = m.run_valid && m.sync_loss && m.power_reversal && m.flip_count == 1 &&
                      reconverged;
    std::ostringstream detail;
    detail << "sync_loss=" << m.sync_loss << " reversal=" << m.power_reversal
           << " flips=" << m.flip_count << " p_final=" << fmt2(m.p_final) << "W";
    report(2, pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 3: ride-through holds the load angle and recovers fast") {
    const CachedRun& frt = preset_run("paper-sec2-frt");
    const CachedRun& base = preset_run("paper-sec2-baseline");
    const sim::Metrics& m = frt.result.metrics;
    const bool angle_held = m.max_abs_dsindelta_fault <= 0.1;
    const bool no_reversal =
        !m.power_reversal && m.min_p_postclear > -0.02 * frt.scenario.p_ref;
    const bool fast = m.recovery_time > 0.0 && base.result.metrics.recovery_time > 0.0 &&
                      m.recovery_time <= 0.5 * base.result.metrics.recovery_time;
    const bool pass = m.run_valid && angle_held && no_reversal && fast;
    std::ostringstream detail;
    detail << "max|dsin|=" << fmt2(m.max_abs_dsindelta_fault)
           << " min_p_post=" << fmt2(m.min_p_postclear) << "W recovery=" << fmt2(m.recovery_time)
           << "s vs baseline " << fmt2(base.result.metrics.recovery_time) << "s";
    report(3, pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 4: unbalanced faults ride through with healthy phases undisturbed") {
    bool pass = true;
    std::ostringstream detail;
    for (const char* name : {"paper-sec5-slg", "paper-sec5-dlg"}) {
        const CachedRun& r = preset_run(name);
        const sim::Metrics& m = r.result.metrics;
        const double share = r.scenario.p_ref / 3.0;

        bool ok = m.run_valid;
        for (int ph = 0; ph < 3; ++ph) {
            ok = ok && std::abs(m.p_phase_prefault[ph] - share) <= 0.02 * share;
            ok = ok && std::abs(m.p_phase_final[ph] - share) <= 0.02 * share;
            ok = ok && !m.phase_reversal[ph];
            if (r.scenario.fault.phases[ph]) {
                ok = ok && m.i_rms_max_fault[ph] <= 20.0 * 1.05;
            } else {
                ok = ok && m.p_phase_fault_min[ph] >= 0.9 * share &&
                     m.p_phase_fault_max[ph] <= 1.1 * share;
            }
        }
        pass = pass && ok;
        detail << name << (ok ? " ok" : " FAIL") << "  ";
    }
    report(4, pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 5: measured frequency droop matches the design slope") {
    const sim::Scenario base = io::to_scenario(io::preset_config("paper-sec2-baseline"));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = 5;
    for (int k = -2; k <= 2; ++k) {
        sim::Scenario sc = base;
        sc.duration = 1.5;
        sc.fault = plant::FaultSpec{};
        sc.plant.omega_g = base.voc.omega_n * (1.0 + 0.0025 * k);
        sc.validate_and_finalize();
        const sim::RunResult r = sim::run(sc);
        const double w = sc.plant.omega_g;
        const double p = r.metrics.p_final;
        sx += w;
        sy += p;
        sxx += w * w;
        sxy += w * p;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double expected =
        -3.0 * base.voc.c_osc * base.voc.v_n * base.voc.v_n / (base.voc.k_v * base.voc.k_i);
    const double err = std::abs(slope - expected) / std::abs(expected);
    const bool pass = err < 0.02;
    report(5, pass,
           "slope=" + fmt2(slope) + " W/(rad/s), design=" + fmt2(expected) + ", err=" +
               fmt2(100.0 * err) + "%");
    CHECK(pass);
}

TEST_CASE("criterion 6: unloaded oscillator settles at nominal amplitude") {
    voc::VocParams p = sim::default_scenario().voc;
    p.p_ref = 0.0;
    p.q_ref = 0.0;
    voc::OscState s{0.3 * p.v_n, 0.1 * p.v_n};
    const double dt = 50e-6;
    for (int k = 0; k < 20000; ++k) {
        const voc::OscState k1 = voc::voc_derivative(s, {}, p);
        voc::OscState m{s.v_alpha + 0.5 * dt * k1.v_alpha, s.v_beta + 0.5 * dt * k1.v_beta};
        const voc::OscState k2 = voc::voc_derivative(m, {}, p);
        m = {s.v_alpha + 0.5 * dt * k2.v_alpha, s.v_beta + 0.5 * dt * k2.v_beta};
        const voc::OscState k3 = voc::voc_derivative(m, {}, p);
        m = {s.v_alpha + dt * k3.v_alpha, s.v_beta + dt * k3.v_beta};
        const voc::OscState k4 = voc::voc_derivative(m, {}, p);
        s.v_alpha += dt / 6.0 * (k1.v_alpha + 2.0 * (k2.v_alpha + k3.v_alpha) + k4.v_alpha);
        s.v_beta += dt / 6.0 * (k1.v_beta + 2.0 * (k2.v_beta + k3.v_beta) + k4.v_beta);
    }
    const double err = std::abs(s.amplitude() - p.v_n) / p.v_n;
    const bool pass = err < 0.005;
    report(6, pass, "amplitude=" + fmt2(s.amplitude()) + "V vs nominal " + fmt2(p.v_n) + "V (" +
                        fmt2(100.0 * err) + "%)");
    CHECK(pass);
}

TEST_CASE("criterion 7: detector speed and no-trip band") {
    const frt::FrtParams params = sim::default_scenario().frt;
    const double v_n = sim::default_scenario().voc.v_n;
    const std::array<double, 3> th0 = {0.0, -pm::two_pi / 3.0, pm::two_pi / 3.0};
    const double dt = 10e-6;

    const auto run_sag = [&](double pu, double t_end) {
        frt::DetectorState det = frt::detector_init(v_n, th0, omega50);
        double t = 0.0;
        double flagged_at = -1.0;
        const double t_step = 0.1;
        while (t < t_end) {
            pm::ThreePhase v;
            for (int ph = 0; ph < 3; ++ph) {
                const double amp = t >= t_step ? pu * v_n : v_n;
                v[ph] = amp * std::cos(omega50 * t + th0[ph]);
            }
            det = frt::detector_step(det, v, params, v_n, omega50, dt);
            t += dt;
            if (flagged_at < 0.0 && (det.fault_flag[0] || det.fault_flag[1] || det.fault_flag[2])) {
                flagged_at = t - t_step;
            }
        }
        return flagged_at;
    };

    const double t_deep = run_sag(0.5, 0.15);
    const double t_shallow = run_sag(0.9, 1.1);
    const bool pass = t_deep > 0.0 && t_deep <= 0.010 && t_shallow < 0.0;
    report(7, pass,
           "50% sag flagged in " + fmt2(t_deep * 1e3) + " ms; 10% sag flagged=" +
               (t_shallow > 0.0 ? "yes" : "never"));
    CHECK(pass);
}

TEST_CASE("criterion 8: feedback-law identities") {
    bool pass = true;
    std::ostringstream detail;

    // one faulted phase: the negated healthy sum reproduces the balanced
    // third current to numerical precision
    {
        std::array<pm::AlphaBeta0, 3> pairs;
        for (int ph = 0; ph < 3; ++ph) {
            const double th = 0.45 - ph * pm::two_pi / 3.0;
            pairs[ph] = {21.0 * std::cos(th), 21.0 * std::sin(th), 0.0};
        }
        frt::FrtMode m;
        m.kind = frt::ModeKind::current_sync;
        m.faulted = {false, false, true};
        const auto fb = frt::current_sync_feedback(pairs, m);
        const double err = std::hypot(fb[2].alpha - pairs[2].alpha, fb[2].beta - pairs[2].beta);
        pass = pass && err <= 1e-9;
        detail << "one-fault err=" << fmt2(err) << "A ";
    }

    // two faulted phases: displaced estimates within 2% after settling
    {
        const double amp = 14.0, th0 = 0.2, dt = 10e-6;
        pm::QuadraturePair trk{};
        double t = 0.0;
        for (int k = 0; k < 16000; ++k) {
            trk = pm::sogi_step(trk, amp * std::cos(omega50 * t + th0), omega50, dt);
            t += dt;
        }
        frt::FrtMode m;
        m.kind = frt::ModeKind::current_sync;
        m.faulted = {false, true, true};
        double worst = 0.0;
        for (int k = 0; k < 2000; ++k) {
            trk = pm::sogi_step(trk, amp * std::cos(omega50 * t + th0), omega50, dt);
            t += dt;
            std::array<pm::AlphaBeta0, 3> pairs{};
            pairs[0] = {trk.direct, trk.quadrature, 0.0};
            const auto fb = frt::current_sync_feedback(pairs, m);
            worst = std::max(worst,
                             std::abs(fb[1].alpha - amp * std::cos(omega50 * t + th0 - pm::two_pi / 3.0)));
            worst = std::max(worst,
                             std::abs(fb[2].alpha - amp * std::cos(omega50 * t + th0 + pm::two_pi / 3.0)));
        }
        pass = pass && worst <= 0.02 * amp;
        detail << "two-fault worst=" << fmt2(100.0 * worst / amp) << "% ";
    }

    // voltage-sync fixed point: zero feedback exactly at synchronization,
    // nonzero anywhere else
    {
        const double v_n = sim::default_scenario().voc.v_n;
        pm::ThreePhase units, v_voc;
        for (int ph = 0; ph < 3; ++ph) {
            const double th = 1.1 - ph * pm::two_pi / 3.0;
            units[ph] = std::cos(th);
            v_voc[ph] = v_n * std::cos(th);
        }
        const auto fb0 = frt::voltage_sync_feedback(v_voc, units, v_n, 0.191);
        bool zero_at_sync = true;
        for (int ph = 0; ph < 3; ++ph) zero_at_sync = zero_at_sync && std::abs(fb0[ph]) < 1e-12;
        pm::ThreePhase off = v_voc;
        off.b -= 2.5;
        const auto fb1 = frt::voltage_sync_feedback(off, units, v_n, 0.191);
        const bool nonzero_off_sync = std::abs(fb1.b) > 1e-12 && std::abs(fb1.a) < 1e-12;
        pass = pass && zero_at_sync && nonzero_off_sync;
        detail << "fixed-point=" << (zero_at_sync && nonzero_off_sync ? "ok" : "bad");
    }

    report(8, pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 9: quasi-static classifier agrees with the simulation oracle") {
    const sim::Scenario sc = io::to_scenario(io::preset_config("paper-sec2-baseline"));
    analysis::ClearanceGridSpec spec;  // defaults: 20 x 20 over angle x sag
    const auto t0 = std::chrono::steady_clock::now();
    const auto grid = analysis::run_clearance_grid(sc, spec, true, 8);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // disagreements must hug the predicted class boundary: a disagreeing
    // cell has a neighbor of the opposite predicted class
    int off_boundary = 0;
    const int nd = spec.delta_count, ns = spec.sag_count;
    const auto cls = [&](int i, int j) { return grid.cells[i * ns + j].predicted.which; };
    for (int i = 0; i < nd; ++i) {
        for (int j = 0; j < ns; ++j) {
            const auto& cell = grid.cells[i * ns + j];
            if (cell.agree) continue;
            bool near_boundary = false;
            for (int di = -2; di <= 2; ++di) {
                for (int dj = -2; dj <= 2; ++dj) {
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || jj < 0 || ii >= nd || jj >= ns) continue;
                    if (cls(ii, jj) != cell.predicted.which) near_boundary = true;
                }
            }
            if (!near_boundary) ++off_boundary;
        }
    }
    const bool pass = grid.agreement >= 0.90 && off_boundary == 0 && wall < 600.0;
    report(9, pass,
           "agreement=" + fmt2(100.0 * grid.agreement) + "% off-boundary disagreements=" +
               std::to_string(off_boundary) + " wall=" + fmt2(wall) + "s");
    CHECK(pass);
}

TEST_CASE("criterion 10: numerics are converged, deterministic and consistent") {
    bool pass = true;
    std::ostringstream detail;

    // Halving the step moves every criterion-checked metric by less than
    // 1% of the scale its criterion judges it against.
    {
        double worst = 0.0;
        bool flags_stable = true;
        for (const char* name : {"paper-sec2-baseline", "paper-sec2-frt", "paper-sec5-slg"}) {
            sim::Scenario sc = io::to_scenario(io::preset_config(name));
            const sim::RunResult coarse = sim::run(sc);
            sim::Scenario fine = sc;
            fine.dt = 5e-6;
            fine.decimate = 20;
            fine.validate_and_finalize();
            const sim::RunResult f = sim::run(fine);

            const auto rel = [&](double a, double b, double scale) {
                return std::abs(a - b) / std::max({std::abs(a), std::abs(b), scale});
            };
            const sim::Metrics& mc = coarse.metrics;
            const sim::Metrics& mf = f.metrics;
            worst = std::max(worst, rel(mc.p_final, mf.p_final, sc.p_ref));
            for (int ph = 0; ph < 3; ++ph) {
                worst = std::max(worst, rel(mc.i_rms_max_fault[ph], mf.i_rms_max_fault[ph], 21.0));
                worst = std::max(worst,
                                 rel(mc.p_phase_final[ph], mf.p_phase_final[ph], sc.p_ref / 3.0));
            }
            // load-angle excursion judged against the 0.1 ride-through band
            worst = std::max(worst,
                             rel(mc.max_abs_dsindelta_fault, mf.max_abs_dsindelta_fault, 0.1));
            if (std::string(name) != "paper-sec5-slg") {
                // recovery time enters the balanced-scenario comparison;
                // judged against the half-of-baseline scale
                worst = std::max(worst, rel(mc.recovery_time, mf.recovery_time, 0.5));
            } else {
                // the unbalanced criterion consumes the healthy-phase
                // power band instead, judged against its +/-10% width
                for (int ph = 0; ph < 3; ++ph) {
                    if (sc.fault.phases[ph]) continue;
                    worst = std::max(worst, rel(mc.p_phase_fault_min[ph], mf.p_phase_fault_min[ph],
                                                0.1 * sc.p_ref / 3.0));
                    worst = std::max(worst, rel(mc.p_phase_fault_max[ph], mf.p_phase_fault_max[ph],
                                                0.1 * sc.p_ref / 3.0));
                }
            }
            flags_stable = flags_stable && mc.flip_count == mf.flip_count &&
                           mc.sync_loss == mf.sync_loss && mc.power_reversal == mf.power_reversal;
        }
        pass = pass && worst < 0.01 && flags_stable;
        detail << "dt-halving worst=" << fmt2(100.0 * worst) << "% flags="
               << (flags_stable ? "stable " : "UNSTABLE ");
    }

    // byte-identical records for identical configurations
    {
        sim::Scenario sc = sim::default_scenario();
        sc.duration = 0.3;
        sc.validate_and_finalize();
        std::ostringstream a, b;
        io::write_timeseries_csv(a, sim::run(sc).record);
        io::write_timeseries_csv(b, sim::run(sc).record);
        pass = pass && a.str() == b.str();
        detail << "determinism=" << (a.str() == b.str() ? "ok" : "bad") << " ";
    }

    // the two implementations of the voltage-loop demand agree to 1e-9
    {
        const sim::Scenario sc = sim::default_scenario();
        std::mt19937_64 rng(271);
        std::uniform_real_distribution<double> vmag(100.0, 700.0);
        std::uniform_real_distribution<double> ang(-M_PI, M_PI);
        std::uniform_real_distribution<double> integ(-40.0, 40.0);
        double worst = 0.0;
        for (int k = 0; k < 10000; ++k) {
            analysis::ClearanceSnapshot s = analysis::snapshot_for_grid_point(sc, 0.0, 0.0, 0.05);
            s.v_voc_f = vmag(rng);
            s.v_pcc = vmag(rng);
            const double delta = ang(rng);
            const double lambda = integ(rng);
            ctrl::CtrlState ctl;
            ctl.vloop_int_d = lambda;
            pm::Dq0 v_ref;
            v_ref.d = s.v_voc_f;
            pm::Dq0 v_meas;
            v_meas.d = s.v_pcc * std::cos(delta);
            v_meas.q = s.v_pcc * std::sin(-delta);
            const ctrl::DqPair loop = ctrl::voltage_pi_step(v_ref, v_meas, ctl, sc.inner);
            const double quasi = analysis::idpi_quasistatic(s, delta, lambda);
            worst = std::max(worst, std::abs(loop.d - quasi) / std::max(1.0, std::abs(quasi)));
        }
        pass = pass && worst <= 1e-9;
        detail << "dual-route worst=" << fmt2(worst);
    }

    report(10, pass, detail.str());
    CHECK(pass);
}
