#include <doctest.h>

#include <cmath>
#include <random>

#include "vocfrt/errors.hpp"
#include "vocfrt/sim_engine.hpp"
#include "vocfrt/vo_core.hpp"

using namespace vocfrt;

namespace {

voc::VocParams nominal_params() {
    return sim::default_scenario().voc;
}

// Feedback pair producing exactly the requested three-phase powers
// against the given oscillator state.
pm::AlphaBeta0 fb_for_power(const voc::OscState& s, double p, double q) {
    const double v2 = s.v_alpha * s.v_alpha + s.v_beta * s.v_beta;
    const double a = 2.0 * p / (3.0 * v2);
    const double b = 2.0 * q / (3.0 * v2);
    return {a * s.v_alpha + b * s.v_beta, a * s.v_beta - b * s.v_alpha, 0.0};
}

struct Polar {
    double omega;
    double v_dot;
};

Polar polar_rates(const voc::OscState& s, const voc::OscState& d) {
    const double v2 = s.v_alpha * s.v_alpha + s.v_beta * s.v_beta;
    Polar r;
    r.omega = (s.v_alpha * d.v_beta - s.v_beta * d.v_alpha) / v2;
    r.v_dot = (s.v_alpha * d.v_alpha + s.v_beta * d.v_beta) / std::sqrt(v2);
    return r;
}

voc::OscState integrate_unforced(voc::OscState s, const voc::VocParams& p, double duration,
                                 double dt, const pm::AlphaBeta0& fb = {}) {
    const long n = std::lround(duration / dt);
    for (long k = 0; k < n; ++k) {
        const voc::OscState k1 = voc::voc_derivative(s, fb, p);
        voc::OscState m{s.v_alpha + 0.5 * dt * k1.v_alpha, s.v_beta + 0.5 * dt * k1.v_beta};
        const voc::OscState k2 = voc::voc_derivative(m, fb, p);
        m = {s.v_alpha + 0.5 * dt * k2.v_alpha, s.v_beta + 0.5 * dt * k2.v_beta};
        const voc::OscState k3 = voc::voc_derivative(m, fb, p);
        m = {s.v_alpha + dt * k3.v_alpha, s.v_beta + dt * k3.v_beta};
        const voc::OscState k4 = voc::voc_derivative(m, fb, p);
        s.v_alpha += dt / 6.0 * (k1.v_alpha + 2.0 * (k2.v_alpha + k3.v_alpha) + k4.v_alpha);
        s.v_beta += dt / 6.0 * (k1.v_beta + 2.0 * (k2.v_beta + k3.v_beta) + k4.v_beta);
    }
    return s;
}

}  // namespace

TEST_CASE("oscillator equilibrium at reference power and nominal amplitude") {
    voc::VocParams p = nominal_params();
    p.p_ref = 9000.0;
    p.q_ref = 500.0;
    voc::OscState s{p.v_n * std::cos(0.4), p.v_n * std::sin(0.4)};
    const pm::AlphaBeta0 fb = fb_for_power(s, p.p_ref, p.q_ref);
    const auto pw = voc::pair_power(s, fb);
    REQUIRE(pw.p == doctest::Approx(p.p_ref).epsilon(1e-12));
    REQUIRE(pw.q == doctest::Approx(p.q_ref).epsilon(1e-12));

    const Polar r = polar_rates(s, voc::voc_derivative(s, fb, p));
    CHECK(r.omega == doctest::Approx(p.omega_n).epsilon(1e-12));
    CHECK(std::abs(r.v_dot) < 1e-9);
}

TEST_CASE("frequency offset is proportional to the power error") {
    voc::VocParams p = nominal_params();
    p.p_ref = 9000.0;
    p.q_ref = 0.0;
    voc::OscState s{p.v_n, 0.0};
    const double dp = 2500.0;
    const pm::AlphaBeta0 fb = fb_for_power(s, p.p_ref + dp, 0.0);
    const Polar r = polar_rates(s, voc::voc_derivative(s, fb, p));
    const double expected = -p.k_v * p.k_i * dp / (3.0 * p.c_osc * p.v_n * p.v_n);
    CHECK(r.omega - p.omega_n == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("amplitude restores from below nominal") {
    voc::VocParams p = nominal_params();
    p.p_ref = 0.0;
    p.q_ref = 0.0;
    voc::OscState s{p.v_n / 2.0, 0.0};
    const Polar r = polar_rates(s, voc::voc_derivative(s, {}, p));
    CHECK(r.v_dot > 0.0);

    const voc::OscState end = integrate_unforced(s, p, 0.2, 50e-6);
    CHECK(end.amplitude() == doctest::Approx(p.v_n).epsilon(0.005));
}

TEST_CASE("oscillator current reference") {
    const double v = 400.0 * std::sqrt(2.0);
    const double i = voc::i_dvoc_ref(v, 9000.0, 1e-3 * v);
    CHECK(i == doctest::Approx(2.0 * 9000.0 / (3.0 * v)).epsilon(1e-12));
    CHECK(i == doctest::Approx(10.6066).epsilon(1e-4));
    CHECK(1.5 * v * i == doctest::Approx(9000.0).epsilon(1e-12));

    CHECK(voc::i_dvoc_ref(v, 0.0, 1.0) == 0.0);
    CHECK(voc::i_dvoc_ref(2.0 * v, 9000.0, 1.0) == doctest::Approx(i / 2.0).epsilon(1e-12));
}

TEST_CASE("amplitude floor raises") {
    voc::VocParams p = nominal_params();
    voc::OscState s{1e-4 * p.v_n, 0.0};
    CHECK_THROWS_AS(voc::voc_derivative(s, {}, p), AmplitudeCollapse);
    CHECK_THROWS_AS(voc::i_dvoc_ref(1e-4 * p.v_n, 9000.0, 1e-3 * p.v_n), AmplitudeCollapse);
}

TEST_CASE("droop residuals") {
    voc::VocParams p = nominal_params();
    p.p_ref = 9000.0;
    p.q_ref = 0.0;
    voc::OscState s{p.v_n, 0.0};

    auto r = voc::droop_residual(s, p.p_ref, p.q_ref, p);
    CHECK(std::abs(r.delta_omega) < 1e-12);
    CHECK(std::abs(r.dv) < 1e-9);

    // inverting the frequency droop law
    const double delta = 1.7;
    const double p_off = p.p_ref + 3.0 * p.c_osc * p.v_n * p.v_n * delta / (p.k_v * p.k_i);
    r = voc::droop_residual(s, p_off, 0.0, p);
    CHECK(r.delta_omega == doctest::Approx(-delta).epsilon(1e-9));

    // slope of the residual around the reference matches the droop gain
    const double slope_expected = -p.k_v * p.k_i / (3.0 * p.c_osc * p.v_n * p.v_n);
    const double d1 = voc::droop_residual(s, p.p_ref + 100.0, 0.0, p).delta_omega;
    const double d2 = voc::droop_residual(s, p.p_ref - 100.0, 0.0, p).delta_omega;
    CHECK((d1 - d2) / 200.0 == doctest::Approx(slope_expected).epsilon(1e-9));
}

TEST_CASE("unforced oscillator converges from random initial states") {
    voc::VocParams p = nominal_params();
    p.p_ref = 0.0;
    p.q_ref = 0.0;
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> amp(0.05, 2.0);
    std::uniform_real_distribution<double> ang(-M_PI, M_PI);

    for (int trial = 0; trial < 20; ++trial) {
        const double a0 = amp(rng) * p.v_n;
        const double th0 = ang(rng);
        voc::OscState s{a0 * std::cos(th0), a0 * std::sin(th0)};
        const double dt = 50e-6;
        s = integrate_unforced(s, p, 0.5, dt);
        CHECK(s.amplitude() == doctest::Approx(p.v_n).epsilon(0.005));

        // frequency over the last stretch from the unwrapped angle
        double th = s.angle();
        double unwrapped = 0.0;
        voc::OscState probe = s;
        const long n = std::lround(0.2 / dt);
        for (long k = 0; k < n; ++k) {
            probe = integrate_unforced(probe, p, dt, dt);
            const double now = probe.angle();
            unwrapped += pm::wrap_angle(now - th);
            th = now;
        }
        const double omega_meas = unwrapped / 0.2;
        CHECK(omega_meas == doctest::Approx(p.omega_n).epsilon(1e-4));
    }
}
