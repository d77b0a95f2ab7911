#include "vocfrt/phase_math.hpp"

#include <complex>

namespace vocfrt {
namespace pm {

double wrap_angle(double theta) {
    double w = std::fmod(theta + M_PI, two_pi);
    if (w < 0.0) w += two_pi;
    return w - M_PI;
}

AlphaBeta0 clarke(const ThreePhase& x) {
    AlphaBeta0 r;
    r.alpha = (2.0 / 3.0) * (x.a - 0.5 * x.b - 0.5 * x.c);
    r.beta = (2.0 / 3.0) * (sqrt3 / 2.0) * (x.b - x.c);
    r.zero = (x.a + x.b + x.c) / 3.0;
    return r;
}

ThreePhase inverse_clarke(const AlphaBeta0& x) {
    ThreePhase r;
    r.a = x.alpha + x.zero;
    r.b = -0.5 * x.alpha + (sqrt3 / 2.0) * x.beta + x.zero;
    r.c = -0.5 * x.alpha - (sqrt3 / 2.0) * x.beta + x.zero;
    return r;
}

Dq0 park(const AlphaBeta0& x, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Dq0 r;
    r.d = x.alpha * c + x.beta * s;
    r.q = -x.alpha * s + x.beta * c;
    r.zero = x.zero;
    r.theta = theta;
    return r;
}

AlphaBeta0 inverse_park(const Dq0& x) {
    const double c = std::cos(x.theta);
    const double s = std::sin(x.theta);
    AlphaBeta0 r;
    r.alpha = x.d * c - x.q * s;
    r.beta = x.d * s + x.q * c;
    r.zero = x.zero;
    return r;
}

PowerSample inst_power(const ThreePhase& v, const ThreePhase& i) {
    PowerSample r;
    r.p = v.a * i.a + v.b * i.b + v.c * i.c;
    r.q = ((v.b - v.c) * i.a + (v.c - v.a) * i.b + (v.a - v.b) * i.c) / sqrt3;
    return r;
}

namespace {

struct SogiDeriv {
    double d_direct;
    double d_quad;
    double d_dc;
};

SogiDeriv sogi_deriv(const QuadraturePair& s, double input, double omega) {
    const double e = input - s.direct - s.dc;
    SogiDeriv r;
    r.d_direct = sogi_k * omega * e - omega * s.quadrature;
    r.d_quad = omega * s.direct;
    r.d_dc = sogi_k_dc * omega * e;
    return r;
}

}  // namespace

QuadraturePair sogi_step(const QuadraturePair& state, double input, double omega, double dt) {
    // RK4 on the 3-state linear band-pass with the input held over the step.
    QuadraturePair s = state;
    const SogiDeriv k1 = sogi_deriv(s, input, omega);
    QuadraturePair m = s;
    m.direct = s.direct + 0.5 * dt * k1.d_direct;
    m.quadrature = s.quadrature + 0.5 * dt * k1.d_quad;
    m.dc = s.dc + 0.5 * dt * k1.d_dc;
    const SogiDeriv k2 = sogi_deriv(m, input, omega);
    m.direct = s.direct + 0.5 * dt * k2.d_direct;
    m.quadrature = s.quadrature + 0.5 * dt * k2.d_quad;
    m.dc = s.dc + 0.5 * dt * k2.d_dc;
    const SogiDeriv k3 = sogi_deriv(m, input, omega);
    m.direct = s.direct + dt * k3.d_direct;
    m.quadrature = s.quadrature + dt * k3.d_quad;
    m.dc = s.dc + dt * k3.d_dc;
    const SogiDeriv k4 = sogi_deriv(m, input, omega);

    QuadraturePair out;
    out.direct = s.direct + dt / 6.0 * (k1.d_direct + 2.0 * (k2.d_direct + k3.d_direct) + k4.d_direct);
    out.quadrature = s.quadrature + dt / 6.0 * (k1.d_quad + 2.0 * (k2.d_quad + k3.d_quad) + k4.d_quad);
    out.dc = s.dc + dt / 6.0 * (k1.d_dc + 2.0 * (k2.d_dc + k3.d_dc) + k4.d_dc);
    out.omega_est = omega;
    return out;
}

QuadraturePair sogi_converged(double amplitude, double theta0, double omega) {
    QuadraturePair p;
    p.direct = amplitude * std::cos(theta0);
    p.quadrature = amplitude * std::sin(theta0);
    p.omega_est = omega;
    p.dc = 0.0;
    return p;
}

double phase_shift(const QuadraturePair& pair, double shift) {
    return pair.direct * std::cos(shift) - pair.quadrature * std::sin(shift);
}

AlphaBeta0 rotate_pair(const AlphaBeta0& pair, double shift) {
    const double c = std::cos(shift);
    const double s = std::sin(shift);
    AlphaBeta0 r;
    r.alpha = pair.alpha * c - pair.beta * s;
    r.beta = pair.alpha * s + pair.beta * c;
    r.zero = pair.zero;
    return r;
}

namespace {

std::complex<double> to_complex(const Phasor& p) {
    return std::polar(p.magnitude, p.angle);
}

Phasor to_phasor(const std::complex<double>& z) {
    Phasor p;
    p.magnitude = std::abs(z);
    p.angle = (p.magnitude > 0.0) ? std::arg(z) : 0.0;
    return p;
}

}  // namespace

SymmetricComponents symmetric_components(const Phasor& a, const Phasor& b, const Phasor& c) {
    const std::complex<double> rot = std::polar(1.0, two_pi / 3.0);
    const std::complex<double> za = to_complex(a);
    const std::complex<double> zb = to_complex(b);
    const std::complex<double> zc = to_complex(c);
    SymmetricComponents r;
    r.positive = to_phasor((za + rot * zb + rot * rot * zc) / 3.0);
    r.negative = to_phasor((za + rot * rot * zb + rot * zc) / 3.0);
    r.zero = to_phasor((za + zb + zc) / 3.0);
    return r;
}

std::array<Phasor, 3> reconstruct_from_components(const SymmetricComponents& s) {
    const std::complex<double> rot = std::polar(1.0, two_pi / 3.0);
    const std::complex<double> zp = to_complex(s.positive);
    const std::complex<double> zn = to_complex(s.negative);
    const std::complex<double> z0 = to_complex(s.zero);
    std::array<Phasor, 3> out;
    out[0] = to_phasor(z0 + zp + zn);
    out[1] = to_phasor(z0 + rot * rot * zp + rot * zn);
    out[2] = to_phasor(z0 + rot * zp + rot * rot * zn);
    return out;
}

}  // namespace pm
}  // namespace vocfrt
