#ifndef VOCFRT_PHASE_MATH_HPP
#define VOCFRT_PHASE_MATH_HPP

#include <array>
#include <cmath>

namespace vocfrt {
namespace pm {

constexpr double sqrt3 = 1.7320508075688772935;
constexpr double two_pi = 6.2831853071795864769;

/// Per-phase instantaneous sample triple (volts or amperes).
struct ThreePhase {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    double& operator[](int i) { return i == 0 ? a : (i == 1 ? b : c); }
    double operator[](int i) const { return i == 0 ? a : (i == 1 ? b : c); }

    ThreePhase operator+(const ThreePhase& o) const { return {a + o.a, b + o.b, c + o.c}; }
    ThreePhase operator-(const ThreePhase& o) const { return {a - o.a, b - o.b, c - o.c}; }
    ThreePhase operator*(double s) const { return {a * s, b * s, c * s}; }
};

/// Stationary-frame sample (amplitude-invariant convention).
struct AlphaBeta0 {
    double alpha = 0.0;
    double beta = 0.0;
    double zero = 0.0;
};

/// Rotating-frame sample plus the frame angle it was produced with.
struct Dq0 {
    double d = 0.0;
    double q = 0.0;
    double zero = 0.0;
    double theta = 0.0;  // rad, frame angle used by park()
};

/// Peak magnitude and angle wrapped to (-pi, pi].
struct Phasor {
    double magnitude = 0.0;
    double angle = 0.0;
};

/// Band-pass quadrature generator state. `direct` tracks the input
/// fundamental, `quadrature` is the same fundamental lagged 90 degrees,
/// `dc` is the rejected dc-offset estimate.
struct QuadraturePair {
    double direct = 0.0;
    double quadrature = 0.0;
    double omega_est = 0.0;  // rad/s, frequency the pair is tuned to
    double dc = 0.0;
};

/// Quadrature-generator gains. k sets the band-pass damping, k_dc the
/// dc-rejection loop speed.
constexpr double sogi_k = 1.4142135623730950488;
constexpr double sogi_k_dc = 0.3;

double wrap_angle(double theta);

AlphaBeta0 clarke(const ThreePhase& x);
ThreePhase inverse_clarke(const AlphaBeta0& x);

Dq0 park(const AlphaBeta0& x, double theta);
AlphaBeta0 inverse_park(const Dq0& x);

/// Instantaneous three-phase active and reactive power.
/// p is the plain dot product; q uses the line-voltage cross convention
/// (filter-free, three-wire measurement).
struct PowerSample {
    double p = 0.0;  // W
    double q = 0.0;  // var
};
PowerSample inst_power(const ThreePhase& v, const ThreePhase& i);

/// Advance the quadrature generator one step of dt at tuning frequency
/// omega. Internally integrates the continuous band-pass dynamics with a
/// fourth-order stage so the response matches the analog prototype.
QuadraturePair sogi_step(const QuadraturePair& state, double input, double omega, double dt);

/// Initialize a pair as already converged on A*cos(theta0).
QuadraturePair sogi_converged(double amplitude, double theta0, double omega);

/// Fundamental of the tracked signal with `shift` added to its phase:
/// returns A*cos(theta + shift) for a pair tracking A*cos(theta).
double phase_shift(const QuadraturePair& pair, double shift);

/// Rotate a (direct, quadrature) pair by `shift` rad; pair analogue of
/// phase_shift, used to synthesize displaced per-phase signals.
AlphaBeta0 rotate_pair(const AlphaBeta0& pair, double shift);

struct SymmetricComponents {
    Phasor positive;
    Phasor negative;
    Phasor zero;
};
SymmetricComponents symmetric_components(const Phasor& a, const Phasor& b, const Phasor& c);
std::array<Phasor, 3> reconstruct_from_components(const SymmetricComponents& s);

}  // namespace pm
}  // namespace vocfrt

#endif
