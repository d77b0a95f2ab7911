#ifndef VOCFRT_FRT_HPP
#define VOCFRT_FRT_HPP

#include <array>
#include <vector>

#include "vocfrt/inner_control.hpp"
#include "vocfrt/phase_math.hpp"

namespace vocfrt {
namespace frt {

/// Fault ride-through tuning. Thresholds are fractions of nominal peak
/// amplitude; the clear threshold sits above the fault threshold to
/// give the detector hysteresis.
struct FrtParams {
    double gamma = 0.0;             // A/V, voltage-sync feedback gain
    double fault_threshold = 0.85;  // p.u. of v_n
    double clear_threshold = 0.90;  // p.u. of v_n
    double debounce = 0.005;        // s
};

/// Per-phase amplitude/phase tracker with fault flags. Phase estimates
/// follow the tracker only while it is locked (healthy amplitude and
/// small residual); otherwise they coast at the frequency estimate, and
/// on losing lock they rewind onto a short pre-disturbance history so a
/// collapsing waveform cannot drag the reference. Unit vectors thus stay
/// defined through bolted faults.
struct DetectorState {
    std::array<pm::QuadraturePair, 3> trackers;
    std::array<double, 3> amplitude = {0.0, 0.0, 0.0};  // V peak
    std::array<double, 3> phase = {0.0, 0.0, 0.0};      // rad, unwrapped-continuous
    std::array<bool, 3> fault_flag = {false, false, false};
    std::array<bool, 3> locked = {true, true, true};
    std::array<int, 3> below_count = {0, 0, 0};  // samples under fault threshold
    std::array<int, 3> above_count = {0, 0, 0};  // samples over clear threshold
    double omega_est = 0.0;                      // rad/s, shared frequency estimate

    std::array<std::vector<double>, 3> phase_hist;  // ring buffer of locked phases
    std::size_t hist_pos = 0;
};

/// Lock gates: tracker amplitude above this fraction of nominal and
/// residual below lock_residual_frac of nominal.
constexpr double detector_lock_amplitude = 0.9;
/// Length of the phase history used to rewind at loss of lock.
constexpr double detector_rewind_window = 1.5e-3;  // s

enum class ModeKind { normal, current_sync, voltage_sync };

struct FrtMode {
    ModeKind kind = ModeKind::normal;
    std::array<bool, 3> faulted = {false, false, false};

    int faulted_count() const { return (faulted[0] ? 1 : 0) + (faulted[1] ? 1 : 0) + (faulted[2] ? 1 : 0); }
};

DetectorState detector_init(double amplitude, const std::array<double, 3>& theta0, double omega);

/// Advance the detector one sample. v_n and omega_n are the nominal
/// amplitude and frequency the thresholds and the frequency clamp refer to.
DetectorState detector_step(const DetectorState& state, const pm::ThreePhase& v_pcc,
                            const FrtParams& params, double v_n, double omega_n, double dt);

FrtMode select_mode(const std::array<bool, 3>& flags);

/// Feedback for the all-phases-faulted mode: gamma-scaled error between
/// the oscillator voltages and nominal-amplitude grid unit vectors.
pm::ThreePhase voltage_sync_feedback(const pm::ThreePhase& v_voc, const pm::ThreePhase& unit_vectors,
                                     double v_voc_nominal, double gamma);

/// Pair form of the same law, applied member-wise to the orthogonal
/// oscillator and unit-vector pairs.
pm::AlphaBeta0 voltage_sync_feedback_pair(const pm::AlphaBeta0& v_voc_pair,
                                          const pm::AlphaBeta0& unit_pair, double v_voc_nominal,
                                          double gamma);

/// Feedback pairs for the at-least-one-healthy-phase mode. Faulted
/// phases get estimates built from the healthy measurements: the
/// negated sum of the other two when one phase is out, +/-120 degree
/// displacements of the single healthy phase when two are out. Healthy
/// phases keep their measured pairs. Throws ModeMismatch unless the
/// mode is current_sync.
std::array<pm::AlphaBeta0, 3> current_sync_feedback(const std::array<pm::AlphaBeta0, 3>& i_out_pairs,
                                                    const FrtMode& mode);

/// Cap the power reference at what the current limit can deliver into
/// the sagged voltage; identity in normal mode.
double power_ref_adapt(const FrtMode& mode, double v_pcc_fault, const ctrl::CurrentLimits& limits,
                       double p_ref);

}  // namespace frt
}  // namespace vocfrt

#endif
