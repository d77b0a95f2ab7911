#ifndef VOCFRT_SIM_ENGINE_HPP
#define VOCFRT_SIM_ENGINE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vocfrt/frt.hpp"
#include "vocfrt/inner_control.hpp"
#include "vocfrt/plant.hpp"
#include "vocfrt/vo_core.hpp"

namespace vocfrt {
namespace sim {

/// Internal initial-condition override used by the clearance-state
/// analysis driver; not part of the configuration file surface.
struct InitOverride {
    bool enabled = false;
    double delta0 = 0.0;       // rad, oscillator angle relative to grid EMF
    double v_voc0 = 0.0;       // V peak
    double vloop_int_d0 = 0.0; // A, voltage-loop integrator preset
};

/// Declarative experiment description. p_ref/q_ref are mirrored into
/// the oscillator parameters by validate().
struct Scenario {
    double duration = 1.5;  // s
    double dt = 10e-6;      // s
    int decimate = 10;      // record every Nth step
    std::uint64_t seed = 1;
    double p_ref = 9000.0;  // W
    double q_ref = 0.0;     // var
    bool frt_enabled = false;
    bool bidirectional_source = true;
    bool anti_windup_enabled = true;
    double osc_perturb_frac = 0.0;  // seeded initial-state perturbation

    voc::VocParams voc;
    ctrl::InnerParams inner;
    ctrl::CurrentLimits limits;
    frt::FrtParams frt;
    plant::PlantParams plant;
    plant::FaultSpec fault;

    InitOverride init_override;

    bool has_fault() const {
        return (fault.phases[0] || fault.phases[1] || fault.phases[2]) &&
               fault.t_clear > fault.t_start && fault.t_start < duration;
    }

    /// Throws ConfigError on a violated invariant; mirrors p_ref/q_ref
    /// and the shared filter values into the sub-parameter structs.
    void validate_and_finalize();
};

/// Scenario with all defaults at the nominal operating point.
Scenario default_scenario();

/// Uniformly sampled run output. The first block of columns is the CSV
/// schema; the remaining vectors are internal series used by the
/// analysis module and the event detector.
struct RunRecord {
    std::vector<double> t;
    std::array<std::vector<double>, 3> v_pcc;
    std::array<std::vector<double>, 3> i_inv;
    std::vector<double> p;
    std::vector<double> q;
    std::array<std::vector<double>, 3> p_phase;  // cycle-averaged
    std::vector<double> v_voc_a;
    std::vector<double> sin_delta;
    std::vector<int> frt_mode;    // 0 normal, 1 current-sync, 2 voltage-sync
    std::vector<int> limiter_d;   // per-phase bitmask a|b<<1|c<<2
    std::vector<int> limiter_mag; // per-phase bitmask
    std::vector<int> breaker;     // 1 closed

    // internal series (not in the CSV)
    std::vector<double> delta_unwrapped;
    std::array<std::vector<double>, 3> i_rms;      // sliding one-cycle rms of i_inv
    std::array<std::vector<double>, 3> v_voc_amp;  // per-phase oscillator amplitude
    std::vector<double> i_dpi_a;                   // unsaturated d reference, phase a
    std::vector<double> i_dvoc_a;                  // oscillator d reference, phase a
    std::vector<double> p_ref_eff;

    std::size_t size() const { return t.size(); }
};

struct Metrics {
    bool run_valid = true;
    bool nonfinite = false;
    std::string nonfinite_reason;

    double sin_delta_prefault = 0.0;
    double max_abs_dsindelta_fault = 0.0;  // during fault window
    double max_abs_dsindelta = 0.0;        // during and after fault
    bool sync_loss = false;

    double min_p_postclear = 0.0;  // W
    bool power_reversal = false;
    double power_reversal_time = -1.0;  // s
    std::array<bool, 3> phase_reversal = {false, false, false};

    double recovery_time = -1.0;  // s from clearance; -1 = not recovered
    int flip_count = 0;           // full negative revolutions of the load angle

    std::array<double, 3> i_rms_max_fault = {0.0, 0.0, 0.0};  // A during fault
    double p_prefault = 0.0;
    std::array<double, 3> p_phase_prefault = {0.0, 0.0, 0.0};
    std::array<double, 3> p_phase_fault_min = {0.0, 0.0, 0.0};
    std::array<double, 3> p_phase_fault_max = {0.0, 0.0, 0.0};
    double p_final = 0.0;
    std::array<double, 3> p_phase_final = {0.0, 0.0, 0.0};

    bool breaker_tripped = false;
    double breaker_trip_time = -1.0;
    std::string breaker_trip_reason;
};

/// Full simulation state bundle: plant, oscillators, loop integrators,
/// measurement trackers, detector and bookkeeping.
struct SimState {
    double t = 0.0;
    plant::PlantState plant;
    std::array<voc::OscState, 3> osc;
    std::array<ctrl::CtrlState, 3> loops;
    frt::DetectorState detector;
    std::array<pm::QuadraturePair, 3> i_inv_trk;
    std::array<pm::QuadraturePair, 3> i_out_trk;
    frt::FrtMode mode;

    // moving windows for cycle averages, trip logic and rms
    std::array<std::vector<double>, 3> win_p;   // v_pcc*i_out per phase
    std::array<std::vector<double>, 3> win_i2;  // i_inv^2 per phase
    std::size_t win_pos = 0;
    std::size_t win_fill = 0;
    double reversal_hold = 0.0;  // s of sustained reversed cycle-average power

    // last controller outputs, held over the next step
    pm::ThreePhase v_cmd;
    std::array<pm::AlphaBeta0, 3> fb;
    std::array<ctrl::SatFlags, 3> sat;
    double i_dpi_a = 0.0;
    double i_dvoc_a = 0.0;
    double p_ref_eff = 0.0;

    double delta_wrapped = 0.0;
    double delta_unwrapped = 0.0;
};

SimState init_state(const Scenario& sc);

/// Advance one fixed step: controller update at the boundary, then
/// classical fourth-order integration of the plant and oscillators with
/// the controller outputs held. Throws NonFinite/AmplitudeCollapse on
/// numerical failure.
void step(SimState& s, const Scenario& sc);

struct RunResult {
    RunRecord record;
    Metrics metrics;
};

/// Execute a scenario end to end: integrate, record at the decimated
/// rate, derive metrics. Numerical failures are recorded in the metrics
/// with the partial record kept, not rethrown.
RunResult run(const Scenario& sc);

/// Wrapped load angle in (-pi, pi].
double load_angle(double theta_voc, double theta_grid);

/// Event metrics from a finished record.
Metrics detect_events(const RunRecord& rec, const Scenario& sc);

/// Sustained-reversal threshold (fraction of rated power) and hold time.
constexpr double reversal_frac = 0.02;
constexpr double reversal_hold_s = 0.005;
/// Load-angle excursion that counts as loss of synchronization.
constexpr double sync_loss_threshold = 0.5;
/// Recovery band around the power reference.
constexpr double recovery_band_frac = 0.02;

}  // namespace sim
}  // namespace vocfrt

#endif
