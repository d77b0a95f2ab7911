#ifndef VOCFRT_ANALYSIS_HPP
#define VOCFRT_ANALYSIS_HPP

#include <vector>

#include "vocfrt/sim_engine.hpp"

namespace vocfrt {
namespace analysis {

/// Operating point at the instant a fault clears, reduced to the few
/// quantities the quasi-static load-angle model needs.
struct ClearanceSnapshot {
    double v_voc_f = 0.0;     // V, oscillator amplitude at clearance
    double v_pcc = 0.0;       // V, restored bus amplitude
    double delta_c = 0.0;     // rad, load angle at clearance
    double integrator = 0.0;  // A, voltage-loop integral state (anti-windup frozen)

    double k_pv = 0.0;
    double k_iv = 0.0;
    double c_f = 0.0;
    double omega_n = 0.0;
    double k_v = 1.0;
    double k_i = 1.0;
    double c_osc = 0.0;
    double xi = 0.0;
    double v_n = 0.0;   // V, nominal oscillator amplitude (recovery target)
    double p_ref = 0.0; // W
};

enum class Condition { condition1, condition2 };

struct ClearanceCondition {
    Condition which = Condition::condition1;
    bool boundary = false;
    double margin = 0.0;  // A, voltage-loop demand minus oscillator reference
};

/// Voltage-loop d-axis demand at load angle delta with the given
/// accumulated integral state.
double idpi_quasistatic(const ClearanceSnapshot& snap, double delta, double integrator_state);

/// Reduced post-clearance model: load angle, integral state and a
/// first-order oscillator-amplitude recovery integrated together.
struct DeltaTrajectory {
    std::vector<double> t;
    std::vector<double> delta;
    std::vector<double> v_voc;
    std::vector<double> i_dpi;
    std::vector<double> i_dvoc;
    bool diverged = false;
};
DeltaTrajectory delta_trajectory(const ClearanceSnapshot& snap, double horizon, double dt,
                                 bool track_amplitude_denominator = false);

ClearanceCondition classify_clearance(const ClearanceSnapshot& snap);

/// Ride-through success criteria evaluated on a finished run: the load
/// angle must stay near its pre-fault value through the fault, and
/// while the load angle is negative after clearance the voltage-loop
/// demand must stay under the oscillator reference until the amplitude
/// has recovered.
struct FrtCriteria {
    bool criterion1 = true;
    bool criterion2 = true;
    double max_abs_delta_dev = 0.0;  // rad, during fault
};
FrtCriteria frt_criteria(const sim::RunRecord& rec, const sim::Scenario& sc,
                         double delta_band = 0.2);

/// Snapshot extracted from a simulated record at the fault clearance
/// instant (bus amplitude read shortly after restoration).
ClearanceSnapshot snapshot_from_record(const sim::RunRecord& rec, const sim::Scenario& sc);

/// Snapshot for a synthetic (load angle, sag depth) grid point over a
/// base scenario; sag maps to the drooped oscillator amplitude.
ClearanceSnapshot snapshot_for_grid_point(const sim::Scenario& base, double delta_c, double sag,
                                          double droop_frac);

struct ClearanceGridSpec {
    double delta_lo = -0.03;
    double delta_hi = -3.11;
    int delta_count = 20;
    double sag_lo = 0.0;
    double sag_hi = 1.0;
    int sag_count = 20;
    double v_vocf_droop_frac = 0.05;  // amplitude droop at full sag depth
    double oracle_horizon = 2.5;      // s
};

struct ClearanceGridCell {
    double delta_c = 0.0;
    double sag = 0.0;
    double v_voc_f = 0.0;
    ClearanceCondition predicted;
    bool oracle_ran = false;
    bool oracle_diverged = false;
    bool agree = true;
};

struct ClearanceGridResult {
    std::vector<ClearanceGridCell> cells;  // row-major, delta outer
    double agreement = 1.0;                // fraction, only when oracle ran
    bool with_oracle = false;
};

/// Classify every grid point; optionally run the full simulation from
/// the same clearance state as ground truth, in parallel.
ClearanceGridResult run_clearance_grid(const sim::Scenario& base, const ClearanceGridSpec& spec,
                                       bool with_oracle, int workers);

/// Full-simulation divergence oracle for one clearance state: true when
/// the load angle commits to a negative revolution instead of settling.
bool oracle_diverges(const sim::Scenario& base, const ClearanceSnapshot& snap, double horizon);

}  // namespace analysis
}  // namespace vocfrt

#endif
