#ifndef VOCFRT_PLANT_HPP
#define VOCFRT_PLANT_HPP

#include <array>
#include <string>

#include "vocfrt/phase_math.hpp"

namespace vocfrt {
namespace plant {

/// Averaged inverter bridge behind an LC filter into a Thevenin grid,
/// all per phase (four-wire equivalent, phases decoupled).
struct PlantParams {
    double l_f = 0.0;      // H/phase
    double c_f = 0.0;      // F/phase
    double r_f = 0.0;      // ohm, filter parasitic
    double l_g = 0.0;      // H, grid Thevenin inductance
    double r_g = 0.0;      // ohm, grid Thevenin resistance
    double v_g = 0.0;      // V peak grid EMF
    double omega_g = 0.0;  // rad/s
    double r_load = 0.0;   // ohm, local shunt load at the PCC; 0 = none
};

/// Shunt fault branch at the PCC on a subset of phases. The branch is
/// the fault resistance in series with a small inductance (cable/arc
/// scale), which also keeps the branch integrable at the fixed step.
/// At t_clear the branch arms for interruption and each phase opens at
/// its next current zero crossing, like a physical breaker.
struct FaultSpec {
    std::array<bool, 3> phases = {false, false, false};
    double t_start = 0.0;  // s
    double t_clear = 0.0;  // s
    double impedance = 0.0;  // ohm, per faulted phase
    double series_inductance = 20e-6;  // H

    bool in_window(double t) const {
        return t >= t_start && t < t_clear && (phases[0] || phases[1] || phases[2]) &&
               t_clear > t_start;
    }
};

struct PlantState {
    pm::ThreePhase i_inv;    // A, inverter-side inductor currents
    pm::ThreePhase v_pcc;    // V, capacitor / PCC voltages
    pm::ThreePhase i_grid;   // A, grid-side currents
    pm::ThreePhase i_fault;  // A, fault-branch currents
    std::array<bool, 3> fault_conducting = {false, false, false};
    bool breaker_closed = true;
    std::string trip_reason;
};

pm::ThreePhase grid_voltage(double t, const PlantParams& params);

/// Fault-branch current on conducting phases, zero elsewhere.
pm::ThreePhase fault_current(const PlantState& state);

/// Local shunt load current at the PCC (zero when r_load is 0).
pm::ThreePhase load_current(const PlantState& state, const PlantParams& params);

/// Continuous-time derivative of the network. Breaker state and the
/// per-phase fault conduction flags gate the grid and fault branches.
/// Returned PlantState carries derivatives in the current/voltage slots.
PlantState plant_derivative(const PlantState& state, const pm::ThreePhase& v_inv_cmd, double t,
                            const PlantParams& params, const FaultSpec& fault);

/// Open the breaker, zero the grid current, record why. Throws
/// AlreadyOpen when the breaker is not closed.
PlantState breaker_trip(const PlantState& state, const std::string& reason);

/// KCL residual at the PCC node for a state/derivative pair; zero up to
/// rounding for a consistent derivative.
pm::ThreePhase kcl_residual(const PlantState& state, const PlantState& deriv,
                            const PlantParams& params);

}  // namespace plant
}  // namespace vocfrt

#endif
