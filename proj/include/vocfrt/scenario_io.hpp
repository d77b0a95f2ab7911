#ifndef VOCFRT_SCENARIO_IO_HPP
#define VOCFRT_SCENARIO_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "vocfrt/sim_engine.hpp"

namespace vocfrt {
namespace io {

using json = nlohmann::ordered_json;

/// Configuration exactly as it appears on disk: human units, one field
/// per key. Kept verbatim so a scenario echo reproduces the same
/// resolved scenario bit for bit.
struct ScenarioConfig {
    double duration_s = 1.5;
    double dt_us = 10.0;
    int decimate = 10;
    std::uint64_t seed = 1;
    double p_ref_W = 9000.0;
    double q_ref_var = 0.0;
    bool frt_enabled = false;
    bool bidirectional_source = true;
    bool anti_windup_enabled = true;
    double osc_perturb_frac = 0.0;

    double v_nom_V_peak = 0.0;
    double omega_nom_rad_per_s = 0.0;
    double k_v_V_per_V = 1.0;
    double k_i_A_per_A = 1.0;
    double c_osc_F = 0.0;
    double xi_per_V2s = 0.0;

    double k_pv_A_per_V = 0.0;
    double k_iv_A_per_Vs = 0.0;
    double k_pc_V_per_A = 0.0;
    double k_ic_V_per_As = 0.0;

    double i_d_upper_A = 0.0;
    double i_d_lower_A = 0.0;
    double i_max_mag_A_peak = 0.0;

    double gamma_A_per_V = 0.0;
    double fault_threshold_pu = 0.85;
    double clear_threshold_pu = 0.90;
    double debounce_s = 0.005;

    double l_f_mH = 0.0;
    double c_f_uF = 0.0;
    double r_f_ohm = 0.0;
    double l_g_mH = 0.0;
    double r_g_ohm = 0.0;
    double r_load_ohm = 0.0;
    double v_g_V_peak = 0.0;
    double omega_g_rad_per_s = 0.0;

    std::string fault_phases;  // subset of "abc"
    double fault_t_start_s = 0.0;
    double fault_t_clear_s = 0.0;
    double fault_impedance_ohm = 0.05;
};

ScenarioConfig default_config();

json config_to_json(const ScenarioConfig& cfg);

/// Strict parse: unknown keys and wrong types are ConfigErrors naming
/// the offending key path.
ScenarioConfig config_from_json(const json& j);

ScenarioConfig load_config_file(const std::string& path);

/// Resolve to SI and validate.
sim::Scenario to_scenario(const ScenarioConfig& cfg);

std::vector<std::string> preset_names();
ScenarioConfig preset_config(const std::string& name);

/// Shortest round-trip decimal representation, locale-independent.
std::string format_double(double x);

void write_timeseries_csv(std::ostream& os, const sim::RunRecord& rec);
std::string timeseries_csv_header();

json metrics_to_json(const sim::Metrics& m, const sim::Scenario& sc);

}  // namespace io
}  // namespace vocfrt

#endif
