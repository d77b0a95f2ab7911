#include "vocfrt/scenario_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include "vocfrt/errors.hpp"

namespace vocfrt {
namespace io {

namespace {

class StrictObject {
  public:
    StrictObject(const json& j, std::string path) : obj_(j), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    double number(const char* key) {
        const json& v = get(key);
        if (!v.is_number()) throw ConfigError(path_ + key + ": expected a number");
        return v.get<double>();
    }

    std::uint64_t unsigned_int(const char* key) {
        const json& v = get(key);
        if (!v.is_number_unsigned() && !v.is_number_integer()) {
            throw ConfigError(path_ + key + ": expected an integer");
        }
        return v.get<std::uint64_t>();
    }

    int integer(const char* key) {
        const json& v = get(key);
        if (!v.is_number_integer() && !v.is_number_unsigned()) {
            throw ConfigError(path_ + key + ": expected an integer");
        }
        return v.get<int>();
    }

    bool boolean(const char* key) {
        const json& v = get(key);
        if (!v.is_boolean()) throw ConfigError(path_ + key + ": expected a boolean");
        return v.get<bool>();
    }

    std::string string(const char* key) {
        const json& v = get(key);
        if (!v.is_string()) throw ConfigError(path_ + key + ": expected a string");
        return v.get<std::string>();
    }

    const json& object(const char* key) {
        return get(key);
    }

    /// Call after all reads; rejects keys that were never consumed.
    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError(path_ + it.key() + ": unknown key");
            }
        }
    }

  private:
    const json& get(const char* key) {
        auto it = obj_.find(key);
        if (it == obj_.end()) throw ConfigError(path_ + key + ": missing key");
        seen_.insert(key);
        return *it;
    }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

ScenarioConfig default_config() {
    const sim::Scenario sc = sim::default_scenario();
    ScenarioConfig c;
    c.duration_s = sc.duration;
    c.dt_us = 10.0;
    c.decimate = sc.decimate;
    c.seed = sc.seed;
    c.p_ref_W = sc.p_ref;
    c.q_ref_var = sc.q_ref;
    c.frt_enabled = sc.frt_enabled;
    c.bidirectional_source = sc.bidirectional_source;
    c.anti_windup_enabled = sc.anti_windup_enabled;
    c.osc_perturb_frac = sc.osc_perturb_frac;

    c.v_nom_V_peak = sc.voc.v_n;
    c.omega_nom_rad_per_s = sc.voc.omega_n;
    c.k_v_V_per_V = sc.voc.k_v;
    c.k_i_A_per_A = sc.voc.k_i;
    c.c_osc_F = sc.voc.c_osc;
    c.xi_per_V2s = sc.voc.xi;

    c.k_pv_A_per_V = sc.inner.k_pv;
    c.k_iv_A_per_Vs = sc.inner.k_iv;
    c.k_pc_V_per_A = sc.inner.k_pc;
    c.k_ic_V_per_As = sc.inner.k_ic;

    c.i_d_upper_A = sc.limits.i_d_upper;
    c.i_d_lower_A = sc.limits.i_d_lower;
    c.i_max_mag_A_peak = sc.limits.i_max_mag;

    c.gamma_A_per_V = sc.frt.gamma;
    c.fault_threshold_pu = sc.frt.fault_threshold;
    c.clear_threshold_pu = sc.frt.clear_threshold;
    c.debounce_s = sc.frt.debounce;

    c.l_f_mH = 2.0;
    c.c_f_uF = 8.0;
    c.r_f_ohm = sc.plant.r_f;
    c.l_g_mH = sc.plant.l_g * 1e3;
    c.r_g_ohm = sc.plant.r_g;
    c.r_load_ohm = sc.plant.r_load;
    c.v_g_V_peak = sc.plant.v_g;
    c.omega_g_rad_per_s = sc.plant.omega_g;

    c.fault_phases = "";
    c.fault_t_start_s = 0.5;
    c.fault_t_clear_s = 0.75;
    c.fault_impedance_ohm = 0.05;
    return c;
}

json config_to_json(const ScenarioConfig& c) {
    json j;
    j["duration_s"] = c.duration_s;
    j["dt_us"] = c.dt_us;
    j["decimate"] = c.decimate;
    j["seed"] = c.seed;
    j["p_ref_W"] = c.p_ref_W;
    j["q_ref_var"] = c.q_ref_var;
    j["frt_enabled"] = c.frt_enabled;
    j["bidirectional_source"] = c.bidirectional_source;
    j["anti_windup_enabled"] = c.anti_windup_enabled;
    j["osc_perturb_frac"] = c.osc_perturb_frac;
    j["voc"] = {
        {"v_nom_V_peak", c.v_nom_V_peak},
        {"omega_nom_rad_per_s", c.omega_nom_rad_per_s},
        {"k_v_V_per_V", c.k_v_V_per_V},
        {"k_i_A_per_A", c.k_i_A_per_A},
        {"c_osc_F", c.c_osc_F},
        {"xi_per_V2s", c.xi_per_V2s},
    };
    j["inner"] = {
        {"k_pv_A_per_V", c.k_pv_A_per_V},
        {"k_iv_A_per_Vs", c.k_iv_A_per_Vs},
        {"k_pc_V_per_A", c.k_pc_V_per_A},
        {"k_ic_V_per_As", c.k_ic_V_per_As},
    };
    j["limits"] = {
        {"i_d_upper_A", c.i_d_upper_A},
        {"i_d_lower_A", c.i_d_lower_A},
        {"i_max_mag_A_peak", c.i_max_mag_A_peak},
    };
    j["frt"] = {
        {"gamma_A_per_V", c.gamma_A_per_V},
        {"fault_threshold_pu", c.fault_threshold_pu},
        {"clear_threshold_pu", c.clear_threshold_pu},
        {"debounce_s", c.debounce_s},
    };
    j["plant"] = {
        {"l_f_mH", c.l_f_mH},
        {"c_f_uF", c.c_f_uF},
        {"r_f_ohm", c.r_f_ohm},
        {"l_g_mH", c.l_g_mH},
        {"r_g_ohm", c.r_g_ohm},
        {"r_load_ohm", c.r_load_ohm},
        {"v_g_V_peak", c.v_g_V_peak},
        {"omega_g_rad_per_s", c.omega_g_rad_per_s},
    };
    j["fault"] = {
        {"phases", c.fault_phases},
        {"t_start_s", c.fault_t_start_s},
        {"t_clear_s", c.fault_t_clear_s},
        {"impedance_ohm", c.fault_impedance_ohm},
    };
    return j;
}

ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig c;
    StrictObject root(j, "");
    c.duration_s = root.number("duration_s");
    c.dt_us = root.number("dt_us");
    c.decimate = root.integer("decimate");
    c.seed = root.unsigned_int("seed");
    c.p_ref_W = root.number("p_ref_W");
    c.q_ref_var = root.number("q_ref_var");
    c.frt_enabled = root.boolean("frt_enabled");
    c.bidirectional_source = root.boolean("bidirectional_source");
    c.anti_windup_enabled = root.boolean("anti_windup_enabled");
    c.osc_perturb_frac = root.number("osc_perturb_frac");

    {
        StrictObject voc(root.object("voc"), "voc.");
        c.v_nom_V_peak = voc.number("v_nom_V_peak");
        c.omega_nom_rad_per_s = voc.number("omega_nom_rad_per_s");
        c.k_v_V_per_V = voc.number("k_v_V_per_V");
        c.k_i_A_per_A = voc.number("k_i_A_per_A");
        c.c_osc_F = voc.number("c_osc_F");
        c.xi_per_V2s = voc.number("xi_per_V2s");
        voc.finish();
    }
    {
        StrictObject inner(root.object("inner"), "inner.");
        c.k_pv_A_per_V = inner.number("k_pv_A_per_V");
        c.k_iv_A_per_Vs = inner.number("k_iv_A_per_Vs");
        c.k_pc_V_per_A = inner.number("k_pc_V_per_A");
        c.k_ic_V_per_As = inner.number("k_ic_V_per_As");
        inner.finish();
    }
    {
        StrictObject limits(root.object("limits"), "limits.");
        c.i_d_upper_A = limits.number("i_d_upper_A");
        c.i_d_lower_A = limits.number("i_d_lower_A");
        c.i_max_mag_A_peak = limits.number("i_max_mag_A_peak");
        limits.finish();
    }
    {
        StrictObject frt(root.object("frt"), "frt.");
        c.gamma_A_per_V = frt.number("gamma_A_per_V");
        c.fault_threshold_pu = frt.number("fault_threshold_pu");
        c.clear_threshold_pu = frt.number("clear_threshold_pu");
        c.debounce_s = frt.number("debounce_s");
        frt.finish();
    }
    {
        StrictObject plant(root.object("plant"), "plant.");
        c.l_f_mH = plant.number("l_f_mH");
        c.c_f_uF = plant.number("c_f_uF");
        c.r_f_ohm = plant.number("r_f_ohm");
        c.l_g_mH = plant.number("l_g_mH");
        c.r_g_ohm = plant.number("r_g_ohm");
        c.r_load_ohm = plant.number("r_load_ohm");
        c.v_g_V_peak = plant.number("v_g_V_peak");
        c.omega_g_rad_per_s = plant.number("omega_g_rad_per_s");
        plant.finish();
    }
    {
        StrictObject fault(root.object("fault"), "fault.");
        c.fault_phases = fault.string("phases");
        c.fault_t_start_s = fault.number("t_start_s");
        c.fault_t_clear_s = fault.number("t_clear_s");
        c.fault_impedance_ohm = fault.number("impedance_ohm");
        fault.finish();
    }
    root.finish();
    return c;
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config_from_json(j);
}

sim::Scenario to_scenario(const ScenarioConfig& c) {
    sim::Scenario sc;
    sc.duration = c.duration_s;
    sc.dt = c.dt_us * 1e-6;
    sc.decimate = c.decimate;
    sc.seed = c.seed;
    sc.p_ref = c.p_ref_W;
    sc.q_ref = c.q_ref_var;
    sc.frt_enabled = c.frt_enabled;
    sc.bidirectional_source = c.bidirectional_source;
    sc.anti_windup_enabled = c.anti_windup_enabled;
    sc.osc_perturb_frac = c.osc_perturb_frac;

    sc.voc.v_n = c.v_nom_V_peak;
    sc.voc.omega_n = c.omega_nom_rad_per_s;
    sc.voc.k_v = c.k_v_V_per_V;
    sc.voc.k_i = c.k_i_A_per_A;
    sc.voc.c_osc = c.c_osc_F;
    sc.voc.xi = c.xi_per_V2s;

    sc.inner.k_pv = c.k_pv_A_per_V;
    sc.inner.k_iv = c.k_iv_A_per_Vs;
    sc.inner.k_pc = c.k_pc_V_per_A;
    sc.inner.k_ic = c.k_ic_V_per_As;

    sc.limits.i_d_upper = c.i_d_upper_A;
    sc.limits.i_d_lower = c.i_d_lower_A;
    sc.limits.i_max_mag = c.i_max_mag_A_peak;

    sc.frt.gamma = c.gamma_A_per_V;
    sc.frt.fault_threshold = c.fault_threshold_pu;
    sc.frt.clear_threshold = c.clear_threshold_pu;
    sc.frt.debounce = c.debounce_s;

    sc.plant.l_f = c.l_f_mH * 1e-3;
    sc.plant.c_f = c.c_f_uF * 1e-6;
    sc.plant.r_f = c.r_f_ohm;
    sc.plant.l_g = c.l_g_mH * 1e-3;
    sc.plant.r_g = c.r_g_ohm;
    sc.plant.r_load = c.r_load_ohm;
    sc.plant.v_g = c.v_g_V_peak;
    sc.plant.omega_g = c.omega_g_rad_per_s;

    sc.fault.phases = {false, false, false};
    for (char ch : c.fault_phases) {
        if (ch == 'a') sc.fault.phases[0] = true;
        else if (ch == 'b') sc.fault.phases[1] = true;
        else if (ch == 'c') sc.fault.phases[2] = true;
        else throw ConfigError(std::string("fault.phases: unknown phase '") + ch + "'");
    }
    sc.fault.t_start = c.fault_t_start_s;
    sc.fault.t_clear = c.fault_t_clear_s;
    sc.fault.impedance = c.fault_impedance_ohm;

    sc.validate_and_finalize();
    return sc;
}

std::vector<std::string> preset_names() {
    return {"paper-sec2-baseline", "paper-sec2-frt", "paper-sec5-slg", "paper-sec5-dlg"};
}

ScenarioConfig preset_config(const std::string& name) {
    ScenarioConfig c = default_config();
    if (name == "paper-sec2-baseline" || name == "paper-sec2-frt") {
        c.duration_s = 3.5;
        c.p_ref_W = 9000.0;
        c.fault_phases = "abc";
        c.fault_t_start_s = 0.5;
        c.fault_t_clear_s = 0.75;
        c.bidirectional_source = true;
        c.frt_enabled = (name == "paper-sec2-frt");
    } else if (name == "paper-sec5-slg" || name == "paper-sec5-dlg") {
        c.duration_s = 1.5;
        c.p_ref_W = 15000.0;
        c.fault_phases = (name == "paper-sec5-slg") ? "a" : "ab";
        c.fault_t_start_s = 0.5;
        c.fault_t_clear_s = 0.75;
        c.bidirectional_source = false;
        c.frt_enabled = true;
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    return c;
}

std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string timeseries_csv_header() {
    return "t_s,v_pcc_a_V,v_pcc_b_V,v_pcc_c_V,i_inv_a_A,i_inv_b_A,i_inv_c_A,p_W,q_var,"
           "p_a_W,p_b_W,p_c_W,v_voc_a_V,sin_delta,frt_mode,limiter_d,limiter_mag,breaker";
}

void write_timeseries_csv(std::ostream& os, const sim::RunRecord& rec) {
    os << timeseries_csv_header() << '\n';
    for (std::size_t i = 0; i < rec.size(); ++i) {
        os << format_double(rec.t[i]);
        for (int ph = 0; ph < 3; ++ph) os << ',' << format_double(rec.v_pcc[ph][i]);
        for (int ph = 0; ph < 3; ++ph) os << ',' << format_double(rec.i_inv[ph][i]);
        os << ',' << format_double(rec.p[i]) << ',' << format_double(rec.q[i]);
        for (int ph = 0; ph < 3; ++ph) os << ',' << format_double(rec.p_phase[ph][i]);
        os << ',' << format_double(rec.v_voc_a[i]) << ',' << format_double(rec.sin_delta[i]) << ','
           << rec.frt_mode[i] << ',' << rec.limiter_d[i] << ',' << rec.limiter_mag[i] << ','
           << rec.breaker[i] << '\n';
    }
}

json metrics_to_json(const sim::Metrics& m, const sim::Scenario& sc) {
    json j;
    j["run_valid"] = m.run_valid;
    j["nonfinite"] = m.nonfinite;
    j["nonfinite_reason"] = m.nonfinite_reason;
    j["p_ref_W"] = sc.p_ref;
    j["sin_delta_prefault"] = m.sin_delta_prefault;
    j["max_abs_dsindelta_fault"] = m.max_abs_dsindelta_fault;
    j["max_abs_dsindelta"] = m.max_abs_dsindelta;
    j["sync_loss"] = m.sync_loss;
    j["min_p_postclear_W"] = m.min_p_postclear;
    j["power_reversal"] = m.power_reversal;
    j["power_reversal_t_s"] = m.power_reversal_time;
    j["phase_reversal_a"] = m.phase_reversal[0];
    j["phase_reversal_b"] = m.phase_reversal[1];
    j["phase_reversal_c"] = m.phase_reversal[2];
    j["recovery_time_s"] = m.recovery_time;
    j["flip_count"] = m.flip_count;
    j["i_rms_max_fault_a_A"] = m.i_rms_max_fault[0];
    j["i_rms_max_fault_b_A"] = m.i_rms_max_fault[1];
    j["i_rms_max_fault_c_A"] = m.i_rms_max_fault[2];
    j["p_prefault_W"] = m.p_prefault;
    j["p_phase_prefault_a_W"] = m.p_phase_prefault[0];
    j["p_phase_prefault_b_W"] = m.p_phase_prefault[1];
    j["p_phase_prefault_c_W"] = m.p_phase_prefault[2];
    j["p_phase_fault_min_a_W"] = m.p_phase_fault_min[0];
    j["p_phase_fault_min_b_W"] = m.p_phase_fault_min[1];
    j["p_phase_fault_min_c_W"] = m.p_phase_fault_min[2];
    j["p_phase_fault_max_a_W"] = m.p_phase_fault_max[0];
    j["p_phase_fault_max_b_W"] = m.p_phase_fault_max[1];
    j["p_phase_fault_max_c_W"] = m.p_phase_fault_max[2];
    j["p_final_W"] = m.p_final;
    j["p_phase_final_a_W"] = m.p_phase_final[0];
    j["p_phase_final_b_W"] = m.p_phase_final[1];
    j["p_phase_final_c_W"] = m.p_phase_final[2];
    j["breaker_tripped"] = m.breaker_tripped;
    j["breaker_trip_t_s"] = m.breaker_trip_time;
    return j;
}

}  // namespace io
}  // namespace vocfrt
