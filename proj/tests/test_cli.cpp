#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vocfrt/errors.hpp"
#include "vocfrt/scenario_io.hpp"

using namespace vocfrt;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return VOCFRT_CLI_PATH; }

int run_cli(const std::string& args, std::string* out_path = nullptr) {
    static int counter = 0;
    const fs::path log = fs::temp_directory_path() / ("vocfrt_cli_" + std::to_string(counter++) + ".log");
    const std::string cmd = std::string(cli_path()) + " " + args + " >" + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    if (out_path) *out_path = log.string();
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("vocfrt_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

io::ScenarioConfig quick_config() {
    io::ScenarioConfig cfg = io::default_config();
    cfg.duration_s = 0.3;
    cfg.dt_us = 20.0;
    cfg.decimate = 20;
    return cfg;
}

void write_config(const fs::path& path, const io::ScenarioConfig& cfg) {
    std::ofstream out(path);
    out << io::config_to_json(cfg).dump(2) << "\n";
}

}  // namespace

TEST_CASE("config round trip preserves the scenario") {
    const io::ScenarioConfig cfg = io::preset_config("paper-sec5-slg");
    const io::json j = io::config_to_json(cfg);
    const io::ScenarioConfig back = io::config_from_json(j);
    CHECK(io::config_to_json(back) == j);
    const sim::Scenario sc = io::to_scenario(back);
    CHECK(sc.p_ref == 15000.0);
    CHECK(sc.fault.phases[0]);
    CHECK(!sc.fault.phases[1]);
}

TEST_CASE("unknown keys and malformed configs are rejected") {
    io::json j = io::config_to_json(io::default_config());
    j["plant"]["typo_key_mH"] = 1.0;
    CHECK_THROWS_WITH_AS(io::config_from_json(j), doctest::Contains("typo_key_mH"), ConfigError);

    io::json j2 = io::config_to_json(io::default_config());
    j2.erase("duration_s");
    CHECK_THROWS_AS(io::config_from_json(j2), ConfigError);

    io::json j3 = io::config_to_json(io::default_config());
    j3["frt_enabled"] = "yes";
    CHECK_THROWS_AS(io::config_from_json(j3), ConfigError);
}

TEST_CASE("preset files on disk match the built-in presets") {
    for (const std::string& name : io::preset_names()) {
        const fs::path file = fs::path(VOCFRT_PRESET_DIR) / (name + ".json");
        REQUIRE_MESSAGE(fs::exists(file), file.string());
        const io::ScenarioConfig from_file = io::load_config_file(file.string());
        const io::ScenarioConfig built_in = io::preset_config(name);
        CHECK(io::config_to_json(from_file) == io::config_to_json(built_in));
    }
}

TEST_CASE("run subcommand writes outputs and echoes the scenario") {
    const fs::path dir = fresh_dir("run");
    const fs::path cfg_path = dir / "config.json";
    write_config(cfg_path, quick_config());

    const int rc = run_cli("run --config " + cfg_path.string() + " --out " + (dir / "out").string());
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "out" / "timeseries.csv"));
    CHECK(fs::exists(dir / "out" / "metrics.json"));
    CHECK(fs::exists(dir / "out" / "scenario.json"));

    // the echo reproduces the metrics bit for bit
    const int rc2 =
        run_cli("run --config " + (dir / "out" / "scenario.json").string() + " --out " +
                (dir / "out2").string());
    CHECK(rc2 == 0);
    CHECK(slurp(dir / "out" / "metrics.json") == slurp(dir / "out2" / "metrics.json"));
    CHECK(slurp(dir / "out" / "timeseries.csv") == slurp(dir / "out2" / "timeseries.csv"));

    const io::json metrics = io::json::parse(slurp(dir / "out" / "metrics.json"));
    CHECK(metrics.contains("p_final_W"));
    CHECK(metrics["run_valid"].get<bool>());
}

TEST_CASE("csv output is identical across repeated runs") {
    const fs::path dir = fresh_dir("determinism");
    const fs::path cfg_path = dir / "config.json";
    write_config(cfg_path, quick_config());
    REQUIRE(run_cli("run --config " + cfg_path.string() + " --out " + (dir / "r1").string()) == 0);
    REQUIRE(run_cli("run --config " + cfg_path.string() + " --out " + (dir / "r2").string()) == 0);
    CHECK(slurp(dir / "r1" / "timeseries.csv") == slurp(dir / "r2" / "timeseries.csv"));
}

TEST_CASE("csv header matches the published schema") {
    CHECK(io::timeseries_csv_header() ==
          "t_s,v_pcc_a_V,v_pcc_b_V,v_pcc_c_V,i_inv_a_A,i_inv_b_A,i_inv_c_A,p_W,q_var,"
          "p_a_W,p_b_W,p_c_W,v_voc_a_V,sin_delta,frt_mode,limiter_d,limiter_mag,breaker");
}

TEST_CASE("malformed configuration exits with code one") {
    const fs::path dir = fresh_dir("badcfg");
    const fs::path cfg_path = dir / "broken.json";
    {
        std::ofstream out(cfg_path);
        out << "{ not json";
    }
    std::string log;
    CHECK(run_cli("run --config " + cfg_path.string() + " --out " + dir.string(), &log) == 1);

    io::json j = io::config_to_json(io::default_config());
    j["unknown_toplevel"] = 1;
    const fs::path cfg2 = dir / "unknown.json";
    {
        std::ofstream out(cfg2);
        out << j.dump();
    }
    std::string log2;
    CHECK(run_cli("run --config " + cfg2.string() + " --out " + dir.string(), &log2) == 1);
    CHECK(slurp(log2).find("unknown_toplevel") != std::string::npos);
}

TEST_CASE("compare of identical configs reports zero deltas") {
    const fs::path dir = fresh_dir("compare");
    const fs::path cfg_path = dir / "config.json";
    write_config(cfg_path, quick_config());
    const int rc = run_cli("compare --config-a " + cfg_path.string() + " --config-b " +
                           cfg_path.string() + " --out " + (dir / "cmp").string());
    CHECK(rc == 0);
    const io::json cmp = io::json::parse(slurp(dir / "cmp" / "compare.json"));
    CHECK(cmp["delta_b_minus_a"]["max_abs_dsindelta"].get<double>() == 0.0);
    CHECK(cmp["delta_b_minus_a"]["recovery_time_s"].get<double>() == 0.0);
    CHECK(fs::exists(dir / "cmp" / "compare.txt"));
}

TEST_CASE("single-point sweep equals a plain run") {
    const fs::path dir = fresh_dir("sweep");
    const fs::path cfg_path = dir / "config.json";
    const io::ScenarioConfig cfg = quick_config();
    write_config(cfg_path, cfg);

    REQUIRE(run_cli("run --config " + cfg_path.string() + " --out " + (dir / "run").string()) == 0);
    REQUIRE(run_cli("sweep --config " + cfg_path.string() + " --axis p_ref_W=9000:9000:1 --out " +
                    (dir / "sw").string() + " --workers 2") == 0);

    const io::json metrics = io::json::parse(slurp(dir / "run" / "metrics.json"));
    const std::string sweep_csv = slurp(dir / "sw" / "sweep.csv");
    // one header line plus one data row carrying the same final power
    const auto nl = sweep_csv.find('\n');
    REQUIRE(nl != std::string::npos);
    const std::string row = sweep_csv.substr(nl + 1);
    const std::string p_final = io::format_double(metrics["p_final_W"].get<double>());
    CHECK(row.find(p_final) != std::string::npos);

    // bad axis key is a configuration error
    CHECK(run_cli("sweep --config " + cfg_path.string() + " --axis nope.key=0:1:2 --out " +
                  (dir / "bad").string()) == 1);
}

TEST_CASE("analyze single point at the pre-fault operating angle") {
    const fs::path dir = fresh_dir("analyze");
    const int rc = run_cli(
        "analyze --preset paper-sec2-baseline --delta-lo 0.0 --delta-hi 0.0 --delta-count 1 "
        "--sag-lo 0 --sag-hi 0 --sag-count 1 --out " +
        (dir / "an").string());
    CHECK(rc == 0);
    const std::string csv = slurp(dir / "an" / "clearance_grid.csv");
    // condition column is 1 at the stable operating point
    const auto nl = csv.find('\n');
    const std::string row = csv.substr(nl + 1);
    CHECK(row.find(",1,") != std::string::npos);
}
