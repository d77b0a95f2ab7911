// Command-line front end: run / compare / analyze / sweep scenario
// execution with CSV + JSON outputs and CI-friendly exit codes
// (0 clean, 1 configuration error, 2 numerically failed run).
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "vocfrt/analysis.hpp"
#include "vocfrt/errors.hpp"
#include "vocfrt/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace vocfrt;

namespace {

struct ScenarioSource {
    std::string config_path;
    std::string preset;

    io::ScenarioConfig load() const {
        if (!config_path.empty()) return io::load_config_file(config_path);
        if (!preset.empty()) return io::preset_config(preset);
        throw ConfigError("one of --config or --preset is required");
    }
};

void add_source_options(CLI::App* cmd, ScenarioSource& src) {
    cmd->add_option("--config", src.config_path, "scenario configuration file (JSON)");
    cmd->add_option("--preset", src.preset, "named preset scenario");
}

struct Overrides {
    std::optional<double> dt_us;
    std::optional<int> decimate;

    void apply(io::ScenarioConfig& cfg) const {
        if (dt_us) cfg.dt_us = *dt_us;
        if (decimate) cfg.decimate = *decimate;
    }
};

void add_override_options(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--dt", ov.dt_us, "integration step in microseconds");
    cmd->add_option("--decimate", ov.decimate, "record every Nth step");
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

int run_scenario_to_dir(const io::ScenarioConfig& cfg, const fs::path& out_dir,
                        sim::RunResult* result_out = nullptr) {
    const sim::Scenario sc = io::to_scenario(cfg);
    const sim::RunResult result = sim::run(sc);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    io::write_timeseries_csv(csv, result.record);
    write_file(out_dir / "timeseries.csv", csv.str());
    write_file(out_dir / "metrics.json", io::metrics_to_json(result.metrics, sc).dump(2) + "\n");
    write_file(out_dir / "scenario.json", io::config_to_json(cfg).dump(2) + "\n");

    if (result_out) *result_out = result;
    return result.metrics.nonfinite ? 2 : 0;
}

std::string fmt(double x) { return io::format_double(x); }

int cmd_run(const ScenarioSource& src, const Overrides& ov, const std::string& out_dir) {
    io::ScenarioConfig cfg = src.load();
    ov.apply(cfg);
    sim::RunResult result;
    const int code = run_scenario_to_dir(cfg, out_dir, &result);
    std::cout << "run: " << (code == 0 ? "ok" : "nonfinite") << "  p_final_W="
              << fmt(result.metrics.p_final) << "  recovery_time_s="
              << fmt(result.metrics.recovery_time) << "\n";
    return code;
}

int cmd_compare(const ScenarioSource& src_a, const ScenarioSource& src_b, const Overrides& ov,
                const std::string& out_dir) {
    io::ScenarioConfig cfg_a = src_a.load();
    io::ScenarioConfig cfg_b = src_b.load();
    ov.apply(cfg_a);
    ov.apply(cfg_b);

    const fs::path dir(out_dir);
    sim::RunResult ra, rb;
    const int code_a = run_scenario_to_dir(cfg_a, dir / "a", &ra);
    const int code_b = run_scenario_to_dir(cfg_b, dir / "b", &rb);

    const sim::Scenario sa = io::to_scenario(cfg_a);
    const sim::Scenario sb = io::to_scenario(cfg_b);
    io::json cmp;
    cmp["a"] = io::metrics_to_json(ra.metrics, sa);
    cmp["b"] = io::metrics_to_json(rb.metrics, sb);
    io::json deltas;
    deltas["max_abs_dsindelta"] = rb.metrics.max_abs_dsindelta - ra.metrics.max_abs_dsindelta;
    deltas["min_p_postclear_W"] = rb.metrics.min_p_postclear - ra.metrics.min_p_postclear;
    deltas["recovery_time_s"] = rb.metrics.recovery_time - ra.metrics.recovery_time;
    deltas["power_reversal"] =
        static_cast<int>(rb.metrics.power_reversal) - static_cast<int>(ra.metrics.power_reversal);
    cmp["delta_b_minus_a"] = deltas;
    write_file(dir / "compare.json", cmp.dump(2) + "\n");

    std::ostringstream txt;
    const auto row = [&](const char* name, double va, double vb) {
        txt << name;
        for (std::size_t i = std::string(name).size(); i < 28; ++i) txt << ' ';
        std::string a = fmt(va), b = fmt(vb), d = fmt(vb - va);
        txt << a;
        for (std::size_t i = a.size(); i < 24; ++i) txt << ' ';
        txt << b;
        for (std::size_t i = b.size(); i < 24; ++i) txt << ' ';
        txt << d << "\n";
    };
    txt << "metric                      a                       b                       b-a\n";
    row("max_abs_dsindelta", ra.metrics.max_abs_dsindelta, rb.metrics.max_abs_dsindelta);
    row("min_p_postclear_W", ra.metrics.min_p_postclear, rb.metrics.min_p_postclear);
    row("recovery_time_s", ra.metrics.recovery_time, rb.metrics.recovery_time);
    row("power_reversal", ra.metrics.power_reversal, rb.metrics.power_reversal);
    row("sync_loss", ra.metrics.sync_loss, rb.metrics.sync_loss);
    row("p_final_W", ra.metrics.p_final, rb.metrics.p_final);
    write_file(dir / "compare.txt", txt.str());
    std::cout << txt.str();

    return std::max(code_a, code_b);
}

int cmd_analyze(const ScenarioSource& src, const Overrides& ov, const std::string& out_dir,
                const analysis::ClearanceGridSpec& spec, bool with_oracle, int workers) {
    io::ScenarioConfig cfg = src.load();
    ov.apply(cfg);
    const sim::Scenario sc = io::to_scenario(cfg);

    const analysis::ClearanceGridResult grid =
        analysis::run_clearance_grid(sc, spec, with_oracle, workers);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv << "delta_c_rad,sag_depth,v_vocf_V,margin_A,condition,oracle_diverged,agree\n";
    for (const auto& cell : grid.cells) {
        csv << fmt(cell.delta_c) << ',' << fmt(cell.sag) << ',' << fmt(cell.v_voc_f) << ','
            << fmt(cell.predicted.margin) << ','
            << (cell.predicted.which == analysis::Condition::condition2 ? 2 : 1) << ','
            << (cell.oracle_ran ? (cell.oracle_diverged ? "1" : "0") : "") << ','
            << (cell.oracle_ran ? (cell.agree ? "1" : "0") : "") << '\n';
    }
    write_file(fs::path(out_dir) / "clearance_grid.csv", csv.str());

    io::json summary;
    summary["cells"] = grid.cells.size();
    summary["with_oracle"] = grid.with_oracle;
    summary["agreement"] = grid.with_oracle ? grid.agreement : 1.0;
    write_file(fs::path(out_dir) / "analyze.json", summary.dump(2) + "\n");
    if (grid.with_oracle) {
        std::cout << "agreement: " << grid.agreement << "\n";
    }
    return 0;
}

struct SweepAxis {
    std::string key;
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
};

SweepAxis parse_axis(const std::string& text) {
    // key=lo:hi:count
    SweepAxis ax;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("--axis expects key=lo:hi:count");
    ax.key = text.substr(0, eq);
    const std::string rest = text.substr(eq + 1);
    const auto c1 = rest.find(':');
    const auto c2 = rest.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
        throw ConfigError("--axis expects key=lo:hi:count");
    }
    try {
        ax.lo = std::stod(rest.substr(0, c1));
        ax.hi = std::stod(rest.substr(c1 + 1, c2 - c1 - 1));
        ax.count = std::stoi(rest.substr(c2 + 1));
    } catch (const std::exception&) {
        throw ConfigError("--axis expects numeric lo:hi:count");
    }
    if (ax.count < 1) throw ConfigError("--axis count must be >= 1");
    return ax;
}

io::json& navigate(io::json& j, const std::string& dotted) {
    io::json* cur = &j;
    std::size_t pos = 0;
    while (true) {
        const auto dot = dotted.find('.', pos);
        const std::string key = dotted.substr(pos, dot - pos);
        auto it = cur->find(key);
        if (it == cur->end()) throw ConfigError("sweep axis key not found: " + dotted);
        cur = &*it;
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return *cur;
}

int cmd_sweep(const ScenarioSource& src, const Overrides& ov, const std::string& out_dir,
              const std::string& axis_text, int workers) {
    io::ScenarioConfig cfg = src.load();
    ov.apply(cfg);
    const SweepAxis ax = parse_axis(axis_text);
    const io::json base = io::config_to_json(cfg);
    {
        io::json probe = base;
        io::json& slot = navigate(probe, ax.key);
        if (!slot.is_number()) throw ConfigError("sweep axis key is not numeric: " + ax.key);
    }

    struct Point {
        double value = 0.0;
        sim::Metrics metrics;
        bool nonfinite = false;
    };
    std::vector<Point> points(ax.count);
    std::atomic<int> next{0};
    const int n_workers = std::max(1, workers);

    auto work = [&]() {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= ax.count) break;
            const double v =
                ax.count == 1 ? ax.lo : ax.lo + (ax.hi - ax.lo) * i / (ax.count - 1.0);
            io::json j = base;
            navigate(j, ax.key) = v;
            const sim::Scenario sc = io::to_scenario(io::config_from_json(j));
            const sim::RunResult r = sim::run(sc);
            points[i].value = v;
            points[i].metrics = r.metrics;
            points[i].nonfinite = r.metrics.nonfinite;
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();

    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv << "axis_key,axis_value,run_valid,nonfinite,p_prefault_W,max_abs_dsindelta_fault,"
           "max_abs_dsindelta,sync_loss,min_p_postclear_W,power_reversal,recovery_time_s,"
           "flip_count,i_rms_max_fault_a_A,i_rms_max_fault_b_A,i_rms_max_fault_c_A,p_final_W\n";
    bool any_nonfinite = false;
    for (const Point& p : points) {
        const sim::Metrics& m = p.metrics;
        any_nonfinite = any_nonfinite || p.nonfinite;
        csv << ax.key << ',' << fmt(p.value) << ',' << (m.run_valid ? 1 : 0) << ','
            << (m.nonfinite ? 1 : 0) << ',' << fmt(m.p_prefault) << ','
            << fmt(m.max_abs_dsindelta_fault) << ',' << fmt(m.max_abs_dsindelta) << ','
            << (m.sync_loss ? 1 : 0) << ',' << fmt(m.min_p_postclear) << ','
            << (m.power_reversal ? 1 : 0) << ',' << fmt(m.recovery_time) << ',' << m.flip_count
            << ',' << fmt(m.i_rms_max_fault[0]) << ',' << fmt(m.i_rms_max_fault[1]) << ','
            << fmt(m.i_rms_max_fault[2]) << ',' << fmt(m.p_final) << '\n';
    }
    write_file(fs::path(out_dir) / "sweep.csv", csv.str());
    return any_nonfinite ? 2 : 0;
}

int cmd_write_presets(const std::string& out_dir) {
    fs::create_directories(out_dir);
    for (const std::string& name : io::preset_names()) {
        write_file(fs::path(out_dir) / (name + ".json"),
                   io::config_to_json(io::preset_config(name)).dump(2) + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fault ride-through simulator for oscillator-based grid-forming inverters"};
    app.require_subcommand(1);

    ScenarioSource src, src_b;
    Overrides ov;
    std::string out_dir = "out";
    std::string axis_text;
    bool with_oracle = false;
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    analysis::ClearanceGridSpec grid_spec;

    auto* run = app.add_subcommand("run", "execute one scenario");
    add_source_options(run, src);
    add_override_options(run, ov);
    run->add_option("--out", out_dir, "output directory");

    auto* compare = app.add_subcommand("compare", "run two scenarios side by side");
    compare->add_option("--config-a", src.config_path, "first scenario config");
    compare->add_option("--preset-a", src.preset, "first scenario preset");
    compare->add_option("--config-b", src_b.config_path, "second scenario config");
    compare->add_option("--preset-b", src_b.preset, "second scenario preset");
    add_override_options(compare, ov);
    compare->add_option("--out", out_dir, "output directory");

    auto* analyze = app.add_subcommand("analyze", "clearance-state classification grid");
    add_source_options(analyze, src);
    add_override_options(analyze, ov);
    analyze->add_option("--out", out_dir, "output directory");
    analyze->add_option("--delta-lo", grid_spec.delta_lo, "load angle range start (rad)");
    analyze->add_option("--delta-hi", grid_spec.delta_hi, "load angle range end (rad)");
    analyze->add_option("--delta-count", grid_spec.delta_count, "load angle grid points");
    analyze->add_option("--sag-lo", grid_spec.sag_lo, "sag depth range start (0..1)");
    analyze->add_option("--sag-hi", grid_spec.sag_hi, "sag depth range end (0..1)");
    analyze->add_option("--sag-count", grid_spec.sag_count, "sag depth grid points");
    analyze->add_flag("--with-oracle", with_oracle, "run the full simulation as ground truth");
    analyze->add_option("--workers", workers, "parallel oracle workers");

    auto* sweep = app.add_subcommand("sweep", "run a scenario over a parameter axis");
    add_source_options(sweep, src);
    add_override_options(sweep, ov);
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--axis", axis_text, "axis spec key=lo:hi:count (dotted config key)")
        ->required();
    sweep->add_option("--workers", workers, "parallel workers");

    auto* presets = app.add_subcommand("write-presets", "write the built-in presets as files");
    presets->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(src, ov, out_dir);
        if (compare->parsed()) return cmd_compare(src, src_b, ov, out_dir);
        if (analyze->parsed()) return cmd_analyze(src, ov, out_dir, grid_spec, with_oracle, workers);
        if (sweep->parsed()) return cmd_sweep(src, ov, out_dir, axis_text, workers);
        if (presets->parsed()) return cmd_write_presets(out_dir);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
