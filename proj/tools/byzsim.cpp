// Command-line front end for the experiment harness.
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "byzsim/errors.hpp"
#include "byzsim/harness.hpp"

namespace fs = std::filesystem;
using byzsim::harness::json;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kInternal = 2 };

json load_config(const std::string& path) {
    const std::string text = byzsim::harness::read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw byzsim::harness::ValidationError({path + ": not valid JSON (" + e.what() + ")"});
    }
}

int run_config(const std::string& path, bool expect_sweep, const byzsim::harness::ExperimentOptions& opts) {
    const json config = load_config(path);
    const bool has_sweep = config.is_object() && config.contains("sweep");
    if (has_sweep != expect_sweep) {
        throw byzsim::harness::ValidationError(
            {expect_sweep ? "sweep: required by the sweep subcommand"
                          : "sweep: present; use the sweep subcommand"});
    }
    const auto result = byzsim::harness::run_experiment(config, opts);
    std::size_t diverged = 0;
    std::size_t failed = 0;
    for (const auto& s : result.summaries) {
        for (const auto& d : s.diverged_at) diverged += d.has_value();
        for (const auto& e : s.errors) failed += !e.empty();
        std::cout << "point " << s.fingerprint;
        if (s.sweep_value) std::cout << " [" << s.sweep_value->dump() << "]";
        if (s.mean_final_gap) std::cout << " mean_gap=" << *s.mean_final_gap;
        std::cout << " bound=" << s.upper_bound << " floor=" << s.constants.floor << "\n";
    }
    std::cout << "summary: " << result.summary_file.string() << "\n";
    if (diverged > 0) std::cout << diverged << " run(s) diverged\n";
    if (failed > 0) {
        for (const auto& s : result.summaries) {
            for (const auto& e : s.errors) {
                if (!e.empty()) std::cerr << "run error: " << e << "\n";
            }
        }
        return kInternal;
    }
    return kOk;
}

std::vector<std::size_t> default_grid(std::size_t T, std::size_t points) {
    std::vector<std::size_t> grid;
    for (std::size_t k = 0; k <= points; ++k) {
        const std::size_t t = T * k / points;
        if (grid.empty() || grid.back() != t) grid.push_back(t);
    }
    return grid;
}

int bounds(const std::string& path, const std::optional<fs::path>& out_dir, std::size_t points) {
    const fs::path summary_path(path);
    const fs::path base = summary_path.parent_path();
    const fs::path dest = out_dir.value_or(base);
    fs::create_directories(dest);
    std::istringstream lines(byzsim::harness::read_file(summary_path));
    std::string line;
    std::size_t index = 0;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const json summary = json::parse(line);
        const std::size_t T = summary.at("config").at("T").get<std::size_t>();
        std::vector<std::vector<byzsim::IterationRecord>> traces;
        for (const auto& file : summary.value("trace_files", json::array())) {
            const fs::path trace_path = base / file.get<std::string>();
            if (fs::exists(trace_path)) {
                traces.push_back(byzsim::harness::parse_trace_csv(byzsim::harness::read_file(trace_path)));
            }
        }
        const auto grid = default_grid(T, points);
        const auto rows = byzsim::harness::emit_bound_overlay(summary, grid, traces);
        const fs::path target =
            dest / (summary_path.stem().string() + "-p" + std::to_string(index++) + ".overlay.csv");
        std::ofstream(target, std::ios::binary) << byzsim::harness::format_overlay_csv(rows);
        std::cout << target.string() << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Byzantine-robust distributed SGD simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    unsigned threads = 1;
    app.add_option("--seed", seed, "Run only this seed instead of the config's seed list");
    app.add_option("--out-dir", out_dir, "Directory for traces, summaries and resolved configs");
    app.add_option("--threads", threads, "Worker threads; outputs do not depend on it")
        ->check(CLI::PositiveNumber);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run a single-point experiment");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    auto* sweep = app.add_subcommand("sweep", "Run every point of a parameter sweep");
    sweep->add_option("config", config_path, "Experiment config (JSON)")->required();
    auto* validate = app.add_subcommand("validate", "Check a config without running it");
    validate->add_option("config", config_path, "Experiment config (JSON)")->required();

    std::string summary_path;
    std::size_t grid_points = 50;
    bool overlay_dir_set = false;
    auto* bnd = app.add_subcommand("bounds", "Write bound-overlay tables for a summary file");
    bnd->add_option("summary", summary_path, "Summary file (JSON lines)")->required();
    bnd->add_option("--points", grid_points, "Number of grid intervals over [0, T]")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }
    overlay_dir_set = app.get_option("--out-dir")->count() > 0;

    byzsim::harness::ExperimentOptions opts;
    opts.out_dir = out_dir;
    opts.threads = threads;
    opts.seed_override = seed;

    try {
        if (*run) return run_config(config_path, false, opts);
        if (*sweep) return run_config(config_path, true, opts);
        if (*validate) {
            const auto points = byzsim::harness::prepare(load_config(config_path), seed);
            std::size_t runs = 0;
            for (const auto& p : points) runs += p.seeds.size();
            std::cout << "ok: " << points.size() << " point(s), " << runs << " run(s)\n";
            return kOk;
        }
        if (*bnd) {
            return bounds(summary_path,
                          overlay_dir_set ? std::optional<fs::path>(out_dir) : std::nullopt, grid_points);
        }
    } catch (const byzsim::harness::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kInvalid;
    } catch (const byzsim::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kInternal;
}
