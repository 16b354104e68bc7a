#pragma once

// Experiment orchestration: JSON configs in, CSV traces and JSON-lines summaries out.
//
// Config document (JSON object):
//   name        string, used in output file names (default "experiment")
//   scenario    object with "generator" one of
//                 heterogeneous_dirac {n, f, zeta, mu, execution}
//                 gaussian            {n, f, mu, variance, dim?, mean?, spread?}
//                 partial_poison      {m, b, sigma, mu, n, f, case?}
//                 indistinguishable_pair {n, f, sigma, mu, which: "D" | "Dprime"}
//                 explicit            {mu, sources: [...], honest: [...]}
//   algorithm   "dsgd_robust" | "dgd_robust" | "baseline"
//   schedule    "auto" | "option1" | "option2" | {"constant": gamma}   (default "auto")
//   T           iterations, >= 2
//   seeds       non-empty list of unsigned integers
//   trim        server trim (default: the scenario's f; baseline ignores it)
//   local_trim  dgd only, per-worker trim (default: scenario b)
//   adversary   {"kind": "fully_poisoned"} | {"kind": "byzantine", "attack": {...}}
//   theta0      optional initial model
//   sweep       optional {"parameter": dotted path, "values": [...]}

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "byzsim/algorithms.hpp"

namespace byzsim::harness {

using json = nlohmann::json;

inline constexpr const char* kTraceSchema = "byzsim.trace/1";
inline constexpr const char* kSummarySchema = "byzsim.summary/1";
inline constexpr const char* kTraceHeader =
    "t,gamma,beta,loss_gap,grad_norm_sq,deviation_sq,mean_drift_sq,lyapunov";

/// Thrown with every field-level problem found in a config.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

enum class Algorithm { dsgd_robust, dgd_robust, baseline };

/// Constants the bound overlays need; all exact for the built-in scenarios.
struct BoundConstants {
    std::string bound_kind;  // "momentum_sgd" | "full_batch"
    double Q0 = 0.0;
    double mu = 0.0;
    double L = 0.0;
    double lambda = 0.0;
    double lambda_prime = 0.0;
    double sigma_sq = 0.0;
    double zeta_sq = 0.0;
    std::size_t n = 0;
    std::size_t f = 0;
    std::size_t m = 0;
    std::size_t b = 0;
    double floor = 0.0;

    double upper_bound(double T) const;
    json to_json() const;
    static BoundConstants from_json(const json& j);
};

/// One fully-resolved sweep point, ready to run for any seed.
struct PreparedPoint {
    json config;                    // resolved config for this point (sweep removed)
    std::optional<json> sweep_value;
    Algorithm algorithm;
    RunConfig run;                  // seed filled per run
    std::vector<std::uint64_t> seeds;
    BoundConstants constants;
    std::string fingerprint;
};

/// Parses and validates a config, expanding the sweep axis. Throws ValidationError.
std::vector<PreparedPoint> prepare(const json& config,
                                   std::optional<std::uint64_t> seed_override = {});

struct SummaryRecord {
    std::string fingerprint;
    json config;
    std::optional<json> sweep_value;
    std::vector<std::uint64_t> seeds;
    std::vector<std::optional<double>> final_gaps;  // null for diverged/failed runs
    std::vector<std::optional<std::size_t>> diverged_at;
    std::vector<std::string> errors;                // per run, empty when fine
    std::optional<double> mean_final_gap;
    std::optional<double> std_final_gap;
    double upper_bound = 0.0;
    BoundConstants constants;
    double wall_seconds = 0.0;
    std::vector<std::string> trace_files;           // relative to the output directory

    json to_json() const;
    static SummaryRecord from_json(const json& j);
};

struct ExperimentOptions {
    std::filesystem::path out_dir = "out";
    unsigned threads = 1;
    std::optional<std::uint64_t> seed_override;
    bool write_traces = true;
};

struct ExperimentResult {
    std::vector<SummaryRecord> summaries;
    std::filesystem::path summary_file;
    std::vector<std::filesystem::path> trace_files;
};

/// Runs every (sweep point x seed) pair, writes traces, per-point configs and the summary.
/// Output does not depend on options.threads.
ExperimentResult run_experiment(const json& config, const ExperimentOptions& options);

RunResult execute(const PreparedPoint& point, std::uint64_t seed);

std::string format_trace_csv(std::span<const IterationRecord> trace);
/// Checks the schema line and header; throws InputError on a malformed trace.
std::vector<IterationRecord> parse_trace_csv(const std::string& text);

std::string fingerprint(const json& config);

struct OverlayRow {
    std::size_t t;
    std::optional<double> empirical_mean_gap;
    std::optional<double> bound;  // absent where the bound is undefined (t < 2 for the momentum SGD bound)
    double floor;
};

/// Per-t bound table. `traces` (one per seed) supply the empirical column when given.
/// Throws CapabilityError when the summary carries no constants.
std::vector<OverlayRow> emit_bound_overlay(const json& summary, std::span<const std::size_t> t_grid,
                                           std::span<const std::vector<IterationRecord>> traces = {});

std::string format_overlay_csv(std::span<const OverlayRow> rows);

std::string read_file(const std::filesystem::path& path);

}  // namespace byzsim::harness
