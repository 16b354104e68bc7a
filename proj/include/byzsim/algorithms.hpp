#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "byzsim/aggregation.hpp"
#include "byzsim/diagnostics.hpp"
#include "byzsim/loss_models.hpp"
#include "byzsim/schedules.hpp"
#include "byzsim/workers.hpp"

namespace byzsim {

/// Iterates whose norm exceeds this (or that stop being finite) abort the run.
inline constexpr double kDivergenceThreshold = 1e12;

struct RunConfig {
    ProblemInstance instance;         // ground truth, used only for diagnostics and the gap
    std::vector<WorkerSpec> workers;  // one per instance source, index-aligned
    AggregatorSpec aggregator;
    Schedule schedule;                // length T; DGD uses a constant schedule with beta = 0
    ParamVector theta0;               // empty means the zero vector
    std::uint64_t seed = 0;
    bool record_diagnostics = true;
    std::size_t local_trim = 0;       // DGD only: per-worker trim b
    double divergence_threshold = kDivergenceThreshold;

    std::size_t T() const noexcept { return schedule.length(); }
};

struct RunResult {
    ParamVector theta_final;
    std::vector<IterationRecord> trace;
    double final_gap = 0.0;
    /// Index t of the update theta_t -> theta_{t+1} that left the finite/bounded region.
    std::optional<std::size_t> diverged_at;

    bool diverged() const noexcept { return diverged_at.has_value(); }
};

/// Distributed SGD with per-worker Polyak momentum and server-side trimmed mean:
/// theta_{t+1} = theta_t - gamma_t TM^(f)(m_t^(1), ..., m_t^(n)).
RunResult run_dsgd_robust(const RunConfig& config);

/// Distributed full-batch GD with local TM^(b) over per-point gradients and server TM^(f):
/// theta_{t+1} = theta_t - gamma TM^(f)(G_t^(1), ..., G_t^(n)).
RunResult run_dgd_robust(const RunConfig& config);

/// The same loop as run_dsgd_robust with plain averaging on the server.
RunResult run_baseline_dsgd(const RunConfig& config);

}  // namespace byzsim
