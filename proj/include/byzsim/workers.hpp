#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "byzsim/loss_models.hpp"
#include "byzsim/rng.hpp"
#include "byzsim/vector.hpp"

namespace byzsim {

/// Strategy of a Byzantine worker. All strategies see the honest state (omniscient adversary).
struct AttackSpec {
    /// -kappa * (honest average)
    struct SignFlip {
        double kappa;
    };
    /// constant v
    struct FixedVector {
        ParamVector v;
    };
    /// magnitude * unit(honest average)
    struct InnerProductMax {
        double magnitude;
    };
    /// -magnitude * unit(TM of honest momenta)
    struct AntiTrimmedMean {
        double magnitude;
    };
    using Kind = std::variant<SignFlip, FixedVector, InnerProductMax, AntiTrimmedMean>;

    Kind kind;
};

/// What an omniscient adversary knows at iteration t.
struct AttackContext {
    const VectorBatch& honest_messages;
    std::span<const double> theta;
    std::size_t t;
    std::size_t trim;  // server trim, used by anti_trimmed_mean
};

ParamVector byzantine_message(const AttackSpec& attack, const AttackContext& context);

/// One worker's behavior. The server only ever sees the vectors workers send.
struct WorkerSpec {
    struct Honest {
        DataSource source;
    };
    struct Byzantine {
        AttackSpec attack;
    };
    /// Follows the protocol but samples from a substituted distribution.
    struct FullyPoisoned {
        DataSource substitute;
    };
    /// Full-batch worker with m points of which `corrupted` (b indices) were replaced before
    /// the run. The worker itself cannot tell which points are corrupted.
    struct PartiallyPoisoned {
        std::vector<ParamVector> dataset;
        std::vector<std::size_t> corrupted;
    };
    using Kind = std::variant<Honest, Byzantine, FullyPoisoned, PartiallyPoisoned>;

    Kind kind;

    static WorkerSpec honest(DataSource source) { return {Honest{std::move(source)}}; }
    static WorkerSpec byzantine(AttackSpec attack) { return {Byzantine{std::move(attack)}}; }
    static WorkerSpec fully_poisoned(DataSource substitute) {
        return {FullyPoisoned{std::move(substitute)}};
    }
    static WorkerSpec partially_poisoned(std::vector<ParamVector> dataset,
                                         std::vector<std::size_t> corrupted) {
        return {PartiallyPoisoned{std::move(dataset), std::move(corrupted)}};
    }

    bool is_byzantine() const noexcept { return std::holds_alternative<Byzantine>(kind); }
    /// Distribution an honest or fully-poisoned worker samples from.
    const DataSource& sampling_source() const;
};

/// Honest workers for an instance: members of H sample their own source, the others are
/// fully poisoned with their listed source as substitute.
std::vector<WorkerSpec> workers_from_instance(const ProblemInstance& instance);

/// Gradient at one fresh draw from the worker's sampling source (honest or fully poisoned).
ParamVector honest_stochastic_gradient(const WorkerSpec& worker, const LossModel& loss,
                                       std::span<const double> theta, SplitMix64& rng);
void honest_stochastic_gradient_into(const WorkerSpec& worker, const LossModel& loss,
                                     std::span<const double> theta, SplitMix64& rng,
                                     std::span<double> out);

/// Polyak momentum m_t = beta_t m_{t-1} + (1 - beta_t) g_t with m_{-1} = 0.
class MomentumState {
public:
    explicit MomentumState(std::size_t dim) : momentum_(dim, 0.0) {}

    std::span<const double> update(std::span<const double> g, double beta);
    std::span<const double> value() const noexcept { return momentum_; }

private:
    ParamVector momentum_;
};

/// Writes beta * m + (1 - beta) * g into m and returns a copy.
ParamVector honest_momentum_update(MomentumState& state, std::span<const double> g, double beta);

/// TM^(trim) of the per-point gradients over the whole (partially corrupted) dataset.
ParamVector local_trimmed_gradient(const WorkerSpec& worker, const LossModel& loss,
                                   std::span<const double> theta, std::size_t trim);

/// Uniform law over the uncorrupted points of a partially-poisoned worker.
DataSource clean_distribution(const WorkerSpec::PartiallyPoisoned& worker);

}  // namespace byzsim
