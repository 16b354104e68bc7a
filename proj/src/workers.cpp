#include "byzsim/workers.hpp"

#include <algorithm>
#include <cmath>

#include "byzsim/aggregation.hpp"
#include "byzsim/errors.hpp"
#include "byzsim/kernels.hpp"

namespace byzsim {

namespace {

ParamVector unit_or_zero(ParamVector v) {
    const double norm = std::sqrt(squared_norm(v));
    if (norm == 0.0) return v;
    for (auto& x : v) x /= norm;
    return v;
}

}  // namespace

ParamVector byzantine_message(const AttackSpec& attack, const AttackContext& context) {
    const VectorBatch& honest = context.honest_messages;
    require(!honest.empty(), "byzantine_message: empty honest set");
    return std::visit(
        [&](const auto& spec) -> ParamVector {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, AttackSpec::SignFlip>) {
                return scaled(average(honest), -spec.kappa);
            } else if constexpr (std::is_same_v<T, AttackSpec::FixedVector>) {
                require_same_dim(honest.dim(), spec.v.size(), "fixed_vector attack");
                return spec.v;
            } else if constexpr (std::is_same_v<T, AttackSpec::InnerProductMax>) {
                return scaled(unit_or_zero(average(honest)), spec.magnitude);
            } else {
                const std::size_t trim = std::min(context.trim, (honest.rows() - 1) / 2);
                return scaled(unit_or_zero(coordinate_trimmed_mean(honest, trim)),
                              -spec.magnitude);
            }
        },
        attack.kind);
}

const DataSource& WorkerSpec::sampling_source() const {
    if (const auto* h = std::get_if<Honest>(&kind)) return h->source;
    if (const auto* p = std::get_if<FullyPoisoned>(&kind)) return p->substitute;
    throw InputError("worker has no sampling source (byzantine or partially poisoned)");
}

std::vector<WorkerSpec> workers_from_instance(const ProblemInstance& instance) {
    std::vector<WorkerSpec> workers;
    workers.reserve(instance.n());
    for (std::size_t i = 0; i < instance.n(); ++i) {
        workers.push_back(instance.is_honest(i) ? WorkerSpec::honest(instance.source(i))
                                                : WorkerSpec::fully_poisoned(instance.source(i)));
    }
    return workers;
}

void honest_stochastic_gradient_into(const WorkerSpec& worker, const LossModel& loss,
                                     std::span<const double> theta, SplitMix64& rng,
                                     std::span<double> out) {
    const ParamVector x = worker.sampling_source().sample(rng);
    loss.grad_into(theta, x, out);
}

ParamVector honest_stochastic_gradient(const WorkerSpec& worker, const LossModel& loss,
                                       std::span<const double> theta, SplitMix64& rng) {
    ParamVector g(theta.size());
    honest_stochastic_gradient_into(worker, loss, theta, rng, g);
    return g;
}

std::span<const double> MomentumState::update(std::span<const double> g, double beta) {
    require_same_dim(momentum_.size(), g.size(), "momentum update");
    require(beta >= 0.0 && beta <= 1.0, "momentum update: beta must lie in [0, 1]");
    kernels::active().blend(beta, g.data(), momentum_.data(), momentum_.size());
    return momentum_;
}

ParamVector honest_momentum_update(MomentumState& state, std::span<const double> g, double beta) {
    const auto m = state.update(g, beta);
    return {m.begin(), m.end()};
}

ParamVector local_trimmed_gradient(const WorkerSpec& worker, const LossModel& loss,
                                   std::span<const double> theta, std::size_t trim) {
    const auto* partial = std::get_if<WorkerSpec::PartiallyPoisoned>(&worker.kind);
    require(partial != nullptr, "local_trimmed_gradient: worker is not partially poisoned");
    const auto& dataset = partial->dataset;
    require(dataset.size() > 2 * trim, "local_trimmed_gradient: requires m > 2 * trim");
    VectorBatch grads(dataset.size(), theta.size());
    for (std::size_t j = 0; j < dataset.size(); ++j) loss.grad_into(theta, dataset[j], grads.row(j));
    return coordinate_trimmed_mean(grads, trim);
}

DataSource clean_distribution(const WorkerSpec::PartiallyPoisoned& worker) {
    std::vector<bool> corrupted(worker.dataset.size(), false);
    for (auto j : worker.corrupted) {
        require(j < worker.dataset.size(), "partially poisoned: corrupted index out of range");
        corrupted[j] = true;
    }
    std::vector<ParamVector> clean;
    for (std::size_t j = 0; j < worker.dataset.size(); ++j) {
        if (!corrupted[j]) clean.push_back(worker.dataset[j]);
    }
    return DataSource::empirical(std::move(clean));
}

}  // namespace byzsim
