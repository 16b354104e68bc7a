#include "byzsim/algorithms.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "byzsim/errors.hpp"

namespace byzsim {

namespace {

enum class Loop { momentum_sgd, local_trimmed_gd };

void validate(const RunConfig& config, Loop loop) {
    const ProblemInstance& inst = config.instance;
    require(config.workers.size() == inst.n(),
            "run: worker count " + std::to_string(config.workers.size()) +
                " does not match instance size " + std::to_string(inst.n()));
    require(config.T() >= 2, "run: T must be >= 2");
    require(config.schedule.betas.size() == config.T(), "run: schedule gamma/beta length mismatch");
    for (std::size_t t = 0; t < config.T(); ++t) {
        require(config.schedule.gammas[t] > 0.0, "run: step sizes must be positive");
        require(config.schedule.betas[t] >= 0.0 && config.schedule.betas[t] <= 1.0,
                "run: momentum coefficients must lie in [0, 1]");
    }
    require(config.theta0.empty() || config.theta0.size() == inst.dim(),
            "run: theta0 dimension mismatch");
    if (!config.theta0.empty()) require_finite(config.theta0, "run: theta0");
    require(inst.n() > 2 * config.aggregator.trim, "run: aggregator requires n > 2 * trim");
    require(!config.record_diagnostics || inst.loss().is_quadratic(),
            "run: diagnostics need a loss with a closed-form minimizer");

    for (std::size_t i = 0; i < inst.n(); ++i) {
        const WorkerSpec& w = config.workers[i];
        const std::string who = "run: worker " + std::to_string(i);
        if (inst.is_honest(i)) require(!w.is_byzantine(), who + " is in H but byzantine");
        if (w.is_byzantine()) continue;
        if (loop == Loop::momentum_sgd) {
            require(!std::holds_alternative<WorkerSpec::PartiallyPoisoned>(w.kind),
                    who + ": partially poisoned workers run the full-batch loop");
            require_same_dim(inst.dim(), w.sampling_source().dim(), "run: worker source");
        } else {
            const auto* p = std::get_if<WorkerSpec::PartiallyPoisoned>(&w.kind);
            require(p != nullptr, who + ": full-batch loop needs partially poisoned workers");
            require(p->dataset.size() > 2 * config.local_trim,
                    who + ": requires m > 2 * local trim");
            for (const auto& x : p->dataset) require_same_dim(inst.dim(), x.size(), "run: data point");
        }
    }
    if (loop == Loop::local_trimmed_gd) {
        for (double b : config.schedule.betas) require(b == 0.0, "run: full-batch loop has no momentum");
    }
}

class Simulation {
public:
    Simulation(const RunConfig& config, Loop loop)
        : config_(config),
          loop_(loop),
          inst_(config.instance),
          n_(inst_.n()),
          d_(inst_.dim()),
          messages_(n_, d_),
          lambda_(lambda_coeff(n_, config.aggregator.trim)) {
        momenta_.reserve(n_);
        for (std::size_t i = 0; i < n_; ++i) momenta_.emplace_back(d_);
        const auto honest = inst_.honest();
        honest_.assign(honest.begin(), honest.end());
    }

    RunResult run() {
        RunResult result;
        ParamVector theta = config_.theta0.empty() ? ParamVector(d_, 0.0) : config_.theta0;
        if (config_.record_diagnostics) result.trace.reserve(config_.T());

        for (std::size_t t = 0; t < config_.T(); ++t) {
            const double gamma = config_.schedule.gammas[t];
            const double beta = config_.schedule.betas[t];

            compute_protocol_messages(theta, t, beta);
            const VectorBatch honest_messages = messages_.select(honest_);
            compute_byzantine_messages(honest_messages, theta, t);
            if (config_.record_diagnostics) {
                result.trace.push_back(record(t, gamma, beta, theta, honest_messages));
            }

            const ParamVector step = aggregate(config_.aggregator, messages_);
            axpy(-gamma, step, theta);
            if (!all_finite(theta) || std::sqrt(squared_norm(theta)) > config_.divergence_threshold) {
                result.diverged_at = t;
                break;
            }
        }

        result.final_gap = inst_.loss().is_quadratic() && all_finite(theta)
                               ? inst_.gap(theta)
                               : std::numeric_limits<double>::quiet_NaN();
        result.theta_final = std::move(theta);
        return result;
    }

private:
    void compute_protocol_messages(std::span<const double> theta, std::size_t t, double beta) {
        const LossModel& loss = inst_.loss();
        ParamVector g(d_);
        for (std::size_t i = 0; i < n_; ++i) {
            const WorkerSpec& w = config_.workers[i];
            if (w.is_byzantine()) continue;
            auto row = messages_.row(i);
            if (loop_ == Loop::local_trimmed_gd) {
                const ParamVector G = local_trimmed_gradient(w, loss, theta, config_.local_trim);
                std::copy(G.begin(), G.end(), row.begin());
                continue;
            }
            SplitMix64 rng = worker_stream(config_.seed, i, t);
            honest_stochastic_gradient_into(w, loss, theta, rng, g);
            const auto m = momenta_[i].update(g, beta);
            std::copy(m.begin(), m.end(), row.begin());
        }
    }

    void compute_byzantine_messages(const VectorBatch& honest_messages,
                                    std::span<const double> theta, std::size_t t) {
        for (std::size_t i = 0; i < n_; ++i) {
            const auto* byz = std::get_if<WorkerSpec::Byzantine>(&config_.workers[i].kind);
            if (byz == nullptr) continue;
            const AttackContext ctx{honest_messages, theta, t, config_.aggregator.trim};
            const ParamVector v = byzantine_message(byz->attack, ctx);
            require_same_dim(d_, v.size(), "byzantine message");
            std::copy(v.begin(), v.end(), messages_.row(i).begin());
        }
    }

    IterationRecord record(std::size_t t, double gamma, double beta, std::span<const double> theta,
                           const VectorBatch& honest_messages) const {
        IterationRecord rec;
        rec.t = t;
        rec.gamma = gamma;
        rec.beta = beta;
        rec.loss_gap = inst_.gap(theta);
        rec.grad_norm_sq = squared_norm(inst_.honest_grad(theta));
        rec.deviation_sq = compute_deviation(honest_messages, theta, inst_);
        rec.mean_drift_sq = compute_mean_drift(honest_messages);
        rec.lyapunov = lyapunov_value(rec.loss_gap, rec.deviation_sq, rec.mean_drift_sq,
                                      inst_.loss().smoothness(), lambda_);
        return rec;
    }

    const RunConfig& config_;
    Loop loop_;
    const ProblemInstance& inst_;
    std::size_t n_;
    std::size_t d_;
    VectorBatch messages_;
    std::vector<MomentumState> momenta_;
    std::vector<std::size_t> honest_;
    double lambda_;
};

}  // namespace

RunResult run_dsgd_robust(const RunConfig& config) {
    validate(config, Loop::momentum_sgd);
    return Simulation(config, Loop::momentum_sgd).run();
}

RunResult run_dgd_robust(const RunConfig& config) {
    validate(config, Loop::local_trimmed_gd);
    return Simulation(config, Loop::local_trimmed_gd).run();
}

RunResult run_baseline_dsgd(const RunConfig& config) {
    require(config.aggregator.kind == AggregatorSpec::Kind::average,
            "run_baseline_dsgd: aggregator must be the plain average");
    return run_dsgd_robust(config);
}

}  // namespace byzsim
