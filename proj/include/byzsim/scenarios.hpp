#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "byzsim/loss_models.hpp"
#include "byzsim/workers.hpp"

namespace byzsim {

/// n - f workers hold dirac(0), the last f hold dirac((2 zeta/mu) sqrt((n-f)/f)).
/// Execution 1 labels the first n - f workers honest; execution 2 labels workers
/// {0..n-2f-1} and the last f honest. Both executions produce identical messages.
struct HeterogeneousScenario {
    ProblemInstance instance;
    int execution;
    double outlier_point;
    ParamVector theta_star;  // closed form
    double q_star;           // closed form
    double zeta_sq;          // closed-form heterogeneity of the labeled honest set
};

HeterogeneousScenario heterogeneous_dirac_scenario(std::size_t n, std::size_t f, double zeta,
                                                   double mu, int execution);

/// D: every worker dirac(0). D': every worker two_point(0 w.p. 1 - p, spike w.p. p) with
/// p = 2f/(nT) and spike = (2 sigma/mu) sqrt(Tn/(2f)). First n - f workers honest.
struct IndistinguishablePair {
    ProblemInstance instance_D;
    ProblemInstance instance_Dprime;
    double spike;
    double spike_probability;
    double mean_gap;  // E_{D'} x - E_D x = (2 sigma/mu) sqrt(2f/(nT))
    double sigma_sq;  // gradient variance of D', sigma^2 (1 - p)
};

IndistinguishablePair indistinguishable_pair_scenario(std::size_t n, std::size_t f, std::size_t T,
                                                      double sigma, double mu);

/// Each worker holds m scalar points: m - b at 0 and b at (2 sigma/mu) sqrt((m-b)/b).
/// Two labelings of which b points are the corrupted ones:
///   clean_low  (case 1): the b points at the outlier value are corrupted, honest variance 0;
///   clean_high (case 2): b of the zeros are corrupted, honest mean (2 sigma/mu) sqrt(b/(m-b)).
struct PartialPoisonScenario {
    enum class Case { clean_low = 1, clean_high = 2 };

    std::size_t m;
    std::size_t b;
    std::size_t n;
    std::size_t f;
    double sigma;
    double mu;
    double corrupted_value;
    std::vector<ParamVector> dataset;  // shared by every worker

    std::vector<std::size_t> corrupted_indices(Case c) const;
    /// First n - f workers partially poisoned; last f byzantine with `attack` when given,
    /// otherwise partially poisoned with the same data.
    std::vector<WorkerSpec> workers(Case c, const std::optional<AttackSpec>& attack = {}) const;
    /// Clean distributions as sources, honest set = first n - f workers.
    ProblemInstance instance(Case c) const;
    /// Exact gradient variance of the clean points under the labeling.
    double honest_gradient_variance(Case c) const;
};

PartialPoisonScenario partial_poison_scenario(std::size_t m, std::size_t b, double sigma,
                                              double mu, std::size_t n, std::size_t f);

}  // namespace byzsim
