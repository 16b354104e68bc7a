#include "byzsim/scenarios.hpp"

#include <cmath>
#include <numeric>

#include "byzsim/errors.hpp"

namespace byzsim {

HeterogeneousScenario heterogeneous_dirac_scenario(std::size_t n, std::size_t f, double zeta,
                                                   double mu, int execution) {
    require(f > 0, "heterogeneous scenario: f must be positive");
    require(2 * f < n, "heterogeneous scenario: requires f < n/2");
    require(zeta > 0.0 && mu > 0.0, "heterogeneous scenario: zeta and mu must be positive");
    require(execution == 1 || execution == 2, "heterogeneous scenario: execution must be 1 or 2");

    const double nd = static_cast<double>(n);
    const double fd = static_cast<double>(f);
    const double outlier = 2.0 * zeta / mu * std::sqrt((nd - fd) / fd);

    std::vector<DataSource> sources;
    sources.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        sources.push_back(DataSource::dirac({i < n - f ? 0.0 : outlier}));
    }

    std::vector<std::size_t> honest;
    if (execution == 1) {
        for (std::size_t i = 0; i < n - f; ++i) honest.push_back(i);
    } else {
        for (std::size_t i = 0; i < n - 2 * f; ++i) honest.push_back(i);
        for (std::size_t i = n - f; i < n; ++i) honest.push_back(i);
    }

    const double ratio = (nd - 2.0 * fd) / (nd - fd);
    const double theta_star = execution == 1 ? 0.0 : 2.0 * zeta / mu * std::sqrt(fd / (nd - fd));
    const double q_star = execution == 1 ? 0.0 : ratio * zeta * zeta / mu;
    const double zeta_sq = execution == 1 ? 0.0 : ratio * zeta * zeta;

    return {ProblemInstance(LossModel::quadratic(mu), std::move(sources), std::move(honest)),
            execution, outlier, ParamVector{theta_star}, q_star, zeta_sq};
}

IndistinguishablePair indistinguishable_pair_scenario(std::size_t n, std::size_t f, std::size_t T,
                                                      double sigma, double mu) {
    require(f > 0 && 2 * f < n, "indistinguishable pair: requires 0 < f < n/2");
    require(T >= 1, "indistinguishable pair: T must be positive");
    require(sigma >= 0.0 && mu > 0.0, "indistinguishable pair: need sigma >= 0, mu > 0");
    const double fd = static_cast<double>(f);
    const double nT = static_cast<double>(n) * static_cast<double>(T);
    const double p = 2.0 * fd / nT;
    require(p <= 1.0, "indistinguishable pair: spike probability 2f/(nT) exceeds 1");
    const double spike = 2.0 * sigma / mu * std::sqrt(nT / (2.0 * fd));

    std::vector<DataSource> d_sources;
    std::vector<DataSource> dprime_sources;
    for (std::size_t i = 0; i < n; ++i) {
        d_sources.push_back(DataSource::dirac({0.0}));
        dprime_sources.push_back(DataSource::two_point({0.0}, 1.0 - p, {spike}));
    }
    std::vector<std::size_t> honest(n - f);
    std::iota(honest.begin(), honest.end(), std::size_t{0});

    return {ProblemInstance(LossModel::quadratic(mu), std::move(d_sources), honest),
            ProblemInstance(LossModel::quadratic(mu), std::move(dprime_sources), honest),
            spike,
            p,
            2.0 * sigma / mu * std::sqrt(2.0 * fd / nT),
            sigma * sigma * (1.0 - p)};
}

std::vector<std::size_t> PartialPoisonScenario::corrupted_indices(Case c) const {
    std::vector<std::size_t> idx(b);
    std::iota(idx.begin(), idx.end(), c == Case::clean_low ? m - b : std::size_t{0});
    return idx;
}

std::vector<WorkerSpec> PartialPoisonScenario::workers(Case c,
                                                       const std::optional<AttackSpec>& attack) const {
    std::vector<WorkerSpec> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= n - f && attack.has_value()) {
            out.push_back(WorkerSpec::byzantine(*attack));
        } else {
            out.push_back(WorkerSpec::partially_poisoned(dataset, corrupted_indices(c)));
        }
    }
    return out;
}

ProblemInstance PartialPoisonScenario::instance(Case c) const {
    const WorkerSpec::PartiallyPoisoned layout{dataset, corrupted_indices(c)};
    std::vector<DataSource> sources(n, clean_distribution(layout));
    std::vector<std::size_t> honest(n - f);
    std::iota(honest.begin(), honest.end(), std::size_t{0});
    return ProblemInstance(LossModel::quadratic(mu), std::move(sources), std::move(honest));
}

double PartialPoisonScenario::honest_gradient_variance(Case c) const {
    if (c == Case::clean_low) return 0.0;
    const double md = static_cast<double>(m);
    const double bd = static_cast<double>(b);
    return sigma * sigma * (md - 2.0 * bd) / (md - bd);
}

PartialPoisonScenario partial_poison_scenario(std::size_t m, std::size_t b, double sigma,
                                              double mu, std::size_t n, std::size_t f) {
    require(b > 0, "partial poison scenario: b must be positive");
    require(2 * b < m, "partial poison scenario: requires b < m/2");
    require(n >= 1 && 2 * f < n, "partial poison scenario: requires f < n/2");
    require(sigma >= 0.0 && mu > 0.0, "partial poison scenario: need sigma >= 0, mu > 0");
    const double value = 2.0 * sigma / mu *
                         std::sqrt(static_cast<double>(m - b) / static_cast<double>(b));
    std::vector<ParamVector> dataset(m, ParamVector{0.0});
    for (std::size_t j = m - b; j < m; ++j) dataset[j] = {value};
    return {m, b, n, f, sigma, mu, value, std::move(dataset)};
}

}  // namespace byzsim
