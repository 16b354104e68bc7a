#include "byzsim/diagnostics.hpp"

#include <cmath>

#include "byzsim/aggregation.hpp"
#include "byzsim/errors.hpp"

namespace byzsim {

double compute_deviation(const VectorBatch& honest_momenta, std::span<const double> theta,
                         const ProblemInstance& instance) {
    require(!honest_momenta.empty(), "compute_deviation: empty honest set");
    const ParamVector mean = average(honest_momenta);
    return squared_distance(mean, instance.honest_grad(theta));
}

double compute_mean_drift(const VectorBatch& honest_momenta) {
    require(!honest_momenta.empty(), "compute_mean_drift: empty honest set");
    const ParamVector mean = average(honest_momenta);
    double acc = 0.0;
    for (std::size_t i = 0; i < honest_momenta.rows(); ++i) {
        acc += squared_distance(honest_momenta.row(i), mean);
    }
    return acc / static_cast<double>(honest_momenta.rows());
}

double lyapunov_value(double loss_gap, double deviation_sq, double mean_drift_sq, double L,
                      double lambda) {
    const double rho = lyapunov_rho(L);
    return loss_gap + rho * deviation_sq + rho * lambda * mean_drift_sq;
}

double lyapunov_recursion_rhs(double V, double gamma, double mu, double L, double lambda,
                              std::size_t n, std::size_t f, double sigma_sq, double zeta_sq) {
    require(n > f, "lyapunov_recursion_rhs: requires n > f");
    const double inv_h = 1.0 / static_cast<double>(n - f);
    return (1.0 - mu * gamma / 3.0) * V + 27.0 * L * (lambda + inv_h) * sigma_sq * gamma * gamma +
           1.5 * lambda * zeta_sq * gamma;
}

double sgd_upper_bound(double T, const SgdBoundParams& p) {
    require(T >= 2.0, "sgd_upper_bound: T must be >= 2");
    require(p.mu > 0.0 && p.K > 0.0, "sgd_upper_bound: mu and K must be positive");
    require(p.n > p.f, "sgd_upper_bound: requires n > f");
    const double inv_h = 1.0 / static_cast<double>(p.n - p.f);
    return 7.0 / 6.0 * p.Q0 * std::exp(-T / (108.0 * p.K)) +
           (p.lambda + inv_h) * 4374.0 * p.K * p.sigma_sq / (T * p.mu) +
           9.0 * p.lambda * p.zeta_sq / (2.0 * p.mu);
}

double full_batch_upper_bound(double T, const FullBatchBoundParams& p) {
    require(p.mu > 0.0 && p.L > 0.0, "full_batch_upper_bound: mu and L must be positive");
    const double floor = (p.lambda_prime * p.sigma_sq + 3.0 * p.lambda * p.lambda_prime * p.sigma_sq +
                          3.0 * p.lambda * p.zeta_sq) /
                         p.mu;
    return std::exp(-(p.mu / p.L) * T) * p.Q0 + floor;
}

double heterogeneity_floor(std::size_t n, std::size_t f, double zeta_sq, double mu) {
    require(n > 2 * f, "heterogeneity floor: requires n > 2f");
    require(mu > 0.0, "heterogeneity floor: mu must be positive");
    return static_cast<double>(f) / static_cast<double>(n - f) * zeta_sq / (4.0 * mu);
}

double partial_poison_floor(std::size_t m, std::size_t b, double sigma_sq, double mu) {
    require(m > b, "partial-poison floor: requires m > b");
    require(mu > 0.0, "partial-poison floor: mu must be positive");
    return sigma_sq / (4.0 * mu) * (static_cast<double>(b) / static_cast<double>(m - b));
}

double lower_bound_floor(FloorKind kind, const FloorParams& p) {
    switch (kind) {
        case FloorKind::heterogeneity:
            return heterogeneity_floor(p.n, p.f, p.zeta_sq, p.mu);
        case FloorKind::partial_poison:
            return partial_poison_floor(p.m, p.b, p.sigma_sq, p.mu);
    }
    throw InputError("lower_bound_floor: unknown kind");
}

}  // namespace byzsim
