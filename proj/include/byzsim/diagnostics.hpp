#pragma once

#include <cstddef>
#include <span>

#include "byzsim/loss_models.hpp"
#include "byzsim/vector.hpp"

namespace byzsim {

/// One trace row, taken at iteration t after the workers produced their messages.
struct IterationRecord {
    std::size_t t = 0;
    double gamma = 0.0;
    double beta = 0.0;
    double loss_gap = 0.0;       // Q^(H)(theta_t) - Q*
    double grad_norm_sq = 0.0;   // ||grad Q^(H)(theta_t)||^2
    double deviation_sq = 0.0;   // ||mean honest momentum - grad Q^(H)(theta_t)||^2
    double mean_drift_sq = 0.0;  // mean over H of ||m_i - mean honest momentum||^2
    double lyapunov = 0.0;       // sample-path V_t
};

/// ||mean(honest_momenta) - grad Q^(H)(theta)||^2
double compute_deviation(const VectorBatch& honest_momenta, std::span<const double> theta,
                         const ProblemInstance& instance);

/// (1/h) sum_i ||m_i - mean||^2 over the h honest momenta.
double compute_mean_drift(const VectorBatch& honest_momenta);

constexpr double lyapunov_rho(double L) { return 1.0 / (12.0 * L); }

/// V = gap + rho * deviation + rho * lambda * drift, rho = 1/(12L).
double lyapunov_value(double loss_gap, double deviation_sq, double mean_drift_sq, double L,
                      double lambda);

/// Right-hand side of the one-step Lyapunov recursion:
/// (1 - mu g/3) V + 27 L (lambda + 1/(n-f)) sigma^2 g^2 + (3/2) lambda zeta^2 g.
double lyapunov_recursion_rhs(double V, double gamma, double mu, double L, double lambda,
                              std::size_t n, std::size_t f, double sigma_sq, double zeta_sq);

struct SgdBoundParams {
    double Q0;
    double K;  // L / mu
    double lambda;
    double sigma_sq;
    double zeta_sq;
    double mu;
    std::size_t n;
    std::size_t f;
};

/// (7/6) Q0 e^{-T/(108K)} + (lambda + 1/(n-f)) 4374 K sigma^2 / (T mu) + 9 lambda zeta^2 / (2 mu)
double sgd_upper_bound(double T, const SgdBoundParams& p);

struct FullBatchBoundParams {
    double Q0;
    double mu;
    double L;
    double lambda;
    double lambda_prime;
    double sigma_sq;
    double zeta_sq;
};

/// e^{-(mu/L) T} Q0 + (lambda' sigma^2 + 3 lambda lambda' sigma^2 + 3 lambda zeta^2) / mu
double full_batch_upper_bound(double T, const FullBatchBoundParams& p);

/// (f/(n-f)) zeta^2 / (4 mu); requires n > 2f, mu > 0.
double heterogeneity_floor(std::size_t n, std::size_t f, double zeta_sq, double mu);

/// (sigma^2 / (4 mu)) * b / (m - b); requires m > b, mu > 0.
double partial_poison_floor(std::size_t m, std::size_t b, double sigma_sq, double mu);

enum class FloorKind { heterogeneity, partial_poison };

struct FloorParams {
    std::size_t n = 0;
    std::size_t f = 0;
    double zeta_sq = 0.0;
    std::size_t m = 0;
    std::size_t b = 0;
    double sigma_sq = 0.0;
    double mu = 1.0;
};

double lower_bound_floor(FloorKind kind, const FloorParams& p);

}  // namespace byzsim
