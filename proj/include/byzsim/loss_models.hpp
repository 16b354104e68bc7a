#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "byzsim/rng.hpp"
#include "byzsim/vector.hpp"

namespace byzsim {

/// Per-worker data distribution D^(i). Draws are i.i.d.
class DataSource {
public:
    struct Dirac {
        ParamVector point;
    };
    struct TwoPoint {
        ParamVector a;
        double prob_a;
        ParamVector b;
    };
    struct Empirical {
        std::vector<ParamVector> points;
    };
    /// Isotropic: every coordinate has the given variance.
    struct Gaussian {
        ParamVector mean;
        double variance;
    };
    using Kind = std::variant<Dirac, TwoPoint, Empirical, Gaussian>;

    static DataSource dirac(ParamVector point);
    static DataSource two_point(ParamVector a, double prob_a, ParamVector b);
    static DataSource empirical(std::vector<ParamVector> points);
    static DataSource gaussian(ParamVector mean, double variance);

    const Kind& kind() const noexcept { return kind_; }
    std::size_t dim() const noexcept { return dim_; }
    bool has_finite_support() const noexcept { return !std::holds_alternative<Gaussian>(kind_); }

    ParamVector mean() const;
    /// E ||x - E x||^2
    double spread() const;

    /// Weighted atoms of a finite-support source. Throws CapabilityError for gaussian.
    std::vector<std::pair<double, ParamVector>> atoms() const;

    ParamVector sample(SplitMix64& rng) const;

private:
    explicit DataSource(Kind kind, std::size_t dim) : kind_(std::move(kind)), dim_(dim) {}

    Kind kind_;
    std::size_t dim_;
};

double quadratic_loss(std::span<const double> theta, std::span<const double> x, double mu);
ParamVector quadratic_grad(std::span<const double> theta, std::span<const double> x, double mu);

/// Loss/gradient oracle q(theta, x) with its smoothness and PL constants.
///
/// Only the quadratic family q = (mu/4)||theta - x||^2 has closed-form expectations and
/// assumption constants. `custom` wraps arbitrary callables; operations that need closed
/// forms raise CapabilityError for it.
class LossModel {
public:
    enum class Kind { quadratic, custom };
    using LossFn = std::function<double(std::span<const double>, std::span<const double>)>;
    using GradFn = std::function<ParamVector(std::span<const double>, std::span<const double>)>;

    static LossModel quadratic(double mu);
    static LossModel custom(LossFn loss, GradFn grad, double smoothness, double pl_constant);

    Kind kind() const noexcept { return kind_; }
    bool is_quadratic() const noexcept { return kind_ == Kind::quadratic; }
    /// PL constant mu.
    double mu() const noexcept { return mu_; }
    /// Smoothness constant L. The quadratic family stores L = mu.
    double smoothness() const noexcept { return smoothness_; }

    double loss(std::span<const double> theta, std::span<const double> x) const;
    ParamVector grad(std::span<const double> theta, std::span<const double> x) const;
    /// Writes grad(theta, x) into out (same dimension as theta).
    void grad_into(std::span<const double> theta, std::span<const double> x,
                   std::span<double> out) const;

private:
    LossModel(Kind kind, double mu, double smoothness) : kind_(kind), mu_(mu), smoothness_(smoothness) {}

    Kind kind_;
    double mu_;
    double smoothness_;
    LossFn loss_fn_;
    GradFn grad_fn_;
};

/// Loss, per-worker sources and the ground-truth honest set H.
class ProblemInstance {
public:
    ProblemInstance(LossModel loss, std::vector<DataSource> sources,
                    std::vector<std::size_t> honest);

    std::size_t n() const noexcept { return sources_.size(); }
    std::size_t f() const noexcept { return sources_.size() - honest_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const LossModel& loss() const noexcept { return loss_; }
    const DataSource& source(std::size_t i) const { return sources_.at(i); }
    const std::vector<DataSource>& sources() const noexcept { return sources_; }
    std::span<const std::size_t> honest() const noexcept { return honest_; }
    bool is_honest(std::size_t i) const;

    /// Q^(i)(theta) = E_{x ~ D^(i)} q(theta, x)
    double local_expected_loss(std::size_t i, std::span<const double> theta) const;
    ParamVector local_expected_grad(std::size_t i, std::span<const double> theta) const;

    /// Q^(H) and its gradient.
    double honest_loss(std::span<const double> theta) const;
    ParamVector honest_grad(std::span<const double> theta) const;

    /// theta* and Q*; quadratic only.
    const ParamVector& minimizer() const;
    double optimal_value() const;

    /// Q^(H)(theta) - Q*. For quadratics evaluated as (mu/4)||theta - theta*||^2, which is
    /// the same quantity without the cancellation of subtracting Q*.
    double gap(std::span<const double> theta) const;

private:
    void require_quadratic(const char* op) const;

    LossModel loss_;
    std::vector<DataSource> sources_;
    std::vector<std::size_t> honest_;
    std::vector<bool> honest_mask_;
    std::size_t dim_ = 0;
    ParamVector minimizer_;
    double optimal_value_ = 0.0;
};

double local_expected_loss(const ProblemInstance& instance, std::size_t i,
                           std::span<const double> theta);
double honest_global_loss(const ProblemInstance& instance, std::span<const double> theta);
ParamVector honest_global_grad(const ProblemInstance& instance, std::span<const double> theta);

/// Exact constants of smoothness, PL, stochasticity and heterogeneity on a finite instance.
struct AssumptionConstants {
    double smoothness;  // L
    double pl;          // mu
    double sigma_sq;    // max over honest workers of the gradient covariance trace
    double zeta_sq;     // mean squared deviation of honest local gradients from their average
};

/// Quadratic loss only; the returned constants hold uniformly in theta.
AssumptionConstants verify_assumptions(const ProblemInstance& instance);

}  // namespace byzsim
