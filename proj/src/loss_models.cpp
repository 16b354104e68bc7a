#include "byzsim/loss_models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "byzsim/errors.hpp"

namespace byzsim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double unit_uniform(SplitMix64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

DataSource DataSource::dirac(ParamVector point) {
    require(!point.empty(), "dirac: empty point");
    require_finite(point, "dirac point");
    const auto d = point.size();
    return DataSource(Dirac{std::move(point)}, d);
}

DataSource DataSource::two_point(ParamVector a, double prob_a, ParamVector b) {
    require(!a.empty(), "two_point: empty point");
    require_same_dim(a.size(), b.size(), "two_point");
    require(prob_a >= 0.0 && prob_a <= 1.0, "two_point: prob_a must lie in [0, 1]");
    require_finite(a, "two_point point_a");
    require_finite(b, "two_point point_b");
    const auto d = a.size();
    return DataSource(TwoPoint{std::move(a), prob_a, std::move(b)}, d);
}

DataSource DataSource::empirical(std::vector<ParamVector> points) {
    require(!points.empty(), "empirical: dataset must contain at least one point");
    const auto d = points.front().size();
    require(d > 0, "empirical: empty point");
    for (const auto& p : points) {
        require_same_dim(d, p.size(), "empirical point");
        require_finite(p, "empirical point");
    }
    return DataSource(Empirical{std::move(points)}, d);
}

DataSource DataSource::gaussian(ParamVector mean, double variance) {
    require(!mean.empty(), "gaussian: empty mean");
    require_finite(mean, "gaussian mean");
    require(std::isfinite(variance) && variance >= 0.0, "gaussian: variance must be >= 0");
    const auto d = mean.size();
    return DataSource(Gaussian{std::move(mean), variance}, d);
}

ParamVector DataSource::mean() const {
    return std::visit(
        overloaded{
            [](const Dirac& s) { return s.point; },
            [](const TwoPoint& s) {
                ParamVector m(s.a.size());
                for (std::size_t k = 0; k < m.size(); ++k) {
                    m[k] = s.prob_a * s.a[k] + (1.0 - s.prob_a) * s.b[k];
                }
                return m;
            },
            [](const Empirical& s) {
                ParamVector m(s.points.front().size(), 0.0);
                for (const auto& p : s.points) {
                    for (std::size_t k = 0; k < m.size(); ++k) m[k] += p[k];
                }
                const auto count = static_cast<double>(s.points.size());
                for (auto& v : m) v /= count;
                return m;
            },
            [](const Gaussian& s) { return s.mean; },
        },
        kind_);
}

double DataSource::spread() const {
    return std::visit(overloaded{
                          [](const Dirac&) { return 0.0; },
                          [](const TwoPoint& s) {
                              return s.prob_a * (1.0 - s.prob_a) * squared_distance(s.a, s.b);
                          },
                          [this](const Empirical& s) {
                              const ParamVector m = mean();
                              double acc = 0.0;
                              for (const auto& p : s.points) acc += squared_distance(p, m);
                              return acc / static_cast<double>(s.points.size());
                          },
                          [](const Gaussian& s) {
                              return static_cast<double>(s.mean.size()) * s.variance;
                          },
                      },
                      kind_);
}

std::vector<std::pair<double, ParamVector>> DataSource::atoms() const {
    return std::visit(
        overloaded{
            [](const Dirac& s) { return std::vector<std::pair<double, ParamVector>>{{1.0, s.point}}; },
            [](const TwoPoint& s) {
                return std::vector<std::pair<double, ParamVector>>{{s.prob_a, s.a},
                                                                   {1.0 - s.prob_a, s.b}};
            },
            [](const Empirical& s) {
                std::vector<std::pair<double, ParamVector>> out;
                const double w = 1.0 / static_cast<double>(s.points.size());
                out.reserve(s.points.size());
                for (const auto& p : s.points) out.emplace_back(w, p);
                return out;
            },
            [](const Gaussian&) -> std::vector<std::pair<double, ParamVector>> {
                throw CapabilityError("gaussian source has no finite support");
            },
        },
        kind_);
}

ParamVector DataSource::sample(SplitMix64& rng) const {
    return std::visit(overloaded{
                          [](const Dirac& s) { return s.point; },
                          [&rng](const TwoPoint& s) {
                              return unit_uniform(rng) < s.prob_a ? s.a : s.b;
                          },
                          [&rng](const Empirical& s) {
                              std::uniform_int_distribution<std::size_t> pick(0, s.points.size() - 1);
                              return s.points[pick(rng)];
                          },
                          [&rng](const Gaussian& s) {
                              std::normal_distribution<double> noise(0.0, std::sqrt(s.variance));
                              ParamVector x(s.mean);
                              for (auto& v : x) v += noise(rng);
                              return x;
                          },
                      },
                      kind_);
}

double quadratic_loss(std::span<const double> theta, std::span<const double> x, double mu) {
    require_same_dim(theta.size(), x.size(), "quadratic_loss");
    return 0.25 * mu * squared_distance(theta, x);
}

ParamVector quadratic_grad(std::span<const double> theta, std::span<const double> x, double mu) {
    require_same_dim(theta.size(), x.size(), "quadratic_grad");
    ParamVector g(theta.size());
    const double half_mu = 0.5 * mu;
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = half_mu * (theta[k] - x[k]);
    return g;
}

LossModel LossModel::quadratic(double mu) {
    require(std::isfinite(mu) && mu > 0.0, "quadratic loss: mu must be positive");
    return LossModel(Kind::quadratic, mu, mu);
}

LossModel LossModel::custom(LossFn loss, GradFn grad, double smoothness, double pl_constant) {
    require(static_cast<bool>(loss) && static_cast<bool>(grad), "custom loss: missing callable");
    require(pl_constant > 0.0 && smoothness >= pl_constant,
            "custom loss: need 0 < mu <= L");
    LossModel model(Kind::custom, pl_constant, smoothness);
    model.loss_fn_ = std::move(loss);
    model.grad_fn_ = std::move(grad);
    return model;
}

double LossModel::loss(std::span<const double> theta, std::span<const double> x) const {
    if (kind_ == Kind::quadratic) return quadratic_loss(theta, x, mu_);
    return loss_fn_(theta, x);
}

ParamVector LossModel::grad(std::span<const double> theta, std::span<const double> x) const {
    if (kind_ == Kind::quadratic) return quadratic_grad(theta, x, mu_);
    return grad_fn_(theta, x);
}

void LossModel::grad_into(std::span<const double> theta, std::span<const double> x,
                          std::span<double> out) const {
    require_same_dim(theta.size(), x.size(), "grad");
    require_same_dim(theta.size(), out.size(), "grad output");
    if (kind_ == Kind::quadratic) {
        const double half_mu = 0.5 * mu_;
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = half_mu * (theta[k] - x[k]);
        return;
    }
    const ParamVector g = grad_fn_(theta, x);
    require_same_dim(out.size(), g.size(), "custom grad");
    std::copy(g.begin(), g.end(), out.begin());
}

ProblemInstance::ProblemInstance(LossModel loss, std::vector<DataSource> sources,
                                 std::vector<std::size_t> honest)
    : loss_(std::move(loss)), sources_(std::move(sources)), honest_(std::move(honest)) {
    const std::size_t n = sources_.size();
    require(n >= 1, "instance: at least one worker required");
    dim_ = sources_.front().dim();
    for (const auto& s : sources_) require_same_dim(dim_, s.dim(), "instance source");

    std::sort(honest_.begin(), honest_.end());
    require(std::adjacent_find(honest_.begin(), honest_.end()) == honest_.end(),
            "instance: duplicate honest index");
    require(honest_.empty() || honest_.back() < n, "instance: honest index out of range");
    const std::size_t f = n - honest_.size();
    require(2 * f < n, "instance: need f < n/2 (f = " + std::to_string(f) +
                           ", n = " + std::to_string(n) + ")");
    honest_mask_.assign(n, false);
    for (auto i : honest_) honest_mask_[i] = true;

    if (loss_.is_quadratic()) {
        minimizer_.assign(dim_, 0.0);
        std::vector<ParamVector> means;
        means.reserve(honest_.size());
        for (auto i : honest_) means.push_back(sources_[i].mean());
        for (const auto& m : means) {
            for (std::size_t k = 0; k < dim_; ++k) minimizer_[k] += m[k];
        }
        const auto h = static_cast<double>(honest_.size());
        for (auto& v : minimizer_) v /= h;
        double acc = 0.0;
        for (std::size_t j = 0; j < means.size(); ++j) {
            acc += squared_distance(means[j], minimizer_) + sources_[honest_[j]].spread();
        }
        optimal_value_ = 0.25 * loss_.mu() * acc / h;
    }
}

bool ProblemInstance::is_honest(std::size_t i) const { return honest_mask_.at(i); }

void ProblemInstance::require_quadratic(const char* op) const {
    if (!loss_.is_quadratic()) {
        throw CapabilityError(std::string(op) + ": closed form available for quadratic loss only");
    }
}

double ProblemInstance::local_expected_loss(std::size_t i, std::span<const double> theta) const {
    require(i < n(), "local_expected_loss: worker index out of range");
    require_same_dim(dim_, theta.size(), "local_expected_loss");
    const DataSource& src = sources_[i];
    if (loss_.is_quadratic()) {
        return 0.25 * loss_.mu() * (squared_distance(theta, src.mean()) + src.spread());
    }
    if (!src.has_finite_support()) {
        throw CapabilityError("local_expected_loss: no closed-form expectation for this source");
    }
    double acc = 0.0;
    for (const auto& [w, x] : src.atoms()) acc += w * loss_.loss(theta, x);
    return acc;
}

ParamVector ProblemInstance::local_expected_grad(std::size_t i,
                                                 std::span<const double> theta) const {
    require(i < n(), "local_expected_grad: worker index out of range");
    require_same_dim(dim_, theta.size(), "local_expected_grad");
    const DataSource& src = sources_[i];
    if (loss_.is_quadratic()) return quadratic_grad(theta, src.mean(), loss_.mu());
    if (!src.has_finite_support()) {
        throw CapabilityError("local_expected_grad: no closed-form expectation for this source");
    }
    ParamVector g(dim_, 0.0);
    for (const auto& [w, x] : src.atoms()) axpy(w, loss_.grad(theta, x), g);
    return g;
}

double ProblemInstance::honest_loss(std::span<const double> theta) const {
    double acc = 0.0;
    for (auto i : honest_) acc += local_expected_loss(i, theta);
    return acc / static_cast<double>(honest_.size());
}

ParamVector ProblemInstance::honest_grad(std::span<const double> theta) const {
    require_same_dim(dim_, theta.size(), "honest_grad");
    if (loss_.is_quadratic()) return quadratic_grad(theta, minimizer_, loss_.mu());
    ParamVector g(dim_, 0.0);
    for (auto i : honest_) axpy(1.0, local_expected_grad(i, theta), g);
    for (auto& v : g) v /= static_cast<double>(honest_.size());
    return g;
}

const ParamVector& ProblemInstance::minimizer() const {
    require_quadratic("minimizer");
    return minimizer_;
}

double ProblemInstance::optimal_value() const {
    require_quadratic("optimal_value");
    return optimal_value_;
}

double ProblemInstance::gap(std::span<const double> theta) const {
    require_quadratic("gap");
    require_same_dim(dim_, theta.size(), "gap");
    return 0.25 * loss_.mu() * squared_distance(theta, minimizer_);
}

double local_expected_loss(const ProblemInstance& instance, std::size_t i,
                           std::span<const double> theta) {
    return instance.local_expected_loss(i, theta);
}

double honest_global_loss(const ProblemInstance& instance, std::span<const double> theta) {
    return instance.honest_loss(theta);
}

ParamVector honest_global_grad(const ProblemInstance& instance, std::span<const double> theta) {
    return instance.honest_grad(theta);
}

AssumptionConstants verify_assumptions(const ProblemInstance& instance) {
    if (!instance.loss().is_quadratic()) {
        throw CapabilityError(
            "verify_assumptions: constants are not theta-uniform in closed form for this loss");
    }
    const double mu = instance.loss().mu();
    const double grad_scale = 0.25 * mu * mu;
    double sigma_sq = 0.0;
    double spread_of_means = 0.0;
    const ParamVector& center = instance.minimizer();
    for (auto i : instance.honest()) {
        const DataSource& src = instance.source(i);
        sigma_sq = std::max(sigma_sq, grad_scale * src.spread());
        spread_of_means += squared_distance(src.mean(), center);
    }
    const double zeta_sq =
        grad_scale * spread_of_means / static_cast<double>(instance.honest().size());
    return {instance.loss().smoothness(), mu, sigma_sq, zeta_sq};
}

}  // namespace byzsim
