#include "kernel_impl.hpp"

#include <algorithm>
#include <vector>

namespace byzsim::kernels {
namespace {

void axpy(double a, const double* x, double* y, std::size_t d) {
    for (std::size_t k = 0; k < d; ++k) y[k] += a * x[k];
}

void blend(double beta, const double* g, double* m, std::size_t d) {
    const double keep = 1.0 - beta;
    for (std::size_t k = 0; k < d; ++k) m[k] = beta * m[k] + keep * g[k];
}

void column_mean(const double* rows, std::size_t n, std::size_t d, double* out) {
    const auto count = static_cast<double>(n);
    for (std::size_t k = 0; k < d; ++k) {
        const double base = rows[k];
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += rows[i * d + k] - base;
        out[k] = base + acc / count;
    }
}

void column_trimmed_mean(const double* rows, std::size_t n, std::size_t d, std::size_t trim,
                         double* out) {
    std::vector<double> column(n);
    const std::size_t kept = n - 2 * trim;
    const auto count = static_cast<double>(kept);
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t i = 0; i < n; ++i) column[i] = rows[i * d + k];
        std::sort(column.begin(), column.end());
        const double base = column[trim];
        double acc = 0.0;
        for (std::size_t j = trim; j < trim + kept; ++j) acc += column[j] - base;
        out[k] = base + acc / count;
    }
}

double squared_norm(const double* x, std::size_t d) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) acc += x[k] * x[k];
    return acc;
}

double squared_distance(const double* x, const double* y, std::size_t d) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[k] - y[k];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace

const KernelSet& scalar() {
    static const KernelSet set{"scalar",      &axpy,         &blend,           &column_mean,
                               &column_trimmed_mean, &squared_norm, &squared_distance};
    return set;
}

}  // namespace byzsim::kernels
