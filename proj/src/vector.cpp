#include "byzsim/vector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "byzsim/errors.hpp"
#include "byzsim/kernels.hpp"

namespace byzsim {

bool all_finite(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(std::span<const double> x, const char* what) {
    if (!all_finite(x)) throw InputError(std::string(what) + ": non-finite entry");
}

void require_same_dim(std::size_t expected, std::size_t actual, const char* what) {
    if (expected != actual) {
        throw InputError(std::string(what) + ": dimension mismatch (expected " +
                         std::to_string(expected) + ", got " + std::to_string(actual) + ")");
    }
}

double squared_norm(std::span<const double> x) {
    return kernels::active().squared_norm(x.data(), x.size());
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
    require_same_dim(x.size(), y.size(), "squared_distance");
    return kernels::active().squared_distance(x.data(), y.data(), x.size());
}

ParamVector add(std::span<const double> x, std::span<const double> y) {
    require_same_dim(x.size(), y.size(), "add");
    ParamVector out(x.begin(), x.end());
    kernels::active().axpy(1.0, y.data(), out.data(), out.size());
    return out;
}

ParamVector subtract(std::span<const double> x, std::span<const double> y) {
    require_same_dim(x.size(), y.size(), "subtract");
    ParamVector out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] - y[k];
    return out;
}

ParamVector scaled(std::span<const double> x, double factor) {
    ParamVector out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = factor * x[k];
    return out;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    require_same_dim(y.size(), x.size(), "axpy");
    kernels::active().axpy(a, x.data(), y.data(), y.size());
}

VectorBatch VectorBatch::from_rows(std::span<const ParamVector> rows) {
    if (rows.empty()) return {};
    VectorBatch batch(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require_same_dim(batch.dim(), rows[i].size(), "VectorBatch row");
        std::copy(rows[i].begin(), rows[i].end(), batch.row(i).begin());
    }
    return batch;
}

VectorBatch VectorBatch::select(std::span<const std::size_t> indices) const {
    VectorBatch out(indices.size(), dim_);
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const auto src = row(indices[j]);
        std::copy(src.begin(), src.end(), out.row(j).begin());
    }
    return out;
}

}  // namespace byzsim
