#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace byzsim {

/// Dense model state theta in R^d. Also used for data points and messages.
using ParamVector = std::vector<double>;

bool all_finite(std::span<const double> x);
void require_finite(std::span<const double> x, const char* what);
void require_same_dim(std::size_t expected, std::size_t actual, const char* what);

double squared_norm(std::span<const double> x);
double squared_distance(std::span<const double> x, std::span<const double> y);
ParamVector add(std::span<const double> x, std::span<const double> y);
ParamVector subtract(std::span<const double> x, std::span<const double> y);
ParamVector scaled(std::span<const double> x, double factor);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

/// n vectors of dimension d stored contiguously, row i = vector of worker i.
class VectorBatch {
public:
    VectorBatch() = default;
    VectorBatch(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim) {}

    static VectorBatch from_rows(std::span<const ParamVector> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return rows_ == 0; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * dim_, dim_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * dim_, dim_};
    }
    const double* data() const noexcept { return data_.data(); }
    double* data() noexcept { return data_.data(); }

    /// Copy of the selected rows, in the given order.
    VectorBatch select(std::span<const std::size_t> indices) const;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

}  // namespace byzsim
