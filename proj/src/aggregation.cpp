#include "byzsim/aggregation.hpp"

#include <string>

#include "byzsim/errors.hpp"
#include "byzsim/kernels.hpp"

namespace byzsim {

namespace {

void check_batch(const VectorBatch& vectors, const char* op) {
    require(!vectors.empty(), std::string(op) + ": empty input");
    require(vectors.dim() > 0, std::string(op) + ": zero-dimensional vectors");
    // NaN has no place in a total order; Inf would poison the sums.
    if (!all_finite({vectors.data(), vectors.rows() * vectors.dim()})) {
        throw InputError(std::string(op) + ": non-finite input coordinate");
    }
}

double robustness_coeff(std::size_t total, std::size_t corrupted, const char* op) {
    require(total > 2 * corrupted, std::string(op) + ": requires n > 2f (got n = " +
                                       std::to_string(total) + ", f = " +
                                       std::to_string(corrupted) + ")");
    const double ratio =
        static_cast<double>(corrupted) / static_cast<double>(total - 2 * corrupted);
    return 6.0 * ratio * (1.0 + ratio);
}

}  // namespace

ParamVector average(const VectorBatch& vectors) {
    check_batch(vectors, "average");
    ParamVector out(vectors.dim());
    kernels::active().column_mean(vectors.data(), vectors.rows(), vectors.dim(), out.data());
    return out;
}

ParamVector average(std::span<const ParamVector> vectors) {
    return average(VectorBatch::from_rows(vectors));
}

ParamVector coordinate_trimmed_mean(const VectorBatch& vectors, std::size_t trim) {
    check_batch(vectors, "coordinate_trimmed_mean");
    require(vectors.rows() > 2 * trim,
            "coordinate_trimmed_mean: requires n > 2 * trim (got n = " +
                std::to_string(vectors.rows()) + ", trim = " + std::to_string(trim) + ")");
    if (trim == 0) return average(vectors);
    ParamVector out(vectors.dim());
    kernels::active().column_trimmed_mean(vectors.data(), vectors.rows(), vectors.dim(), trim,
                                          out.data());
    return out;
}

ParamVector coordinate_trimmed_mean(std::span<const ParamVector> vectors, std::size_t trim) {
    return coordinate_trimmed_mean(VectorBatch::from_rows(vectors), trim);
}

ParamVector aggregate(const AggregatorSpec& spec, const VectorBatch& vectors) {
    switch (spec.kind) {
        case AggregatorSpec::Kind::average:
            return average(vectors);
        case AggregatorSpec::Kind::trimmed_mean:
            return coordinate_trimmed_mean(vectors, spec.trim);
    }
    throw InputError("aggregate: unknown aggregator kind");
}

double lambda_coeff(std::size_t n, std::size_t f) { return robustness_coeff(n, f, "lambda_coeff"); }

double lambda_prime_coeff(std::size_t m, std::size_t b) {
    return robustness_coeff(m, b, "lambda_prime_coeff");
}

}  // namespace byzsim
