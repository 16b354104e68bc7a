#pragma once

#include <cstddef>
#include <span>

#include "byzsim/vector.hpp"

namespace byzsim {

/// Server-side aggregation rule. The rule sees only the vectors, never worker identities.
struct AggregatorSpec {
    enum class Kind { average, trimmed_mean };

    Kind kind = Kind::average;
    std::size_t trim = 0;

    static AggregatorSpec average() { return {Kind::average, 0}; }
    static AggregatorSpec trimmed_mean(std::size_t trim) { return {Kind::trimmed_mean, trim}; }
};

/// Coordinate-wise trimmed mean TM^(trim): per coordinate drop the `trim` smallest and
/// `trim` largest values and average the rest. trim = 0 is the plain average.
/// Throws InputError when rows <= 2 * trim, on an empty batch or on a non-finite entry.
ParamVector coordinate_trimmed_mean(const VectorBatch& vectors, std::size_t trim);
ParamVector coordinate_trimmed_mean(std::span<const ParamVector> vectors, std::size_t trim);

ParamVector average(const VectorBatch& vectors);
ParamVector average(std::span<const ParamVector> vectors);

ParamVector aggregate(const AggregatorSpec& spec, const VectorBatch& vectors);

/// lambda = 6f/(n-2f) * (1 + f/(n-2f)); requires n > 2f.
double lambda_coeff(std::size_t n, std::size_t f);

/// lambda' = 6b/(m-2b) * (1 + b/(m-2b)); requires m > 2b.
/// There is a second variant with (1 + m/(m-2b)) in circulation; this one is used.
double lambda_prime_coeff(std::size_t m, std::size_t b);

}  // namespace byzsim
