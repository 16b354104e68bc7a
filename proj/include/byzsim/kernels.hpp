#pragma once

// Data-parallel inner loops shared by the aggregation rules, workers and server update.
//
// Every kernel exists as a scalar reference and, where the target supports it, an AVX2
// variant. Coordinate-wise kernels vectorize across coordinates and keep the per-coordinate
// operation order of the scalar path, so their outputs are bit-identical. Reductions over
// coordinates (squared_norm, squared_distance) use a different summation order and agree
// with the scalar path only up to rounding.

#include <cstddef>
#include <string_view>

namespace byzsim::kernels {

struct KernelSet {
    std::string_view name;

    /// y[k] += a * x[k]
    void (*axpy)(double a, const double* x, double* y, std::size_t d);

    /// m[k] = beta * m[k] + (1 - beta) * g[k]
    void (*blend)(double beta, const double* g, double* m, std::size_t d);

    /// Row-major n x d input. out[k] = r0[k] + (sum_i (ri[k] - r0[k])) / n, summed in row order.
    void (*column_mean)(const double* rows, std::size_t n, std::size_t d, double* out);

    /// Row-major n x d input, n > 2 * trim, all entries finite. Per coordinate: sort, drop
    /// `trim` values at each end, return lo + (sum of (v - lo) over kept values) / kept
    /// where lo is the smallest kept value; sums run in ascending order.
    void (*column_trimmed_mean)(const double* rows, std::size_t n, std::size_t d,
                                std::size_t trim, double* out);

    double (*squared_norm)(const double* x, std::size_t d);
    double (*squared_distance)(const double* x, const double* y, std::size_t d);
};

const KernelSet& scalar();

/// nullptr when the binary was built without AVX2 variants or the CPU lacks AVX2.
const KernelSet* avx2();

enum class Backend { automatic, scalar, avx2 };

/// Kernel set used by the library. Defaults to the fastest supported backend; can be
/// overridden with set_backend() or the BYZSIM_KERNELS environment variable
/// ("scalar" | "avx2") read on first use.
const KernelSet& active();

/// Throws InputError when the requested backend is unavailable.
void set_backend(Backend backend);

}  // namespace byzsim::kernels
