// Compiled with -mavx2; only reached after a runtime CPU check.
#include "kernel_impl.hpp"

#include <immintrin.h>

#include <vector>

namespace byzsim::kernels {
namespace {

constexpr std::size_t kLanes = 4;

void axpy(double a, const double* x, double* y, std::size_t d) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t k = 0;
    for (; k + kLanes <= d; k += kLanes) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + k));
        _mm256_storeu_pd(y + k, _mm256_add_pd(_mm256_loadu_pd(y + k), prod));
    }
    for (; k < d; ++k) y[k] += a * x[k];
}

void blend(double beta, const double* g, double* m, std::size_t d) {
    const double keep = 1.0 - beta;
    const __m256d vb = _mm256_set1_pd(beta);
    const __m256d vk = _mm256_set1_pd(keep);
    std::size_t k = 0;
    for (; k + kLanes <= d; k += kLanes) {
        const __m256d lhs = _mm256_mul_pd(vb, _mm256_loadu_pd(m + k));
        const __m256d rhs = _mm256_mul_pd(vk, _mm256_loadu_pd(g + k));
        _mm256_storeu_pd(m + k, _mm256_add_pd(lhs, rhs));
    }
    for (; k < d; ++k) m[k] = beta * m[k] + keep * g[k];
}

void column_mean(const double* rows, std::size_t n, std::size_t d, double* out) {
    const auto count = static_cast<double>(n);
    const __m256d vcount = _mm256_set1_pd(count);
    std::size_t k = 0;
    for (; k + kLanes <= d; k += kLanes) {
        const __m256d base = _mm256_loadu_pd(rows + k);
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t i = 0; i < n; ++i) {
            acc = _mm256_add_pd(acc, _mm256_sub_pd(_mm256_loadu_pd(rows + i * d + k), base));
        }
        _mm256_storeu_pd(out + k, _mm256_add_pd(base, _mm256_div_pd(acc, vcount)));
    }
    for (; k < d; ++k) {
        const double base = rows[k];
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += rows[i * d + k] - base;
        out[k] = base + acc / count;
    }
}

const std::vector<std::pair<std::size_t, std::size_t>>& cached_network(std::size_t n) {
    thread_local std::size_t cached_n = 0;
    thread_local std::vector<std::pair<std::size_t, std::size_t>> network;
    if (cached_n != n) {
        network = merge_exchange_network(n);
        cached_n = n;
    }
    return network;
}

void column_trimmed_mean(const double* rows, std::size_t n, std::size_t d, std::size_t trim,
                         double* out) {
    const std::size_t kept = n - 2 * trim;
    const auto count = static_cast<double>(kept);
    const __m256d vcount = _mm256_set1_pd(count);
    const auto& network = cached_network(n);
    struct Lane {
        __m256d v;
    };
    std::vector<Lane> lanes(n);

    std::size_t k = 0;
    for (; k + kLanes <= d; k += kLanes) {
        for (std::size_t i = 0; i < n; ++i) lanes[i].v = _mm256_loadu_pd(rows + i * d + k);
        for (const auto& [lo, hi] : network) {
            const __m256d a = lanes[lo].v;
            const __m256d b = lanes[hi].v;
            lanes[lo].v = _mm256_min_pd(a, b);
            lanes[hi].v = _mm256_max_pd(a, b);
        }
        const __m256d base = lanes[trim].v;
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t j = trim; j < trim + kept; ++j) {
            acc = _mm256_add_pd(acc, _mm256_sub_pd(lanes[j].v, base));
        }
        _mm256_storeu_pd(out + k, _mm256_add_pd(base, _mm256_div_pd(acc, vcount)));
    }

    if (k == d) return;
    std::vector<double> column(n);
    for (; k < d; ++k) {
        for (std::size_t i = 0; i < n; ++i) column[i] = rows[i * d + k];
        for (const auto& [lo, hi] : network) {
            if (column[hi] < column[lo]) std::swap(column[lo], column[hi]);
        }
        const double base = column[trim];
        double acc = 0.0;
        for (std::size_t j = trim; j < trim + kept; ++j) acc += column[j] - base;
        out[k] = base + acc / count;
    }
}

double horizontal_sum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double squared_norm(const double* x, std::size_t d) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + kLanes <= d; k += kLanes) {
        const __m256d v = _mm256_loadu_pd(x + k);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
    }
    double total = horizontal_sum(acc);
    for (; k < d; ++k) total += x[k] * x[k];
    return total;
}

double squared_distance(const double* x, const double* y, std::size_t d) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + kLanes <= d; k += kLanes) {
        const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
    }
    double total = horizontal_sum(acc);
    for (; k < d; ++k) {
        const double diff = x[k] - y[k];
        total += diff * diff;
    }
    return total;
}

}  // namespace

const KernelSet& avx2_kernels() {
    static const KernelSet set{"avx2",        &axpy,         &blend,           &column_mean,
                               &column_trimmed_mean, &squared_norm, &squared_distance};
    return set;
}

}  // namespace byzsim::kernels
