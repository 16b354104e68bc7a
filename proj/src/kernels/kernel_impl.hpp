#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "byzsim/kernels.hpp"

namespace byzsim::kernels {

#if defined(BYZSIM_HAVE_AVX2)
const KernelSet& avx2_kernels();
#endif

/// Batcher's merge-exchange network for arbitrary n (Knuth TAOCP 5.2.2, Algorithm M).
/// Applying compare-exchange (lo, hi) for every pair in order sorts ascending.
inline std::vector<std::pair<std::size_t, std::size_t>> merge_exchange_network(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (n < 2) return pairs;
    std::size_t t = 0;
    while ((std::size_t{1} << t) < n) ++t;
    for (std::size_t p = std::size_t{1} << (t - 1); p > 0; p >>= 1) {
        std::size_t q = std::size_t{1} << (t - 1);
        std::size_t r = 0;
        std::size_t dist = p;
        while (true) {
            for (std::size_t i = 0; i + dist < n; ++i) {
                if ((i & p) == r) pairs.emplace_back(i, i + dist);
            }
            if (q == p) break;
            dist = q - p;
            q >>= 1;
            r = p;
        }
    }
    return pairs;
}

}  // namespace byzsim::kernels
