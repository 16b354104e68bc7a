#pragma once

#include <cstdint>
#include <limits>

namespace byzsim {

/// SplitMix64 generator (Steele, Lea, Flood 2014). Satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Independent stream for worker `worker` at iteration `iteration` of the run seeded with
/// `seed`. Depends only on the triple, never on evaluation order.
constexpr SplitMix64 worker_stream(std::uint64_t seed, std::uint64_t worker,
                                   std::uint64_t iteration) noexcept {
    std::uint64_t key = SplitMix64::mix(seed ^ 0x6a09e667f3bcc909ULL);
    key = SplitMix64::mix(key ^ (worker + 0x243f6a8885a308d3ULL));
    key = SplitMix64::mix(key ^ (iteration + 0x13198a2e03707344ULL));
    return SplitMix64(key);
}

}  // namespace byzsim
