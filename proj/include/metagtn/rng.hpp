#pragma once

#include <cstdint>
#include <span>

namespace metagtn {

inline constexpr std::uint64_t kRngGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

// SplitMix64 stream. Streams are keyed by up to three 64-bit values, so
// per-(vertex, walk) generators are independent of scheduling order.
class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) : state_(mix64(seed + kRngGamma)) {}
    SplitMix(std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b = 0)
        : state_(mix64(mix64(seed + kRngGamma) ^ mix64(stream_a * 0xA24BAED4963EE407ULL + 1) ^
                       mix64(stream_b * 0x9FB21C651E98DF25ULL + 2))) {}

    std::uint64_t next_u64() {
        state_ += kRngGamma;
        return mix64(state_);
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n). Lemire's multiply-shift without rejection; the bias is
    // far below anything observable at the sample counts used here.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

private:
    std::uint64_t state_;
};

template <typename T>
void fisher_yates_shuffle(std::span<T> items, SplitMix& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace metagtn
