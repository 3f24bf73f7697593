#pragma once

#include <cstdint>
#include <vector>

namespace odflow {

// Deterministic counter-based random stream. Outputs are identical on
// every platform, unlike the distributions in <random> whose mapping is
// implementation-defined. One stream per (seed, counter) pair lets
// parallel workers draw independent, order-free substreams.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ULL) {}

    // Derive the substream used for item `index` under `seed`.
    static RandomStream for_index(std::uint64_t seed, std::uint64_t index) {
        RandomStream mix(seed);
        std::uint64_t z = mix.next_u64() ^ (index * 0xbf58476d1ce4e5b9ULL);
        return RandomStream(z);
    }

    std::uint64_t next_u64() {  // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n) without modulo bias.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // Fisher-Yates shuffle with platform-independent draws.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

  private:
    std::uint64_t state_;
};

}  // namespace odflow
