#pragma once

#include <cstdint>
#include <random>

namespace prefagg {

// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seeded random stream backed by std::mt19937_64.
///
/// Uniform doubles are produced from the top 53 bits of each draw rather than
/// through std::uniform_real_distribution, whose output is not specified
/// bit-for-bit across standard library implementations. A stream is fully
/// determined by its 64-bit seed.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

    /// Stream for work item `index` under `seed`. Parallel code draws from
    /// substreams keyed by chunk or pair index so results never depend on
    /// how work is split across threads.
    static RandomStream substream(std::uint64_t seed, std::uint64_t index) {
        return RandomStream(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
    }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace prefagg
