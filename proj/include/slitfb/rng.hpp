#pragma once

#include <cstdint>

namespace slitfb {

/// Counter-based generator: the k-th draw is a pure function of (seed, k),
/// so randomized suites replay exactly regardless of evaluation order and the
/// manifest only has to record the name and the seed.
struct CounterRng {
    std::uint64_t seed = 0;

    static constexpr const char* name() { return "splitmix64-counter"; }

    std::uint64_t bits(std::uint64_t counter) const {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (counter + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform draw in [0, 1).
    double uniform(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    /// Uniform draw in [a, b).
    double uniform(std::uint64_t counter, double a, double b) const {
        return a + (b - a) * uniform(counter);
    }
};

} // namespace slitfb
