#pragma once

#include <cstdint>

namespace markovig {

// SplitMix64 finalizer; pure integer arithmetic, identical on every platform.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Counter-based generator: every variate is a hash of
// (master_seed, trial_index, step_index), so draws are independent of thread
// scheduling and evaluation order.
struct CounterRng {
    std::uint64_t master_seed = 0;

    std::uint64_t bits(std::uint64_t trial, std::uint64_t step) const {
        std::uint64_t k = splitmix64(master_seed ^ 0x8AF6B9C4D52FE1A3ULL);
        k = splitmix64(k ^ (trial * 0xD1342543DE82EF95ULL));
        k = splitmix64(k ^ (step * 0xA0761D6478BD642FULL));
        return k;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform(std::uint64_t trial, std::uint64_t step) const {
        return static_cast<double>(bits(trial, step) >> 11) * 0x1.0p-53;
    }
};

}  // namespace markovig
