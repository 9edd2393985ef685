#pragma once

#include <cstdint>
#include <random>

namespace sbi {

/// Seedable generator used everywhere randomness is needed. Doubles are
/// built from the raw 64-bit stream instead of std::uniform_real_distribution,
/// whose output is implementation-defined; this keeps trials bit-reproducible
/// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : eng_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

/// splitmix64 finalizer; good avalanche for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Documented seed-splitting rule: every trial seed is a function of the
/// master seed, the trial index, the swarm size and the scheme id, so any
/// single cell or trial can be reproduced in isolation.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial,
                                 std::uint64_t n_agents, std::uint64_t scheme_id) {
    return mix64(master ^ mix64(trial ^ mix64(n_agents ^ mix64(scheme_id))));
}

}  // namespace sbi
