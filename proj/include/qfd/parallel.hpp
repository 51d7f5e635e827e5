#pragma once

#include <cstdint>

namespace qfd {

/// Worker count for parallel loops: the OpenMP default, capped by the
/// QFD_THREADS environment variable when it holds a positive integer.
int thread_count();

/// Counter-based generator (splitmix64 finalizer over seed, stream and
/// counter). Every draw is a pure function of its three inputs, so a
/// trajectory's random numbers do not depend on scheduling.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
    [[nodiscard]] std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const;
    /// Uniform double in [0, 1) with 53 random bits.
    [[nodiscard]] double uniform(std::uint64_t stream, std::uint64_t counter) const;
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

}  // namespace qfd
