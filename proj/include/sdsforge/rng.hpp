#pragma once

#include <cstdint>
#include <random>

namespace sdsforge {

// Rejection sampling on top of mt19937_64. std::uniform_int_distribution is
// implementation-defined, so every bounded draw in the project goes through
// this helper to keep seeded runs byte-identical across toolchains.
inline uint64_t uniform_below(std::mt19937_64& rng, uint64_t bound) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound; // multiple of bound
    uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

} // namespace sdsforge
