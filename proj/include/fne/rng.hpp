#pragma once

#include <cstdint>
#include <random>

namespace fne {

using Rng = std::mt19937_64;

// Independent streams derived from one run seed, so that adding draws in one
// consumer never shifts the sequence seen by another.
enum class RngStream : std::uint32_t {
    data = 1,
    split = 2,
    init = 3,
    shuffle = 4,
    sampling = 5,
};

inline Rng make_rng(std::uint64_t seed, RngStream stream, std::uint64_t salt = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(salt),
                      static_cast<std::uint32_t>(salt >> 32)};
    return Rng(seq);
}

// [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace fne
