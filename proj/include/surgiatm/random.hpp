#pragma once

#include <cstdint>
#include <random>

namespace surgiatm {

// Distribution objects in <random> are implementation-defined; these map the
// fully specified mt19937_64 stream directly so seeded outputs match everywhere.

/// Uniform double in [0, 1) with 53 random bits.
inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_in(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(gen);
}

/// Index in [0, n), n > 0. Modulo bias is below 2^-40 for n < 2^24.
inline std::uint64_t uniform_index(std::mt19937_64& gen, std::uint64_t n) {
  return gen() % n;
}

}  // namespace surgiatm
