// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Deterministic random streams. Each named consumer (e.g. a weight tensor)
// derives its own stream from (seed, name), so adding or removing one layer
// never shifts the values drawn by any other layer. No <random> distributions
// are used anywhere: their output is implementation-defined, and these
// streams must be reproducible across standard libraries.
#pragma once

#include <cstdint>
#include <string_view>

namespace avse {

// splitmix64: tiny, well-mixed, and fully specified.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 24 bits of mantissa entropy (exact in float).
  float next_unit() {
    return static_cast<float>(next_u64() >> 40) * (1.0f / 16777216.0f);
  }

  // Uniform in [-k, k].
  float next_symmetric(float k) { return (2.0f * next_unit() - 1.0f) * k; }
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

// Independent stream for a named consumer under a global seed.
inline Rng rng_for(std::uint64_t seed, std::string_view name) {
  return Rng(fnv1a64(name) ^ (seed * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull));
}

}  // namespace avse
