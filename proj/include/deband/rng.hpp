#pragma once

#include <cstdint>

namespace deband {

/// SplitMix64 step. Used wherever a stream must be reproducible outside this
/// library (fixture inputs, synthetic weights, the baseline's radius hash).
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Stateless mix of a single value.
inline std::uint64_t mix64(std::uint64_t v) noexcept {
  std::uint64_t s = v;
  return splitmix64(s);
}

/// Uniform float in [-1, 1) from the top 24 bits of the next draw.
inline float uniform_pm1(std::uint64_t& state) noexcept {
  const auto bits = static_cast<std::uint32_t>(splitmix64(state) >> 40);
  return static_cast<float>(bits) * (2.0f / 16777216.0f) - 1.0f;
}

}  // namespace deband
