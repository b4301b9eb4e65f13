#pragma once

// Reproducible randomness.
//
// Sequential draws use std::mt19937_64, whose output sequence is fixed by the
// C++ standard. Uniform variates take the top 53 bits of each output, and
// discrete draws invert the cumulative distribution in alphabet order. No
// std::*_distribution is used because their algorithms are implementation
// defined. Keyed draws (one per fiber coordinate) use the SplitMix64 finalizer
// so a coordinate's symbol depends only on (seed, coordinate).

#include <cstdint>
#include <random>
#include <span>

namespace fiberlab {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent child seed for stream `stream` of `seed`.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

inline constexpr double unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Smallest index whose cumulative mass exceeds u; falls back to the last
// positive-mass index when rounding leaves u above the total.
inline std::size_t inverse_cdf(std::span<const double> probs, double u) noexcept {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

class SequentialRng {
public:
  explicit SequentialRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return unit_interval(engine_()); }
  std::size_t pick(std::span<const double> probs) { return inverse_cdf(probs, uniform()); }

private:
  std::mt19937_64 engine_;
};

}  // namespace fiberlab
