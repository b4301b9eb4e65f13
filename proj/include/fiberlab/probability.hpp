#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

namespace fiberlab {

// A probability held as its base-2 logarithm. Zero is an explicit flag so
// that underflow never masquerades as impossibility and -inf never appears.
struct LogProb {
  double log2 = 0.0;  // meaningless when zero
  bool zero = false;

  static constexpr LogProb one() noexcept { return {0.0, false}; }
  static constexpr LogProb null() noexcept { return {0.0, true}; }
  static LogProb of(double p) {
    if (p < 0.0 || p > 1.0 + 1e-12) throw std::invalid_argument("probability out of range");
    if (p == 0.0) return null();
    return {std::log2(p), false};
  }

  double value() const noexcept { return zero ? 0.0 : std::exp2(log2); }

  // -log2 of the probability; infinite for zero.
  double information() const noexcept {
    return zero ? std::numeric_limits<double>::infinity() : -log2;
  }

  LogProb& operator*=(LogProb other) noexcept {
    zero = zero || other.zero;
    log2 += other.log2;
    return *this;
  }
  friend LogProb operator*(LogProb a, LogProb b) noexcept { return a *= b; }
};

// Tolerance for rounding -log2 p up to an integer codeword length. Sums of
// logs of dyadic probabilities are exact in binary floating point; anything
// else is non-integral far beyond this margin at desk-scale block lengths.
inline constexpr double shannon_length_slack = 1e-9;

// ceil(-log2 p), never negative.
inline unsigned shannon_length(LogProb p) {
  if (p.zero) throw std::domain_error("Shannon length of a null event");
  const double bits = std::ceil(-p.log2 - shannon_length_slack);
  return bits <= 0.0 ? 0u : static_cast<unsigned>(bits);
}

inline unsigned raw_symbol_bits(std::size_t alphabet_size) {
  unsigned bits = 0;
  while ((std::size_t{1} << bits) < alphabet_size) ++bits;
  return bits;
}

// -sum p log2 p with 0 log 0 := 0.
inline double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

inline bool is_probability_vector(std::span<const double> probs, double tol) {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || p > 1.0 + tol) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

}  // namespace fiberlab
