#pragma once

// The driving shift: Markov measures on sequences over a finite alphabet,
// their cylinder probabilities, structural checks, sampling and the entropy
// rate, plus a Shannon block coder that estimates the plain complexity rate.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberlab/errors.hpp"
#include "fiberlab/probability.hpp"
#include "fiberlab/random.hpp"
#include "fiberlab/symbolic.hpp"

namespace fiberlab {

inline constexpr double spec_tolerance = 1e-12;
inline constexpr double structure_tolerance = 1e-10;

class MarkovChainSpec {
public:
  MarkovChainSpec(AlphabetPtr alphabet, std::vector<double> pi, std::vector<std::vector<double>> transition)
      : alphabet_(std::move(alphabet)), pi_(std::move(pi)) {
    const std::size_t s = alphabet_->size();
    if (pi_.size() != s) throw std::invalid_argument("pi has wrong dimension");
    if (!is_probability_vector(pi_, spec_tolerance))
      throw std::invalid_argument("pi is not a probability vector");
    if (transition.size() != s) throw std::invalid_argument("Pi has wrong number of rows");
    transition_.reserve(s * s);
    for (const auto& row : transition) {
      if (row.size() != s) throw std::invalid_argument("Pi has a row of wrong length");
      if (!is_probability_vector(row, spec_tolerance))
        throw std::invalid_argument("Pi is not row stochastic");
      transition_.insert(transition_.end(), row.begin(), row.end());
    }
  }

  // Every row equal to `p`, and pi = p.
  static MarkovChainSpec bernoulli(AlphabetPtr alphabet, std::vector<double> p) {
    std::vector<std::vector<double>> rows(alphabet->size(), p);
    return MarkovChainSpec(std::move(alphabet), std::move(p), std::move(rows));
  }

  static MarkovChainSpec uniform(AlphabetPtr alphabet) {
    const std::size_t s = alphabet->size();
    return bernoulli(std::move(alphabet), std::vector<double>(s, 1.0 / static_cast<double>(s)));
  }

  const Alphabet& alphabet() const noexcept { return *alphabet_; }
  const AlphabetPtr& alphabet_ptr() const noexcept { return alphabet_; }
  std::size_t size() const noexcept { return alphabet_->size(); }
  const std::vector<double>& pi() const noexcept { return pi_; }
  double pi(Letter i) const { return pi_[i]; }
  double transition(Letter from, Letter to) const { return transition_[from * size() + to]; }
  std::span<const double> row(Letter from) const { return {transition_.data() + from * size(), size()}; }

  std::vector<std::vector<double>> transition_matrix() const {
    std::vector<std::vector<double>> m;
    for (std::size_t i = 0; i < size(); ++i) {
      auto r = row(static_cast<Letter>(i));
      m.emplace_back(r.begin(), r.end());
    }
    return m;
  }

private:
  AlphabetPtr alphabet_;
  std::vector<double> pi_;
  std::vector<double> transition_;  // row major
};

// nu[v] in the log domain. The empty word has probability one.
inline LogProb cylinder_log_prob(const MarkovChainSpec& spec, std::span<const Letter> v) {
  if (v.empty()) return LogProb::one();
  LogProb p = LogProb::of(spec.pi(v[0]));
  for (std::size_t i = 1; i < v.size() && !p.zero; ++i) p *= LogProb::of(spec.transition(v[i - 1], v[i]));
  return p;
}

// nu[v | previous letter] = Pi(prev, v0) Pi(v0, v1) ... for a block that
// follows `prev` in the trajectory.
inline LogProb cylinder_log_prob_after(const MarkovChainSpec& spec, Letter prev, std::span<const Letter> v) {
  LogProb p = LogProb::one();
  Letter last = prev;
  for (Letter l : v) {
    p *= LogProb::of(spec.transition(last, l));
    if (p.zero) break;
    last = l;
  }
  return p;
}

inline double cylinder_prob(const MarkovChainSpec& spec, std::span<const Letter> v) {
  return cylinder_log_prob(spec, v).value();
}

inline double cylinder_prob(const MarkovChainSpec& spec, const Word& v) {
  if (!(v.alphabet() == spec.alphabet())) throw std::invalid_argument("word over a foreign alphabet");
  return cylinder_prob(spec, v.letters());
}

inline bool is_stationary(const MarkovChainSpec& spec) {
  const std::size_t s = spec.size();
  for (std::size_t j = 0; j < s; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s; ++i) acc += spec.pi(static_cast<Letter>(i)) * spec.transition(static_cast<Letter>(i), static_cast<Letter>(j));
    if (std::abs(acc - spec.pi(static_cast<Letter>(j))) > structure_tolerance) return false;
  }
  return true;
}

namespace detail {

inline std::vector<bool> reachable(const MarkovChainSpec& spec, std::size_t start, bool reversed) {
  const std::size_t s = spec.size();
  std::vector<bool> seen(s, false);
  std::vector<std::size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < s; ++j) {
      const double w = reversed ? spec.transition(static_cast<Letter>(j), static_cast<Letter>(i))
                                : spec.transition(static_cast<Letter>(i), static_cast<Letter>(j));
      if (w > 0.0 && !seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

}  // namespace detail

// Strong connectivity of the positive-transition graph: every state reaches
// state 0 and is reached from it.
inline bool is_irreducible(const MarkovChainSpec& spec) {
  for (bool r : detail::reachable(spec, 0, false))
    if (!r) return false;
  for (bool r : detail::reachable(spec, 0, true))
    if (!r) return false;
  return true;
}

// Every pair of states has a common predecessor with positive transition
// probability into both.
inline bool bufetov_condition(const MarkovChainSpec& spec) {
  const std::size_t s = spec.size();
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = a; b < s; ++b) {
      bool found = false;
      for (std::size_t d = 0; d < s && !found; ++d)
        found = spec.transition(static_cast<Letter>(d), static_cast<Letter>(a)) > 0.0 &&
                spec.transition(static_cast<Letter>(d), static_cast<Letter>(b)) > 0.0;
      if (!found) return false;
    }
  return true;
}

// Entropy rate in bits: -sum_i pi_i sum_j Pi_ij log2 Pi_ij.
inline double entropy_rate(const MarkovChainSpec& spec) {
  if (!is_stationary(spec)) throw precondition_violation("entropy rate requires a stationary spec");
  double h = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i)
    h += spec.pi(static_cast<Letter>(i)) * shannon_entropy(spec.row(static_cast<Letter>(i)));
  return h;
}

struct DrivingTrajectory {
  std::uint64_t seed = 0;
  std::vector<Letter> letters;
};

// letters[0] ~ pi, letters[i+1] ~ Pi(letters[i], .), driven by mt19937_64(seed).
inline DrivingTrajectory sample_trajectory(const MarkovChainSpec& spec, std::size_t n, std::uint64_t seed) {
  DrivingTrajectory t{seed, {}};
  t.letters.reserve(n);
  SequentialRng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t next = i == 0 ? rng.pick(spec.pi()) : rng.pick(spec.row(t.letters.back()));
    t.letters.push_back(static_cast<Letter>(next));
  }
  return t;
}

// How each k-block of the driving sequence is Shannon-coded.
enum class BlockContext {
  independent,      // length ceil(-log2 nu[u]) for every block
  previous_symbol,  // blocks after the first use nu[u | last letter of the preceding block]
};

// Probability the block coder assigns to the block starting at `offset`.
inline LogProb block_model_prob(const MarkovChainSpec& spec, std::span<const Letter> letters, std::size_t offset,
                                std::size_t k, BlockContext context) {
  auto block = letters.subspan(offset, k);
  if (context == BlockContext::previous_symbol && offset > 0)
    return cylinder_log_prob_after(spec, letters[offset - 1], block);
  return cylinder_log_prob(spec, block);
}

// Total bits of the Shannon block code for a driving sequence: full k-blocks
// at their Shannon lengths, the n mod k remainder at ceil(log2 |Theta|) bits
// per symbol.
inline std::uint64_t block_code_length(const MarkovChainSpec& spec, std::span<const Letter> letters, std::size_t k,
                                       BlockContext context = BlockContext::independent) {
  if (k == 0) throw std::invalid_argument("block length must be positive");
  const std::size_t m = letters.size() / k;
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const LogProb p = block_model_prob(spec, letters, i * k, k, context);
    if (p.zero) throw model_mismatch("driving block has zero probability");
    bits += shannon_length(p);
  }
  bits += static_cast<std::uint64_t>(letters.size() - m * k) * raw_symbol_bits(spec.size());
  return bits;
}

inline double block_code_rate(const MarkovChainSpec& spec, std::span<const Letter> letters, std::size_t k,
                              BlockContext context = BlockContext::independent) {
  if (letters.empty()) {
    if (k == 0) throw std::invalid_argument("block length must be positive");
    return 0.0;
  }
  return static_cast<double>(block_code_length(spec, letters, k, context)) / static_cast<double>(letters.size());
}

inline double block_code_rate(const MarkovChainSpec& spec, const DrivingTrajectory& t, std::size_t k,
                              BlockContext context = BlockContext::independent) {
  return block_code_rate(spec, t.letters, k, context);
}

// ---------------------------------------------------------------------------
// Presets

// {+e1, -e1, +e2, -e2}; letter i and i^1 are mutually inverse.
inline AlphabetPtr z2_generators() { return make_alphabet({"+e1", "-e1", "+e2", "-e2"}); }

// {a, a^-1, b, b^-1} written a, A, b, B; letter i and i^1 are mutually inverse.
inline AlphabetPtr f2_generators() { return make_alphabet({"a", "A", "b", "B"}); }

// Simple random walk on Z^2: uniform Bernoulli on the four generators.
inline MarkovChainSpec z2_uniform_driving() { return MarkovChainSpec::uniform(z2_generators()); }

// Non-backtracking walk on F2: uniform start, Pi(s, s') = 1/3 unless s' = s^-1.
inline MarkovChainSpec f2_markov_driving() {
  std::vector<std::vector<double>> rows(4, std::vector<double>(4, 1.0 / 3.0));
  for (std::size_t s = 0; s < 4; ++s) rows[s][s ^ 1u] = 0.0;
  return MarkovChainSpec(f2_generators(), std::vector<double>(4, 0.25), std::move(rows));
}

inline MarkovChainSpec binary_uniform_driving() { return MarkovChainSpec::uniform(make_alphabet({"0", "1"})); }

}  // namespace fiberlab
