#pragma once

// Conditional block coding of orbit names given their driving sequence.
//
// For a block length k every driving k-block u with nu[u] > 0 gets a
// prefix-free code kappa_u over the fiber k-blocks v with mu[u|v] > 0, with
// Shannon lengths ceil(-log2 mu[u|v]). A name omega is encoded block by block
// as kappa_{alpha^i}(omega^i); the decoder replays the same scan with alpha as
// its oracle. The code rate upper-bounds the conditional complexity rate and
// is compared against the empirical cross entropy and the exact H^k / k.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fiberlab/actions.hpp"
#include "fiberlab/bits.hpp"
#include "fiberlab/driving.hpp"
#include "fiberlab/errors.hpp"
#include "fiberlab/fiber.hpp"
#include "fiberlab/probability.hpp"
#include "fiberlab/symbolic.hpp"

namespace fiberlab {

// Base-`base` value of a block, first letter most significant.
inline std::uint64_t block_index(std::span<const Letter> block, std::size_t base) {
  std::uint64_t idx = 0;
  for (Letter l : block) idx = idx * base + l;
  return idx;
}

inline void block_letters(std::uint64_t index, std::size_t base, std::span<Letter> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<Letter>(index % base);
    index /= base;
  }
}

using FiberCodebook = BinaryCodebook<std::uint64_t>;

// Per-context codebooks. mu[u|v] depends on u only through the coincidence
// pattern of the coordinates u visits, so contexts with equal patterns share
// one codebook.
class BlockCodebookFamily {
public:
  static constexpr std::uint32_t no_context = std::numeric_limits<std::uint32_t>::max();

  std::size_t k() const noexcept { return k_; }
  const FiberSystemSpec& fiber() const noexcept { return fiber_; }
  const MarkovChainSpec& driving() const noexcept { return driving_; }
  std::size_t context_count() const noexcept { return contexts_; }
  std::size_t pattern_count() const noexcept { return patterns_.size(); }
  const FiberEntropy& exact_entropy() const noexcept { return exact_; }

  // kappa_u, or nullptr when nu[u] = 0.
  const FiberCodebook* codebook(std::span<const Letter> u) const {
    if (u.size() != k_) throw std::invalid_argument("context block has wrong length");
    const auto slot = context_pattern_[block_index(u, driving_.size())];
    return slot == no_context ? nullptr : &patterns_[slot].code;
  }

  const FiberCodebook& codebook_at(std::span<const Letter> u) const {
    if (auto* c = codebook(u)) return *c;
    throw model_mismatch("driving block has zero probability");
  }

  // Calls f(u_index, codebook) for every context with nu[u] > 0.
  template <typename F>
  void for_each_context(F&& f) const {
    for (std::uint64_t i = 0; i < context_pattern_.size(); ++i)
      if (context_pattern_[i] != no_context) f(i, patterns_[context_pattern_[i]].code);
  }

  // Largest excess of a codeword length over -log2 mu[u|v], over all entries.
  double max_length_excess() const noexcept { return max_excess_; }

  friend BlockCodebookFamily build_codebooks(const FiberSystemSpec&, const MarkovChainSpec&, std::size_t);

private:
  struct PatternCode {
    CoincidencePattern pattern;
    FiberCodebook code;
  };

  BlockCodebookFamily(FiberSystemSpec fiber, MarkovChainSpec driving, std::size_t k)
      : fiber_(std::move(fiber)), driving_(std::move(driving)), k_(k) {}

  FiberSystemSpec fiber_;
  MarkovChainSpec driving_;
  std::size_t k_;
  std::vector<std::uint32_t> context_pattern_;
  std::vector<PatternCode> patterns_;
  std::size_t contexts_ = 0;
  FiberEntropy exact_;
  double max_excess_ = -std::numeric_limits<double>::infinity();
};

inline BlockCodebookFamily build_codebooks(const FiberSystemSpec& fiber, const MarkovChainSpec& driving, std::size_t k) {
  check_compatible(fiber, driving);
  if (k == 0) throw std::invalid_argument("block length must be positive");
  if (!bounded_power(driving.size() * fiber.size(), k, enumeration_cap))
    throw resource_limit("|Theta x Lambda|^k exceeds the enumeration cap of 2^24");

  BlockCodebookFamily fam(fiber, driving, k);
  fam.context_pattern_.assign(*bounded_power(driving.size(), k, enumeration_cap), BlockCodebookFamily::no_context);

  const std::size_t lambda = fiber.size();
  std::map<CoincidencePattern, std::uint32_t> known;
  double expected_distinct = 0.0;
  std::vector<Letter> v(k);

  for_each_supported_word(driving, fiber.action(), k, [&](const DrivingWordView& w) {
    expected_distinct += w.nu.value() * static_cast<double>(w.distinct);
    ++fam.contexts_;
    auto pattern = coincidence_pattern(w.coords);
    auto [it, inserted] = known.try_emplace(pattern, static_cast<std::uint32_t>(fam.patterns_.size()));
    fam.context_pattern_[w.index] = it->second;
    if (!inserted) return;

    // Consistent names are exactly the assignments of symbols to the
    // pattern's distinct coordinates.
    std::map<std::uint64_t, unsigned> lengths;
    std::vector<Letter> assignment(pattern.distinct);
    const std::uint64_t combos = *bounded_power(lambda, pattern.distinct, enumeration_cap);
    for (std::uint64_t a = 0; a < combos; ++a) {
      block_letters(a, lambda, assignment);
      for (std::size_t i = 0; i < k; ++i) v[i] = assignment[pattern.labels[i]];
      const LogProb mu = pattern_log_prob(pattern, v, fiber.p());
      const unsigned len = shannon_length(mu);
      fam.max_excess_ = std::max(fam.max_excess_, static_cast<double>(len) + mu.log2);
      lengths.emplace(block_index(v, lambda), len);
    }
    fam.patterns_.push_back({std::move(pattern), canonical_kraft_code(lengths)});
  });

  fam.exact_ = {k, expected_distinct * fiber.symbol_entropy(), expected_distinct * fiber.symbol_entropy() / static_cast<double>(k)};
  return fam;
}

struct EncodedStream {
  BitString bits;
  std::size_t n = 0;  // name length
  std::size_t k = 0;
  std::size_t m = 0;     // full blocks
  std::size_t tail = 0;  // raw-coded remainder symbols
  unsigned tail_symbol_bits = 0;

  std::size_t tail_bits() const noexcept { return tail * tail_symbol_bits; }
};

inline EncodedStream encode(const OrbitName& name, const BlockCodebookFamily& family) {
  if (name.driving.size() != name.letters.size()) throw std::invalid_argument("name and driving word differ in length");
  const std::size_t n = name.letters.size();
  const std::size_t k = family.k();
  EncodedStream s;
  s.n = n;
  s.k = k;
  s.m = n / k;
  s.tail = n - s.m * k;
  s.tail_symbol_bits = raw_symbol_bits(family.fiber().size());
  const std::span<const Letter> alpha(name.driving);
  const std::span<const Letter> omega(name.letters);
  for (std::size_t i = 0; i < s.m; ++i) {
    const auto& book = family.codebook_at(alpha.subspan(i * k, k));
    const auto* cw = book.find(block_index(omega.subspan(i * k, k), family.fiber().size()));
    if (!cw) throw model_mismatch("fiber block has zero conditional probability");
    s.bits.append(cw->bits, cw->length);
  }
  for (std::size_t i = s.m * k; i < n; ++i) s.bits.append(omega[i], s.tail_symbol_bits);
  return s;
}

// Replays the decoding machine: for each block, scan bits until they match a
// codeword of kappa_{alpha^i}, emit its block, continue; then the raw tail.
inline std::vector<Letter> decode(const EncodedStream& stream, std::span<const Letter> alpha,
                                  const BlockCodebookFamily& family) {
  if (alpha.size() != stream.n) throw std::invalid_argument("oracle driving word has the wrong length");
  if (stream.k != family.k()) throw std::invalid_argument("stream block length differs from the family");
  const std::size_t k = stream.k;
  const std::size_t lambda = family.fiber().size();
  std::vector<Letter> out(stream.n);
  BitReader in(stream.bits);
  for (std::size_t i = 0; i < stream.m; ++i) {
    const auto& book = family.codebook_at(alpha.subspan(i * k, k));
    block_letters(book.decode(in), lambda, std::span<Letter>(out).subspan(i * k, k));
  }
  for (std::size_t i = stream.m * k; i < stream.n; ++i) {
    const std::uint64_t sym = in.read_bits(stream.tail_symbol_bits);
    if (sym >= lambda) throw malformed_stream("raw tail symbol out of range");
    out[i] = static_cast<Letter>(sym);
  }
  if (in.remaining() != 0) throw malformed_stream("trailing bits after the last symbol");
  return out;
}

// ---------------------------------------------------------------------------
// Pair frequencies and cross entropies

enum class Stride { block, slide };

struct BlockPair {
  std::vector<Letter> u;
  std::vector<Letter> v;
  friend auto operator<=>(const BlockPair&, const BlockPair&) = default;
};

struct PairCounts {
  std::map<BlockPair, std::uint64_t> counts;
  std::uint64_t total = 0;

  std::map<BlockPair, double> frequencies() const {
    std::map<BlockPair, double> f;
    for (const auto& [pair, c] : counts) f.emplace(pair, static_cast<double>(c) / static_cast<double>(total));
    return f;
  }
};

// Counts of (alpha-window, omega-window) pairs over the first m scans of a
// length-k window moving by k (block) or by 1 (slide).
inline PairCounts pair_counts(std::span<const Letter> alpha, std::span<const Letter> omega, std::size_t k, Stride stride,
                              std::size_t m) {
  if (alpha.size() != omega.size()) throw std::invalid_argument("driving and fiber sequences differ in length");
  if (k == 0) throw std::invalid_argument("block length must be positive");
  const std::size_t step = stride == Stride::block ? k : 1;
  if (m > 0 && (m - 1) * step + k > alpha.size()) throw std::invalid_argument("horizon too short for m scans");
  PairCounts pc;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t off = i * step;
    BlockPair key{{alpha.begin() + off, alpha.begin() + off + k}, {omega.begin() + off, omega.begin() + off + k}};
    ++pc.counts[std::move(key)];
  }
  pc.total = m;
  return pc;
}

inline std::map<BlockPair, double> pair_frequencies(std::span<const Letter> alpha, std::span<const Letter> omega,
                                                    std::size_t k, Stride stride, std::size_t m) {
  return pair_counts(alpha, omega, k, stride, m).frequencies();
}

// -sum a(u,v) log2 mu[u|v] in bits per block.
inline double empirical_cross_entropy(const std::map<BlockPair, double>& frequencies, const FiberSystemSpec& fiber,
                                      const MarkovChainSpec& driving, std::size_t k) {
  check_compatible(fiber, driving);
  double h = 0.0;
  for (const auto& [pair, a] : frequencies) {
    if (pair.u.size() != k || pair.v.size() != k) throw std::invalid_argument("pair has wrong block length");
    if (cylinder_log_prob(driving, pair.u).zero) throw model_mismatch("observed driving block has zero probability");
    const LogProb mu = conditional_cylinder_prob(fiber, pair.u, pair.v);
    if (mu.zero) throw model_mismatch("observed pair has zero conditional probability");
    h -= a * mu.log2;
  }
  return h;
}

// nu[u] mu[u|v] for every pair of positive probability.
inline std::map<BlockPair, double> exact_pair_probabilities(const FiberSystemSpec& fiber, const MarkovChainSpec& driving,
                                                            std::size_t k) {
  check_compatible(fiber, driving);
  const auto fiber_words = bounded_power(fiber.size(), k, enumeration_cap);
  if (!fiber_words || !bounded_power(driving.size() * fiber.size(), k, enumeration_cap))
    throw resource_limit("|Theta x Lambda|^k exceeds the enumeration cap of 2^24");
  std::map<BlockPair, double> out;
  std::vector<Letter> v(k);
  for_each_supported_word(driving, fiber.action(), k, [&](const DrivingWordView& w) {
    const auto pattern = coincidence_pattern(w.coords);
    for (std::uint64_t idx = 0; idx < *fiber_words; ++idx) {
      block_letters(idx, fiber.size(), v);
      const LogProb mu = pattern_log_prob(pattern, v, fiber.p());
      if (!mu.zero) out.emplace(BlockPair{{w.letters.begin(), w.letters.end()}, v}, (w.nu * mu).value());
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Estimator runs

struct EstimatorReport {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t m = 0;
  std::uint64_t code_bits = 0;
  std::uint64_t tail_bits = 0;
  double code_rate = 0.0;                       // encoded bits / n
  std::optional<double> cross_entropy_rate;     // H-hat_m^k / k
  std::optional<double> exact_rate;             // H^k / k
  std::vector<double> phase_cross_entropy_rates;  // H-hat^k / k on S^r(alpha, beta), r < k
  double information_rate = 0.0;                // J^n / n

  double coding_bound = 0.0;  // (m H-hat + m + tail bits) / n
  bool coding_bound_holds = true;
  double undershoot_bound = 0.0;  // J^n / n - 2 log2(n) / n
  bool no_undershoot = true;
  bool no_undershoot_asserted = false;  // only from n >= 1000 on

  double code_gap() const { return exact_rate ? code_rate - *exact_rate : std::numeric_limits<double>::quiet_NaN(); }
  double estimate_gap() const {
    return exact_rate && cross_entropy_rate ? *cross_entropy_rate - *exact_rate : std::numeric_limits<double>::quiet_NaN();
  }
  bool checks_pass() const { return coding_bound_holds && (!no_undershoot_asserted || no_undershoot); }
};

inline constexpr std::size_t undershoot_assert_horizon = 1000;

inline EstimatorReport conditional_rate(const OrbitName& name, const BlockCodebookFamily& family) {
  const EncodedStream stream = encode(name, family);
  const std::span<const Letter> alpha(name.driving);
  const std::span<const Letter> omega(name.letters);
  const std::size_t n = stream.n;
  const std::size_t k = stream.k;

  EstimatorReport r;
  r.n = n;
  r.k = k;
  r.m = stream.m;
  r.code_bits = stream.bits.size();
  r.tail_bits = stream.tail_bits();
  r.exact_rate = family.exact_entropy().per_symbol;
  if (n == 0) return r;

  const double dn = static_cast<double>(n);
  r.code_rate = static_cast<double>(r.code_bits) / dn;

  double hhat = 0.0;
  if (r.m > 0) {
    hhat = empirical_cross_entropy(pair_frequencies(alpha, omega, k, Stride::block, r.m), family.fiber(),
                                   family.driving(), k);
    r.cross_entropy_rate = hhat / static_cast<double>(k);
  }
  for (std::size_t shift = 0; shift < k && shift < n; ++shift) {
    const std::size_t blocks = (n - shift) / k;
    if (blocks == 0) break;
    const auto freqs = pair_frequencies(alpha.subspan(shift), omega.subspan(shift), k, Stride::block, blocks);
    r.phase_cross_entropy_rates.push_back(
        empirical_cross_entropy(freqs, family.fiber(), family.driving(), k) / static_cast<double>(k));
  }

  r.information_rate = information_function(family.fiber(), alpha, omega) / dn;

  const double m = static_cast<double>(r.m);
  r.coding_bound = (m * hhat + m + static_cast<double>(r.tail_bits)) / dn;
  r.coding_bound_holds = r.code_rate <= r.coding_bound + 1e-9;
  r.undershoot_bound = r.information_rate - 2.0 * std::log2(dn) / dn;
  r.no_undershoot = r.code_rate >= r.undershoot_bound - 1e-12;
  r.no_undershoot_asserted = n >= undershoot_assert_horizon;
  return r;
}

// Sum of Shannon lengths ceil(-log2 mu[u|v]) over the full blocks plus the
// raw tail: the bit length encode() produces, without materializing codebooks.
inline std::uint64_t shannon_conditional_bits(const FiberSystemSpec& fiber, std::span<const Letter> alpha,
                                              std::span<const Letter> omega, std::size_t k) {
  if (alpha.size() != omega.size()) throw std::invalid_argument("driving and fiber sequences differ in length");
  if (k == 0) throw std::invalid_argument("block length must be positive");
  const std::size_t m = alpha.size() / k;
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const LogProb mu = conditional_cylinder_prob(fiber, alpha.subspan(i * k, k), omega.subspan(i * k, k));
    if (mu.zero) throw model_mismatch("fiber block has zero conditional probability");
    bits += shannon_length(mu);
  }
  return bits + static_cast<std::uint64_t>(alpha.size() - m * k) * raw_symbol_bits(fiber.size());
}

struct ArReport {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t joint_bits = 0;
  std::uint64_t plain_bits = 0;
  std::uint64_t conditional_bits = 0;
  double joint_rate = 0.0;
  double plain_rate = 0.0;
  double conditional_rate = 0.0;
  double residual = 0.0;  // joint - plain - conditional
};

// Three block-code rates on one sampled run: the pair sequence (alpha, omega)
// with lengths ceil(-log2(nu[u] mu[u|v])), alpha alone, and omega given alpha.
inline ArReport ar_decomposition_check(const MarkovChainSpec& driving, const FiberSystemSpec& fiber, std::size_t n,
                                       std::size_t k, std::uint64_t seed,
                                       BlockContext context = BlockContext::previous_symbol) {
  check_compatible(fiber, driving);
  if (k == 0) throw std::invalid_argument("block length must be positive");
  ArReport r;
  r.seed = seed;
  r.n = n;
  r.k = k;
  if (n == 0) return r;

  const RunSeeds rs = run_seeds(seed);
  const auto trajectory = sample_trajectory(driving, n, rs.driving);
  const OrbitName name = emit_name(fiber, trajectory.letters, rs.fiber);
  const std::span<const Letter> alpha(name.driving);
  const std::span<const Letter> omega(name.letters);

  r.plain_bits = block_code_length(driving, alpha, k, context);
  r.conditional_bits = shannon_conditional_bits(fiber, alpha, omega, k);

  const std::size_t m = n / k;
  for (std::size_t i = 0; i < m; ++i) {
    const LogProb nu = block_model_prob(driving, alpha, i * k, k, context);
    const LogProb mu = conditional_cylinder_prob(fiber, alpha.subspan(i * k, k), omega.subspan(i * k, k));
    if (nu.zero || mu.zero) throw model_mismatch("joint block has zero probability");
    r.joint_bits += shannon_length(nu * mu);
  }
  r.joint_bits += static_cast<std::uint64_t>(n - m * k) * raw_symbol_bits(driving.size() * fiber.size());

  const double dn = static_cast<double>(n);
  r.joint_rate = static_cast<double>(r.joint_bits) / dn;
  r.plain_rate = static_cast<double>(r.plain_bits) / dn;
  r.conditional_rate = static_cast<double>(r.conditional_bits) / dn;
  r.residual = (static_cast<double>(r.joint_bits) - static_cast<double>(r.plain_bits) -
                static_cast<double>(r.conditional_bits)) / dn;
  return r;
}

// ---------------------------------------------------------------------------
// Model-free cross-check

struct TwoPassRate {
  std::uint64_t header_bits = 0;
  std::uint64_t payload_bits = 0;
  double rate = 0.0;
};

inline std::uint64_t elias_gamma_length(std::uint64_t x) {
  if (x == 0) throw std::invalid_argument("Elias gamma codes positive integers");
  unsigned floor_log = 0;
  while ((x >> (floor_log + 1)) != 0) ++floor_log;
  return 2u * floor_log + 1u;
}

// Two-pass code that learns the block-pair counts from the data itself. The
// header lists every observed (u, v) with its count; the payload codes, per
// context u, the order of that context's fiber blocks by its rank among all
// arrangements with the same counts (enumerative coding). Nothing is shared
// with the decoder except the alphabet sizes and k.
inline TwoPassRate two_pass_conditional_rate(std::span<const Letter> alpha, std::span<const Letter> omega, std::size_t k,
                                             std::size_t driving_size, std::size_t fiber_size) {
  if (k == 0) throw std::invalid_argument("block length must be positive");
  TwoPassRate out;
  const std::size_t n = alpha.size();
  if (n == 0) return out;
  const std::size_t m = n / k;
  const auto counts = pair_counts(alpha, omega, k, Stride::block, m);

  const std::uint64_t pair_bits = k * (raw_symbol_bits(driving_size) + raw_symbol_bits(fiber_size));
  out.header_bits = elias_gamma_length(counts.counts.size() + 1);
  std::map<std::vector<Letter>, std::vector<std::uint64_t>> by_context;
  for (const auto& [pair, c] : counts.counts) {
    out.header_bits += pair_bits + elias_gamma_length(c);
    by_context[pair.u].push_back(c);
  }

  for (const auto& [u, cs] : by_context) {
    std::uint64_t total = 0;
    double log_arrangements = 0.0;  // natural log of the multinomial coefficient
    for (std::uint64_t c : cs) {
      total += c;
      log_arrangements -= std::lgamma(static_cast<double>(c) + 1.0);
    }
    log_arrangements += std::lgamma(static_cast<double>(total) + 1.0);
    out.payload_bits += static_cast<std::uint64_t>(std::ceil(log_arrangements / std::log(2.0) - shannon_length_slack));
  }
  out.payload_bits += static_cast<std::uint64_t>(n - m * k) * raw_symbol_bits(fiber_size);
  out.rate = static_cast<double>(out.header_bits + out.payload_bits) / static_cast<double>(n);
  return out;
}

}  // namespace fiberlab
