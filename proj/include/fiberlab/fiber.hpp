#pragma once

// The random shift over a product (Bernoulli) configuration measure: lazily
// realized configurations, orbit names, conditional cylinder measures
// mu[u|v], information functions and exact averaged fiber entropies.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "fiberlab/actions.hpp"
#include "fiberlab/driving.hpp"
#include "fiberlab/errors.hpp"
#include "fiberlab/probability.hpp"
#include "fiberlab/random.hpp"
#include "fiberlab/symbolic.hpp"

namespace fiberlab {

inline constexpr std::uint64_t enumeration_cap = std::uint64_t{1} << 24;

// Largest driving alphabet an action accepts; group actions fix it at 4.
inline std::size_t action_driving_size(ActionKind kind) {
  return kind == ActionKind::free_monoid ? max_alphabet_size : 4;
}

// base^exponent, or nullopt past `cap`.
inline std::optional<std::uint64_t> bounded_power(std::uint64_t base, std::size_t exponent, std::uint64_t cap) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (base != 0 && r > cap / base) return std::nullopt;
    r *= base;
  }
  if (r > cap) return std::nullopt;
  return r;
}

class FiberSystemSpec {
public:
  FiberSystemSpec(ActionKind action, AlphabetPtr alphabet, std::vector<double> p)
      : action_(action), alphabet_(std::move(alphabet)), p_(std::move(p)) {
    if (p_.size() != alphabet_->size()) throw std::invalid_argument("p has wrong dimension");
    if (!is_probability_vector(p_, spec_tolerance)) throw std::invalid_argument("p is not a probability vector");
    for (double x : p_)
      if (!(x > 0.0)) throw std::invalid_argument("zero-probability fiber symbols must be removed from the alphabet");
  }

  static FiberSystemSpec uniform(ActionKind action, AlphabetPtr alphabet) {
    const std::size_t s = alphabet->size();
    return FiberSystemSpec(action, std::move(alphabet), std::vector<double>(s, 1.0 / static_cast<double>(s)));
  }

  ActionKind action() const noexcept { return action_; }
  const Alphabet& alphabet() const noexcept { return *alphabet_; }
  const AlphabetPtr& alphabet_ptr() const noexcept { return alphabet_; }
  std::size_t size() const noexcept { return alphabet_->size(); }
  const std::vector<double>& p() const noexcept { return p_; }

  // H(p), the entropy of the natural partition.
  double symbol_entropy() const { return shannon_entropy(p_); }

private:
  ActionKind action_;
  AlphabetPtr alphabet_;
  std::vector<double> p_;
};

inline void check_compatible(const FiberSystemSpec& fiber, const MarkovChainSpec& driving) {
  check_driving_size(fiber.action(), driving.size());
}

// A configuration beta drawn lazily: each coordinate receives its symbol on
// first visit, as a function of (seed, canonical coordinate) only. Not safe to
// share across threads.
class SampledConfiguration {
public:
  SampledConfiguration(FiberSystemSpec spec, std::uint64_t seed)
      : spec_(std::move(spec)), seed_(seed), space_(spec_.action(), action_driving_size(spec_.action())) {}

  const FiberSystemSpec& spec() const noexcept { return spec_; }
  std::uint64_t seed() const noexcept { return seed_; }
  CoordinateSpace& space() noexcept { return space_; }

  bool assigned(CoordinateId id) const { return id < symbols_.size() && symbols_[id] >= 0; }

  Letter symbol_at(CoordinateId id) {
    if (symbols_.size() <= id) symbols_.resize(space_.size(), -1);
    if (symbols_[id] < 0) {
      const double u = unit_interval(splitmix64(splitmix64(space_.key(id)) ^ seed_));
      symbols_[id] = static_cast<std::int16_t>(inverse_cdf(spec_.p(), u));
    }
    return static_cast<Letter>(symbols_[id]);
  }

private:
  FiberSystemSpec spec_;
  std::uint64_t seed_;
  CoordinateSpace space_;
  std::vector<std::int16_t> symbols_;
};

// omega_i = beta at the coordinate reached after alpha_0 ... alpha_{i-1}.
struct OrbitName {
  std::vector<Letter> driving;
  std::vector<Letter> letters;
};

inline OrbitName emit_name(SampledConfiguration& config, std::span<const Letter> alpha) {
  OrbitName name{{alpha.begin(), alpha.end()}, {}};
  name.letters.reserve(alpha.size());
  auto& space = config.space();
  CoordinateId cur = CoordinateSpace::identity();
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (i > 0) cur = space.step(cur, alpha[i - 1]);
    name.letters.push_back(config.symbol_at(cur));
  }
  return name;
}

inline OrbitName emit_name(const FiberSystemSpec& spec, std::span<const Letter> alpha, std::uint64_t seed) {
  SampledConfiguration config(spec, seed);
  return emit_name(config, alpha);
}

// mu of the fiber names consistent with a coincidence pattern; null if a
// repeated coordinate is asked to carry two different symbols.
inline LogProb pattern_log_prob(const CoincidencePattern& pattern, std::span<const Letter> v, std::span<const double> p) {
  std::vector<std::int16_t> assigned(pattern.distinct, -1);
  LogProb prob = LogProb::one();
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto& slot = assigned[pattern.labels[i]];
    if (slot < 0) {
      slot = v[i];
      prob *= LogProb::of(p[v[i]]);
    } else if (slot != v[i]) {
      return LogProb::null();
    }
  }
  return prob;
}

inline LogProb conditional_cylinder_prob(const FiberSystemSpec& spec, std::span<const Letter> u, std::span<const Letter> v) {
  if (u.size() != v.size()) throw std::invalid_argument("driving and fiber words differ in length");
  for (Letter l : v)
    if (l >= spec.size()) throw std::invalid_argument("fiber letter out of range");
  return pattern_log_prob(coincidence_pattern(spec.action(), u, action_driving_size(spec.action())), v, spec.p());
}

inline LogProb conditional_cylinder_prob(const FiberSystemSpec& spec, const Word& u, const Word& v) {
  if (!(v.alphabet() == spec.alphabet())) throw std::invalid_argument("fiber word over a foreign alphabet");
  check_driving_size(spec.action(), u.alphabet().size());
  return conditional_cylinder_prob(spec, u.letters(), v.letters());
}

// J^n = -log2 mu[alpha|omega] in bits.
inline double information_function(const FiberSystemSpec& spec, std::span<const Letter> alpha, std::span<const Letter> omega) {
  const LogProb p = conditional_cylinder_prob(spec, alpha, omega);
  if (p.zero) throw infinite_information("name is inconsistent with the driving word");
  return p.information();
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration of driving words

struct DrivingWordView {
  std::span<const Letter> letters;
  LogProb nu;
  std::uint64_t index;                  // base-|Theta| value, first letter most significant
  std::span<const CoordinateId> coords;  // c_0 ... c_{n-1}
  std::size_t distinct;
};

// Calls `visit` for every driving word of length n with nu[u] > 0, in index
// order, carrying the coordinates it visits under `kind`.
template <typename Visitor>
void for_each_supported_word(const MarkovChainSpec& driving, ActionKind kind, std::size_t n, Visitor&& visit) {
  check_driving_size(kind, driving.size());
  if (!bounded_power(driving.size(), n, enumeration_cap))
    throw resource_limit("|Theta|^n exceeds the enumeration cap of 2^24");

  const std::size_t s = driving.size();
  const bool track = kind != ActionKind::free_monoid;
  CoordinateSpace space(kind, track ? s : 1);
  std::vector<Letter> letters(n);
  std::vector<CoordinateId> coords(n);
  std::vector<std::uint32_t> visits;

  auto recurse = [&](auto& self, std::size_t depth, LogProb nu, std::uint64_t index, std::size_t distinct) -> void {
    if (depth == n) {
      visit(DrivingWordView{letters, nu, index, coords, distinct});
      return;
    }
    CoordinateId c = static_cast<CoordinateId>(depth);
    bool fresh = true;
    if (track) {
      c = depth == 0 ? CoordinateSpace::identity() : space.step(coords[depth - 1], letters[depth - 1]);
      if (visits.size() <= c) visits.resize(space.size(), 0);
      fresh = visits[c]++ == 0;
    }
    coords[depth] = c;
    for (std::size_t t = 0; t < s; ++t) {
      const double p = depth == 0 ? driving.pi(static_cast<Letter>(t))
                                  : driving.transition(letters[depth - 1], static_cast<Letter>(t));
      if (p == 0.0) continue;
      letters[depth] = static_cast<Letter>(t);
      self(self, depth + 1, nu * LogProb::of(p), index * s + t, distinct + (fresh ? 1 : 0));
    }
    if (track) --visits[c];
  };
  recurse(recurse, 0, LogProb::one(), 0, 0);
}

enum class EntropyMethod {
  distinct_count,    // inner sum collapses to distinct(u) * H(p) for product measures
  full_enumeration,  // explicit double sum over (u, v)
};

struct FiberEntropy {
  std::size_t n = 0;
  double total_bits = 0.0;  // H^n
  double per_symbol = 0.0;  // H^n / n
};

// H^n = -sum_u nu[u] sum_v mu[u|v] log2 mu[u|v].
inline FiberEntropy exact_averaged_entropy(const FiberSystemSpec& fiber, const MarkovChainSpec& driving, std::size_t n,
                                           EntropyMethod method = EntropyMethod::distinct_count) {
  check_compatible(fiber, driving);
  FiberEntropy out{n, 0.0, 0.0};
  if (n == 0) return out;

  if (method == EntropyMethod::distinct_count) {
    double expected_distinct = 0.0;
    for_each_supported_word(driving, fiber.action(), n, [&](const DrivingWordView& w) {
      expected_distinct += w.nu.value() * static_cast<double>(w.distinct);
    });
    out.total_bits = expected_distinct * fiber.symbol_entropy();
  } else {
    const auto fiber_words = bounded_power(fiber.size(), n, enumeration_cap);
    const auto pairs = bounded_power(driving.size() * fiber.size(), n, enumeration_cap);
    if (!fiber_words || !pairs) throw resource_limit("|Theta x Lambda|^n exceeds the enumeration cap of 2^24");
    std::vector<Letter> v(n);
    for_each_supported_word(driving, fiber.action(), n, [&](const DrivingWordView& w) {
      const auto pattern = coincidence_pattern(w.coords);
      double inner = 0.0;
      for (std::uint64_t idx = 0; idx < *fiber_words; ++idx) {
        std::uint64_t rest = idx;
        for (std::size_t i = n; i-- > 0;) {
          v[i] = static_cast<Letter>(rest % fiber.size());
          rest /= fiber.size();
        }
        const LogProb mu = pattern_log_prob(pattern, v, fiber.p());
        if (!mu.zero) inner -= mu.value() * mu.log2;
      }
      out.total_bits += w.nu.value() * inner;
    });
  }
  out.per_symbol = out.total_bits / static_cast<double>(n);
  return out;
}

// ---------------------------------------------------------------------------
// Random Shannon-McMillan-Breiman check

struct SmbRow {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double information = 0.0;  // J^n in bits
  double information_rate = 0.0;  // J^n / n
  double exact_h = std::numeric_limits<double>::quiet_NaN();  // H^n / n when enumerable
};

// Exact curve entries are computed when |Theta|^n stays within this budget.
inline constexpr std::uint64_t smb_exact_budget = std::uint64_t{1} << 20;

inline std::vector<SmbRow> smb_convergence(const FiberSystemSpec& fiber, const MarkovChainSpec& driving, std::size_t n,
                                           std::span<const std::uint64_t> seeds) {
  check_compatible(fiber, driving);
  const auto checkpoints = log_checkpoints(n);
  std::vector<double> exact(checkpoints.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < checkpoints.size(); ++j)
    if (bounded_power(driving.size(), checkpoints[j], smb_exact_budget))
      exact[j] = exact_averaged_entropy(fiber, driving, checkpoints[j]).per_symbol;

  std::vector<SmbRow> rows;
  for (std::uint64_t seed : seeds) {
    const RunSeeds rs = run_seeds(seed);
    const auto alpha = sample_trajectory(driving, n, rs.driving);
    SampledConfiguration config(fiber, rs.fiber);
    auto& space = config.space();
    std::vector<bool> seen;
    double info = 0.0;
    std::size_t next = 0;
    CoordinateId cur = CoordinateSpace::identity();
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) cur = space.step(cur, alpha.letters[i - 1]);
      if (seen.size() <= cur) seen.resize(space.size(), false);
      if (!seen[cur]) {
        seen[cur] = true;
        info -= std::log2(fiber.p()[config.symbol_at(cur)]);
      }
      if (i + 1 == checkpoints[next]) {
        rows.push_back({seed, i + 1, info, info / static_cast<double>(i + 1), exact[next]});
        ++next;
      }
    }
  }
  return rows;
}

}  // namespace fiberlab
