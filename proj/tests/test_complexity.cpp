#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <random>

#include "fiberlab/complexity.hpp"
#include "oracles.hpp"

using namespace fiberlab;

namespace {

AlphabetPtr bin() { return make_alphabet({"0", "1"}); }

struct System {
  FiberSystemSpec fiber;
  MarkovChainSpec driving;
};

System free_monoid_uniform() {
  return {FiberSystemSpec::uniform(ActionKind::free_monoid, bin()), binary_uniform_driving()};
}
System z2_uniform() { return {FiberSystemSpec::uniform(ActionKind::z2, bin()), z2_uniform_driving()}; }
System f2_markov() { return {FiberSystemSpec::uniform(ActionKind::f2, bin()), f2_markov_driving()}; }

OrbitName sample_name(const System& s, std::size_t n, std::uint64_t seed) {
  const auto rs = run_seeds(seed);
  const auto t = sample_trajectory(s.driving, n, rs.driving);
  return emit_name(s.fiber, t.letters, rs.fiber);
}

// kappa_u for a block given as letters
const FiberCodebook& book_for(const BlockCodebookFamily& fam, std::vector<Letter> u) { return fam.codebook_at(u); }

}  // namespace

TEST(BuildCodebooks, FreeMonoidUniformBlocksHaveLengthK) {
  const auto s = free_monoid_uniform();
  const auto fam = build_codebooks(s.fiber, s.driving, 3);
  EXPECT_EQ(fam.context_count(), 8u);
  EXPECT_EQ(fam.pattern_count(), 1u);
  fam.for_each_context([](std::uint64_t, const FiberCodebook& book) {
    EXPECT_EQ(book.entries().size(), 8u);
    for (const auto& [block, cw] : book.entries()) EXPECT_EQ(cw.length, 3u);
  });
}

TEST(BuildCodebooks, Z2BacktrackContextHasFourNames) {
  const auto s = z2_uniform();
  const auto fam = build_codebooks(s.fiber, s.driving, 3);
  const auto& book = book_for(fam, {0, 1, 0});
  ASSERT_EQ(book.entries().size(), 4u);
  for (const auto& [block, cw] : book.entries()) EXPECT_EQ(cw.length, 2u);
  // v = (0,1,1) puts two symbols on the origin
  EXPECT_EQ(book.find(block_index(std::vector<Letter>{0, 1, 1}, 2)), nullptr);
  EXPECT_NE(book.find(block_index(std::vector<Letter>{0, 1, 0}, 2)), nullptr);
}

TEST(BuildCodebooks, ShannonLengthsFromP) {
  const FiberSystemSpec fiber(ActionKind::free_monoid, make_alphabet({"x", "y", "z"}), {0.5, 0.25, 0.25});
  const auto fam = build_codebooks(fiber, binary_uniform_driving(), 1);
  const auto& book = book_for(fam, {0});
  EXPECT_EQ(book.at(0).length, 1u);
  EXPECT_EQ(book.at(1).length, 2u);
  EXPECT_EQ(book.at(2).length, 2u);
}

TEST(BuildCodebooks, NullContextsHaveNoCodebook) {
  const auto s = f2_markov();
  const auto fam = build_codebooks(s.fiber, s.driving, 2);
  EXPECT_EQ(fam.codebook(std::vector<Letter>{0, 1}), nullptr);
  EXPECT_NE(fam.codebook(std::vector<Letter>{0, 2}), nullptr);
  EXPECT_EQ(fam.context_count(), 12u);
  EXPECT_THROW(fam.codebook_at(std::vector<Letter>{0, 1}), model_mismatch);
}

TEST(BuildCodebooks, CapIsResourceLimit) {
  const auto s = z2_uniform();
  EXPECT_THROW(build_codebooks(s.fiber, s.driving, 9), resource_limit);
  EXPECT_THROW(build_codebooks(s.fiber, s.driving, 0), std::invalid_argument);
}

// Prefix freeness, exact Kraft sums and the length bound, for every context
// of every family with k <= 6.
TEST(BuildCodebooks, EveryCodebookIsAValidShannonCode) {
  const std::vector<System> systems{
      free_monoid_uniform(), z2_uniform(), f2_markov(),
      {FiberSystemSpec(ActionKind::z2, bin(), {0.7, 0.3}), z2_uniform_driving()},
      {FiberSystemSpec(ActionKind::f2, make_alphabet({"x", "y", "z"}), {0.6, 0.3, 0.1}), f2_markov_driving()},
  };
  auto bits = bin();
  for (const auto& s : systems) {
    for (std::size_t k = 1; k <= 6; ++k) {
      if (!bounded_power(s.driving.size() * s.fiber.size(), k, std::uint64_t{1} << 18)) continue;
      const auto fam = build_codebooks(s.fiber, s.driving, k);
      EXPECT_LT(fam.max_length_excess(), 1.0 + 1e-9);
      EXPECT_GE(fam.max_length_excess(), 0.0);
      std::vector<Letter> u(k), v(k);
      fam.for_each_context([&](std::uint64_t ui, const FiberCodebook& book) {
        EXPECT_LE(book.kraft_numerator(), kraft_unit);
        std::vector<Word> words;
        for (const auto& [vi, cw] : book.entries()) words.push_back(Word::parse(bits, cw.to_string()));
        EXPECT_TRUE(is_prefix_free(words));
        block_letters(ui, s.driving.size(), u);
        for (const auto& [vi, cw] : book.entries()) {
          block_letters(vi, s.fiber.size(), v);
          const double info = conditional_cylinder_prob(s.fiber, u, v).information();
          EXPECT_GE(static_cast<double>(cw.length), info - 1e-9);
          EXPECT_LT(static_cast<double>(cw.length), info + 1.0 + 1e-9);
        }
      });
    }
  }
}

TEST(Encode, Examples) {
  const auto s = free_monoid_uniform();
  const auto fam = build_codebooks(s.fiber, s.driving, 4);
  const auto empty = encode(OrbitName{}, fam);
  EXPECT_EQ(empty.bits.size(), 0u);
  EXPECT_TRUE(decode(empty, std::span<const Letter>{}, fam).empty());

  const auto name = sample_name(s, 4 * 250, 3);
  EXPECT_EQ(encode(name, fam).bits.size(), 1000u);
}

TEST(Encode, ZeroProbabilityBlockIsModelMismatch) {
  const auto s = z2_uniform();
  const auto fam = build_codebooks(s.fiber, s.driving, 3);
  EXPECT_THROW(encode(OrbitName{{0, 1, 0}, {0, 1, 1}}, fam), model_mismatch);
  const auto f = f2_markov();
  const auto ffam = build_codebooks(f.fiber, f.driving, 2);
  EXPECT_THROW(encode(OrbitName{{0, 1}, {0, 0}}, ffam), model_mismatch);
}

TEST(Decode, TruncationAndTrailingBitsAreMalformed) {
  const auto s = z2_uniform();
  const auto fam = build_codebooks(s.fiber, s.driving, 4);
  for (std::size_t n : {400u, 403u}) {
    const auto name = sample_name(s, n, 12);
    auto stream = encode(name, fam);
    ASSERT_EQ(decode(stream, name.driving, fam), name.letters);

    auto cut = stream;
    cut.bits = stream.bits.prefix(stream.bits.size() - 1);
    EXPECT_THROW(decode(cut, name.driving, fam), malformed_stream);

    auto extra = stream;
    extra.bits.push_back(false);
    EXPECT_THROW(decode(extra, name.driving, fam), malformed_stream);
  }
  const auto name = sample_name(s, 40, 1);
  EXPECT_THROW(decode(encode(name, fam), std::span<const Letter>(name.driving).first(39), fam), std::invalid_argument);
}

TEST(Decode, OutOfRangeTailSymbolIsMalformed) {
  const FiberSystemSpec fiber(ActionKind::free_monoid, make_alphabet({"x", "y", "z"}), {0.5, 0.25, 0.25});
  const auto fam = build_codebooks(fiber, binary_uniform_driving(), 2);
  EncodedStream s;
  s.n = 1;
  s.k = 2;
  s.tail = 1;
  s.tail_symbol_bits = 2;
  s.bits.append(3, 2);
  const std::vector<Letter> alpha{0};
  EXPECT_THROW(decode(s, alpha, fam), malformed_stream);
}

// Round trip on 10^3 random (system, k, n, seed) instances.
TEST(Decode, RoundTripOnRandomInstances) {
  const std::vector<System> systems{
      free_monoid_uniform(), z2_uniform(), f2_markov(),
      {FiberSystemSpec(ActionKind::z2, bin(), {0.7, 0.3}), z2_uniform_driving()},
      {FiberSystemSpec(ActionKind::free_monoid, make_alphabet({"x", "y", "z"}), {0.2, 0.3, 0.5}), binary_uniform_driving()},
  };
  std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<BlockCodebookFamily>> cache;
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t si = rng() % systems.size();
    const std::size_t k = 1 + rng() % 6;
    const std::size_t n = rng() % 2000;
    auto& fam = cache[{si, k}];
    if (!fam) fam = std::make_unique<BlockCodebookFamily>(build_codebooks(systems[si].fiber, systems[si].driving, k));
    const auto name = sample_name(systems[si], n, rng());
    const auto stream = encode(name, *fam);
    EXPECT_EQ(decode(stream, name.driving, *fam), name.letters);
    EXPECT_EQ(stream.bits.size(), shannon_conditional_bits(systems[si].fiber, name.driving, name.letters, k));
  }
}

TEST(PairFrequencies, ConstantSequencesGiveOnePair) {
  const std::vector<Letter> alpha(60, 1), omega(60, 0);
  for (std::size_t k : {1u, 3u, 5u}) {
    const auto f = pair_frequencies(alpha, omega, k, Stride::block, 60 / k);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f.begin()->second, 1.0);
    EXPECT_EQ(f.begin()->first.u, std::vector<Letter>(k, 1));
  }
  EXPECT_THROW(pair_counts(alpha, omega, 7, Stride::block, 9), std::invalid_argument);
  EXPECT_THROW(pair_counts(alpha, omega, 7, Stride::slide, 55), std::invalid_argument);
  EXPECT_NO_THROW(pair_counts(alpha, omega, 7, Stride::slide, 54));
}

TEST(PairFrequencies, FrequenciesSumToOne) {
  const auto s = z2_uniform();
  const auto name = sample_name(s, 5000, 2);
  for (auto stride : {Stride::block, Stride::slide}) {
    double total = 0;
    for (const auto& [p, f] : pair_frequencies(name.driving, name.letters, 3, stride, 1000)) total += f;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

// a_{1,mk} = (1/k) sum_r a_{k,m} o S^r, checked on counts: the sliding count
// over mk windows equals the sum of the k phase-shifted block counts.
TEST(PairFrequencies, ShiftAveragingIdentityOnCounts) {
  std::mt19937_64 rng(91);
  const std::vector<System> systems{free_monoid_uniform(), z2_uniform(), f2_markov()};
  for (int trial = 0; trial < 60; ++trial) {
    const auto& s = systems[trial % 3];
    const std::size_t k = 1 + rng() % 6;
    const std::size_t m = 1 + rng() % 2000;
    const auto name = sample_name(s, m * k + k - 1, rng());
    const std::span<const Letter> alpha(name.driving), omega(name.letters);
    const auto sliding = pair_counts(alpha, omega, k, Stride::slide, m * k);
    std::map<BlockPair, std::uint64_t> summed;
    for (std::size_t r = 0; r < k; ++r)
      for (const auto& [p, c] : pair_counts(alpha.subspan(r), omega.subspan(r), k, Stride::block, m).counts) summed[p] += c;
    EXPECT_EQ(sliding.counts, summed);
    EXPECT_EQ(sliding.total, m * k);
  }
}

TEST(PairFrequencies, ConvergeToPairProbabilities) {
  const auto s = free_monoid_uniform();
  const std::size_t m = 100000;
  const auto name = sample_name(s, 2 * m, 5);
  const auto f = pair_frequencies(name.driving, name.letters, 2, Stride::block, m);
  const auto exact = exact_pair_probabilities(s.fiber, s.driving, 2);
  ASSERT_EQ(exact.size(), 16u);
  for (const auto& [p, prob] : exact) {
    EXPECT_DOUBLE_EQ(prob, 1.0 / 16.0);
    const double se = std::sqrt(prob * (1 - prob) / static_cast<double>(m));
    const auto it = f.find(p);
    EXPECT_NEAR(it == f.end() ? 0.0 : it->second, prob, 3 * se);
  }
}

TEST(EmpiricalCrossEntropy, ExactFrequenciesReproduceExactEntropy) {
  const std::vector<System> systems{
      free_monoid_uniform(), z2_uniform(), f2_markov(),
      {FiberSystemSpec(ActionKind::z2, bin(), {0.7, 0.3}), z2_uniform_driving()},
      {FiberSystemSpec(ActionKind::f2, bin(), {0.8, 0.2}), z2_uniform_driving()},
  };
  for (const auto& s : systems)
    for (std::size_t k = 1; k <= 6; ++k) {
      const double h = empirical_cross_entropy(exact_pair_probabilities(s.fiber, s.driving, k), s.fiber, s.driving, k);
      EXPECT_NEAR(h, exact_averaged_entropy(s.fiber, s.driving, k).total_bits, 1e-9);
    }
  const auto& z = systems[3];
  EXPECT_NEAR(empirical_cross_entropy(exact_pair_probabilities(z.fiber, z.driving, 4), z.fiber, z.driving, 4),
              3.084518147307481, 1e-9);
}

TEST(EmpiricalCrossEntropy, FreeMonoidIsExactlyK) {
  const auto s = free_monoid_uniform();
  const auto name = sample_name(s, 3000, 8);
  for (std::size_t k : {1u, 4u, 7u})
    EXPECT_NEAR(empirical_cross_entropy(pair_frequencies(name.driving, name.letters, k, Stride::slide, 1000), s.fiber,
                                        s.driving, k),
                static_cast<double>(k), 1e-9);
}

TEST(EmpiricalCrossEntropy, SinglePairAndNullPair) {
  const auto s = z2_uniform();
  std::map<BlockPair, double> one{{BlockPair{{0, 1, 0}, {1, 0, 1}}, 1.0}};
  EXPECT_DOUBLE_EQ(empirical_cross_entropy(one, s.fiber, s.driving, 3), 2.0);
  std::map<BlockPair, double> bad{{BlockPair{{0, 1, 0}, {1, 0, 0}}, 1.0}};
  EXPECT_THROW(empirical_cross_entropy(bad, s.fiber, s.driving, 3), model_mismatch);
}

TEST(ConditionalRate, FreeMonoidIsExactlyOne) {
  const auto s = free_monoid_uniform();
  const auto fam = build_codebooks(s.fiber, s.driving, 8);
  const auto r = conditional_rate(sample_name(s, std::size_t{1} << 17, 1), fam);
  EXPECT_EQ(r.code_rate, 1.0);
  EXPECT_EQ(*r.cross_entropy_rate, 1.0);
  EXPECT_EQ(*r.exact_rate, 1.0);
  EXPECT_EQ(r.code_gap(), 0.0);
  EXPECT_EQ(r.information_rate, 1.0);
  EXPECT_TRUE(r.checks_pass());
  EXPECT_EQ(r.phase_cross_entropy_rates.size(), 8u);
}

TEST(ConditionalRate, ShortNameIsPureTail) {
  const auto s = z2_uniform();
  const auto fam = build_codebooks(s.fiber, s.driving, 6);
  const auto r = conditional_rate(sample_name(s, 5, 1), fam);
  EXPECT_EQ(r.m, 0u);
  EXPECT_EQ(r.code_rate, 1.0);
  EXPECT_FALSE(r.cross_entropy_rate.has_value());
  EXPECT_TRUE(r.checks_pass());
}

TEST(ConditionalRate, Z2BoundsHoldAndEstimateTracksExactValue) {
  const auto s = z2_uniform();
  const auto fam = build_codebooks(s.fiber, s.driving, 4);
  EXPECT_NEAR(*conditional_rate(OrbitName{}, fam).exact_rate, 3.5 / 4, 1e-12);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = conditional_rate(sample_name(s, 40000, seed), fam);
    EXPECT_TRUE(r.coding_bound_holds);
    EXPECT_TRUE(r.no_undershoot_asserted);
    EXPECT_TRUE(r.no_undershoot);
    EXPECT_LE(r.code_rate, *r.cross_entropy_rate + 1.0 / 4 + 1e-12);
    EXPECT_NEAR(*r.cross_entropy_rate, 0.875, 0.02);
    for (double ph : r.phase_cross_entropy_rates) EXPECT_NEAR(ph, 0.875, 0.03);
  }
}

TEST(ConditionalRate, NoUndershootOnManyRuns) {
  std::mt19937_64 rng(123);
  const std::vector<System> systems{z2_uniform(), f2_markov(),
                                    {FiberSystemSpec(ActionKind::z2, bin(), {0.9, 0.1}), z2_uniform_driving()}};
  for (const auto& s : systems)
    for (std::size_t k : {2u, 5u}) {
      const auto fam = build_codebooks(s.fiber, s.driving, k);
      for (int run = 0; run < 10; ++run) {
        const auto r = conditional_rate(sample_name(s, 1000 + rng() % 5000, rng()), fam);
        EXPECT_TRUE(r.no_undershoot);
        EXPECT_TRUE(r.coding_bound_holds);
      }
    }
}

TEST(ArDecomposition, FreeMonoidIsAnalytic) {
  const auto s = free_monoid_uniform();
  const auto r = ar_decomposition_check(s.driving, s.fiber, std::size_t{1} << 17, 8, 1);
  EXPECT_EQ(r.joint_rate, 2.0);
  EXPECT_EQ(r.plain_rate, 1.0);
  EXPECT_EQ(r.conditional_rate, 1.0);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(ArDecomposition, F2Preset) {
  const auto s = f2_markov();
  const auto r = ar_decomposition_check(s.driving, s.fiber, 100000, 10, 1);
  EXPECT_NEAR(r.plain_rate, entropy_rate(s.driving), 0.1);
  EXPECT_LE(std::abs(r.residual), 0.1);
  EXPECT_EQ(r.conditional_rate, 1.0);
}

TEST(ArDecomposition, ResidualIsNonpositiveForBlockModels) {
  // ceil(a + b) <= ceil(a) + ceil(b), and the joint tail is no longer than the two separate tails
  const System s{FiberSystemSpec(ActionKind::f2, bin(), {0.7, 0.3}), f2_markov_driving()};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = ar_decomposition_check(s.driving, s.fiber, 10007, 6, seed);
    EXPECT_LE(r.joint_bits, r.plain_bits + r.conditional_bits);
    EXPECT_LT(r.residual, 0.0);
  }
}

// With a dyadic factor one of a, b is an integer and the rounding is shared exactly.
TEST(ArDecomposition, ResidualVanishesWhenOneFactorIsDyadic) {
  const System s{FiberSystemSpec(ActionKind::z2, bin(), {0.7, 0.3}), z2_uniform_driving()};
  EXPECT_EQ(ar_decomposition_check(s.driving, s.fiber, 10007, 6, 2).residual, 0.0);
  const auto f = f2_markov();
  EXPECT_EQ(ar_decomposition_check(f.driving, f.fiber, 10007, 6, 2).residual, 0.0);
}

TEST(ArDecomposition, ZeroHorizon) {
  const auto s = z2_uniform();
  const auto r = ar_decomposition_check(s.driving, s.fiber, 0, 4, 1);
  EXPECT_EQ(r.joint_rate, 0.0);
  EXPECT_EQ(r.plain_rate, 0.0);
  EXPECT_EQ(r.conditional_rate, 0.0);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(TwoPass, EliasGamma) {
  EXPECT_EQ(elias_gamma_length(1), 1u);
  EXPECT_EQ(elias_gamma_length(2), 3u);
  EXPECT_EQ(elias_gamma_length(3), 3u);
  EXPECT_EQ(elias_gamma_length(4), 5u);
  EXPECT_THROW(elias_gamma_length(0), std::invalid_argument);
}

TEST(TwoPass, TinyInstanceByHand) {
  // one distinct pair seen twice: gamma(2) + 2*(1+1) + gamma(2) header bits, no payload
  const std::vector<Letter> alpha{0, 0, 0, 0}, omega{0, 1, 0, 1};
  const auto r = two_pass_conditional_rate(alpha, omega, 2, 2, 2);
  EXPECT_EQ(r.header_bits, 10u);
  EXPECT_EQ(r.payload_bits, 0u);
  EXPECT_EQ(r.rate, 2.5);
}

TEST(TwoPass, ApproachesFiberEntropyWithoutSharedModel) {
  const auto s = free_monoid_uniform();
  const auto name = sample_name(s, 200000, 4);
  const auto r = two_pass_conditional_rate(name.driving, name.letters, 4, 2, 2);
  // the payload alone never beats the source; the header is what the shared model saves
  EXPECT_LE(static_cast<double>(r.payload_bits) / 200000.0, 1.0);
  EXPECT_NEAR(static_cast<double>(r.payload_bits) / 200000.0, 1.0, 0.01);
  EXPECT_NEAR(r.rate, 1.0, 0.05);

  const auto z = z2_uniform();
  const auto zn = sample_name(z, 200000, 4);
  const auto zr = two_pass_conditional_rate(zn.driving, zn.letters, 2, 4, 2);
  EXPECT_NEAR(zr.rate, 1.0, 0.01);  // H^2/2 = 1 with only 64 possible pairs
}
