#pragma once

// Alphabets, words and canonical prefix-free codes.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "fiberlab/bits.hpp"
#include "fiberlab/errors.hpp"

namespace fiberlab {

using Letter = std::uint8_t;

inline constexpr std::size_t max_alphabet_size = 256;

class Alphabet {
public:
  explicit Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty()) throw std::invalid_argument("alphabet must be non-empty");
    if (symbols_.size() > max_alphabet_size)
      throw std::invalid_argument("alphabet has more than 256 symbols");
    std::unordered_set<std::string> seen;
    for (const auto& s : symbols_)
      if (!seen.insert(s).second) throw std::invalid_argument("duplicate alphabet symbol '" + s + "'");
  }

  // Symbols "0", "1", ..., "size-1".
  static Alphabet numbered(std::size_t size) {
    std::vector<std::string> s;
    for (std::size_t i = 0; i < size; ++i) s.push_back(std::to_string(i));
    return Alphabet(std::move(s));
  }

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::string& symbol(Letter i) const { return symbols_.at(i); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }

  std::optional<Letter> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < symbols_.size(); ++i)
      if (symbols_[i] == name) return static_cast<Letter>(i);
    return std::nullopt;
  }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

private:
  std::vector<std::string> symbols_;
};

using AlphabetPtr = std::shared_ptr<const Alphabet>;

inline AlphabetPtr make_alphabet(std::vector<std::string> symbols) {
  return std::make_shared<const Alphabet>(std::move(symbols));
}

// A finite word over an alphabet; the empty word is valid.
class Word {
public:
  explicit Word(AlphabetPtr alphabet, std::vector<Letter> letters = {})
      : alphabet_(std::move(alphabet)), letters_(std::move(letters)) {
    if (!alphabet_) throw std::invalid_argument("word requires an alphabet");
    for (Letter l : letters_)
      if (l >= alphabet_->size()) throw std::invalid_argument("letter index out of range");
  }

  // Each character of `text` names a single-character symbol of the alphabet.
  static Word parse(AlphabetPtr alphabet, std::string_view text) {
    std::vector<Letter> letters;
    for (char c : text) {
      auto idx = alphabet->index_of(std::string_view(&c, 1));
      if (!idx) throw std::invalid_argument(std::string("symbol '") + c + "' not in alphabet");
      letters.push_back(*idx);
    }
    return Word(std::move(alphabet), std::move(letters));
  }

  const Alphabet& alphabet() const noexcept { return *alphabet_; }
  const AlphabetPtr& alphabet_ptr() const noexcept { return alphabet_; }
  std::span<const Letter> letters() const noexcept { return letters_; }
  std::size_t size() const noexcept { return letters_.size(); }
  bool empty() const noexcept { return letters_.empty(); }
  Letter operator[](std::size_t i) const { return letters_[i]; }

  std::string to_string(std::string_view separator = "") const {
    std::string out;
    for (std::size_t i = 0; i < letters_.size(); ++i) {
      if (i != 0) out += separator;
      out += alphabet_->symbol(letters_[i]);
    }
    return out;
  }

  friend bool operator==(const Word& a, const Word& b) {
    return *a.alphabet_ == *b.alphabet_ && a.letters_ == b.letters_;
  }

private:
  AlphabetPtr alphabet_;
  std::vector<Letter> letters_;
};

inline bool is_prefix(const Word& v, const Word& w) {
  if (!(v.alphabet() == w.alphabet())) throw std::invalid_argument("words over different alphabets");
  if (v.size() > w.size()) return false;
  return std::equal(v.letters().begin(), v.letters().end(), w.letters().begin());
}

// Sorting lexicographically places any proper prefix right before a word it
// prefixes (or before a run of words sharing it), so adjacent pairs suffice.
inline bool is_prefix_free(std::span<const Word> words) {
  std::vector<const Word*> sorted;
  sorted.reserve(words.size());
  for (const auto& w : words) sorted.push_back(&w);
  std::sort(sorted.begin(), sorted.end(), [](const Word* a, const Word* b) {
    return std::lexicographical_compare(a->letters().begin(), a->letters().end(),
                                        b->letters().begin(), b->letters().end());
  });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const Word& a = *sorted[i - 1];
    const Word& b = *sorted[i];
    if (a == b) continue;
    if (is_prefix(a, b)) return false;
  }
  return true;
}

// The index-th word in length-then-lexicographic order; index 0 is the empty word.
inline Word enumerate_word(const AlphabetPtr& alphabet, std::uint64_t index) {
  const std::uint64_t s = alphabet->size();
  std::size_t length = 0;
  unsigned __int128 count = 1;  // number of words of the current length
  while (index >= count) {
    index -= static_cast<std::uint64_t>(count);
    ++length;
    count *= s;
  }
  std::vector<Letter> letters(length);
  for (std::size_t i = length; i-- > 0;) {
    letters[i] = static_cast<Letter>(s == 1 ? 0 : index % s);
    if (s > 1) index /= s;
  }
  return Word(alphabet, std::move(letters));
}

// Inverse of enumerate_word.
inline std::uint64_t word_index(const Word& w) {
  const std::uint64_t s = w.alphabet().size();
  std::uint64_t offset = 0;
  std::uint64_t count = 1;
  for (std::size_t l = 0; l < w.size(); ++l) {
    offset += count;
    count *= s;
  }
  std::uint64_t rank = 0;
  for (Letter l : w.letters()) rank = rank * s + l;
  return offset + rank;
}

// ---------------------------------------------------------------------------
// Prefix-free binary codes

inline constexpr unsigned max_codeword_length = 64;

struct Codeword {
  std::uint64_t bits = 0;  // right-aligned, most significant bit first on the wire
  unsigned length = 0;

  std::string to_string() const {
    std::string s;
    for (unsigned i = length; i-- > 0;) s.push_back(((bits >> i) & 1u) ? '1' : '0');
    return s;
  }

  friend bool operator==(const Codeword&, const Codeword&) = default;
};

// Exact Kraft sum as numerator / 2^max_codeword_length.
using KraftSum = unsigned __int128;
inline constexpr KraftSum kraft_unit = KraftSum{1} << max_codeword_length;

template <typename Block>
class BinaryCodebook {
public:
  BinaryCodebook() = default;

  const std::map<Block, Codeword>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  const Codeword* find(const Block& b) const {
    auto it = entries_.find(b);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const Codeword& at(const Block& b) const {
    if (auto* c = find(b)) return *c;
    throw model_mismatch("block has no codeword");
  }

  void encode(const Block& b, BitString& out) const {
    const Codeword& c = at(b);
    out.append(c.bits, c.length);
  }

  // Scans bits until the scanned prefix is a codeword, then returns its block.
  Block decode(BitReader& in) const {
    std::uint64_t value = 0;
    for (unsigned len = 0;; ++len) {
      if (len > 0) value = (value << 1) | (in.read_bit() ? 1u : 0u);
      const auto& t = tiers_[len];
      if (t.count != 0 && value >= t.first_code && value - t.first_code < t.count)
        return canonical_order_[t.first_index + (value - t.first_code)];
      if (len == max_length_) throw malformed_stream("bit pattern matches no codeword");
    }
  }

  KraftSum kraft_numerator() const {
    KraftSum sum = 0;
    for (const auto& [b, c] : entries_) sum += KraftSum{1} << (max_codeword_length - c.length);
    return sum;
  }

  unsigned max_length() const noexcept { return max_length_; }

  template <typename B>
  friend BinaryCodebook<B> canonical_kraft_code(const std::map<B, unsigned>& lengths);

private:
  struct Tier {
    std::uint64_t first_code = 0;
    std::uint64_t count = 0;
    std::size_t first_index = 0;
  };

  std::map<Block, Codeword> entries_;
  std::vector<Block> canonical_order_;
  std::array<Tier, max_codeword_length + 1> tiers_{};
  unsigned max_length_ = 0;
};

// Codewords are assigned as consecutive binary fractions to blocks sorted by
// (length, block). Lengths must satisfy Kraft's inequality, checked exactly.
template <typename Block>
BinaryCodebook<Block> canonical_kraft_code(const std::map<Block, unsigned>& lengths) {
  KraftSum sum = 0;
  for (const auto& [b, len] : lengths) {
    if (len > max_codeword_length) throw resource_limit("codeword length exceeds 64 bits");
    sum += KraftSum{1} << (max_codeword_length - len);
    if (sum > kraft_unit) throw infeasible_lengths("Kraft sum exceeds 1");
  }

  std::vector<std::pair<unsigned, Block>> order;
  order.reserve(lengths.size());
  for (const auto& [b, len] : lengths) order.emplace_back(len, b);
  std::sort(order.begin(), order.end());

  BinaryCodebook<Block> book;
  book.canonical_order_.reserve(order.size());
  // 65-bit accumulator: the last code of a full length-64 profile is 2^64 - 1.
  unsigned __int128 code = 0;
  unsigned prev_len = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& [len, b] = order[i];
    if (i == 0)
      code = 0;
    else
      code = (code + 1) << (len - prev_len);
    prev_len = len;
    auto& tier = book.tiers_[len];
    if (tier.count == 0) {
      tier.first_code = static_cast<std::uint64_t>(code);
      tier.first_index = i;
    }
    ++tier.count;
    book.entries_.emplace(b, Codeword{static_cast<std::uint64_t>(code), len});
    book.canonical_order_.push_back(b);
    book.max_length_ = std::max(book.max_length_, len);
  }
  return book;
}

}  // namespace fiberlab
