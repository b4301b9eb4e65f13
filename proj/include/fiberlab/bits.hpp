#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fiberlab/errors.hpp"

namespace fiberlab {

// Append-only bit sequence, most significant bit of each appended value first.
class BitString {
public:
  BitString() = default;

  void append(std::uint64_t value, unsigned length) {
    for (unsigned i = length; i-- > 0;) push_back(((value >> i) & 1u) != 0);
  }

  void push_back(bool bit) {
    if (size_ % 64 == 0) words_.push_back(0);
    if (bit) words_.back() |= std::uint64_t{1} << (63 - size_ % 64);
    ++size_;
  }

  void append(const BitString& other) {
    for (std::size_t i = 0; i < other.size(); ++i) push_back(other[i]);
  }

  bool operator[](std::size_t i) const {
    return ((words_[i / 64] >> (63 - i % 64)) & 1u) != 0;
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  // Copy of the first `length` bits.
  BitString prefix(std::size_t length) const {
    BitString out;
    for (std::size_t i = 0; i < length && i < size_; ++i) out.push_back((*this)[i]);
    return out;
  }

  std::string to_string() const {
    std::string s;
    s.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) s.push_back((*this)[i] ? '1' : '0');
    return s;
  }

  friend bool operator==(const BitString& a, const BitString& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

class BitReader {
public:
  explicit BitReader(const BitString& bits) : bits_(&bits) {}

  bool read_bit() {
    if (pos_ >= bits_->size()) throw malformed_stream("bit stream exhausted mid-codeword");
    return (*bits_)[pos_++];
  }

  std::uint64_t read_bits(unsigned length) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < length; ++i) v = (v << 1) | (read_bit() ? 1u : 0u);
    return v;
  }

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bits_->size() - pos_; }

private:
  const BitString* bits_;
  std::size_t pos_ = 0;
};

}  // namespace fiberlab
