#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poprec/rng.hpp"

namespace poprec {

// Packed binary string, 64 bits per word, bit i stored at word i/64 bit i%64.
// Used both for fixed-length source strings and for variable-length traces
// (which may be empty or longer than the source). Unused bits of the last
// word are kept zero so word-wise equality and hashing are well defined.
class Bits {
 public:
  Bits() = default;
  explicit Bits(std::size_t n) : words_((n + 63) / 64, 0), size_(n) {}

  static Bits from_string(std::string_view s);

  // value's bit (n-1) becomes position 0, so numeric order == lexicographic
  // order for equal-length strings. Requires n <= 64.
  static Bits from_uint(std::uint64_t value, std::size_t n);

  static Bits random(std::size_t n, Rng& rng);

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }

  void set(std::size_t i, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }

  void push_back(bool v) {
    if ((size_ & 63) == 0) words_.push_back(0);
    if (v) words_[size_ >> 6] |= std::uint64_t{1} << (size_ & 63);
    ++size_;
  }

  void append(const Bits& other);
  Bits prefix(std::size_t k) const;

  std::size_t count_ones() const;
  // Ones among positions [begin, end) clamped to [0, size).
  std::size_t count_ones(std::size_t begin, std::size_t end) const;
  // Sum over positions [begin, end) with bit 1 -> +1, bit 0 -> -1;
  // positions beyond the end of the string contribute 0.
  std::int64_t pm1_sum(std::size_t begin, std::size_t end) const;

  std::string to_string() const;
  std::uint64_t stable_hash() const;
  std::span<const std::uint64_t> words() const { return words_; }

  bool operator==(const Bits& other) const {
    return size_ == other.size_ && words_ == other.words_;
  }
  // Lexicographic: compare the common prefix, then a proper prefix sorts first.
  std::strong_ordering operator<=>(const Bits& other) const;

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

struct BitsHash {
  std::size_t operator()(const Bits& b) const {
    return static_cast<std::size_t>(b.stable_hash());
  }
};

// Domain aliases: a BitString is a fixed-length source string, a Trace is a
// channel output (possibly empty, possibly longer than the source).
using BitString = Bits;
using Trace = Bits;

Bits concat(const Bits& a, const Bits& b);

}  // namespace poprec
