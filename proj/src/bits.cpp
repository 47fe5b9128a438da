#include "poprec/bits.hpp"

#include <bit>
#include <stdexcept>

namespace poprec {

Bits Bits::from_string(std::string_view s) {
  Bits out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '1')
      out.set(i, true);
    else if (s[i] != '0')
      throw std::invalid_argument("Bits::from_string: expected '0'/'1'");
  }
  return out;
}

Bits Bits::from_uint(std::uint64_t value, std::size_t n) {
  if (n > 64) throw std::invalid_argument("Bits::from_uint: n > 64");
  Bits out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.set(i, (value >> (n - 1 - i)) & 1);
  }
  return out;
}

Bits Bits::random(std::size_t n, Rng& rng) {
  Bits out(n);
  for (auto& w : out.words_) w = rng.next_u64();
  if (n & 63) out.words_.back() &= (std::uint64_t{1} << (n & 63)) - 1;
  return out;
}

void Bits::append(const Bits& other) {
  const int shift = static_cast<int>(size_ & 63);
  if (shift == 0) {
    words_.insert(words_.end(), other.words_.begin(), other.words_.end());
  } else {
    for (std::size_t w = 0; w < other.words_.size(); ++w) {
      words_.back() |= other.words_[w] << shift;
      words_.push_back(other.words_[w] >> (64 - shift));
    }
  }
  size_ += other.size_;
  words_.resize((size_ + 63) / 64);
  if (size_ & 63) words_.back() &= (std::uint64_t{1} << (size_ & 63)) - 1;
}

Bits Bits::prefix(std::size_t k) const {
  if (k > size_) k = size_;
  Bits out;
  out.size_ = k;
  out.words_.assign(words_.begin(), words_.begin() + (k + 63) / 64);
  if (k & 63) out.words_.back() &= (std::uint64_t{1} << (k & 63)) - 1;
  return out;
}

std::size_t Bits::count_ones() const {
  std::size_t total = 0;
  for (auto w : words_) total += std::popcount(w);
  return total;
}

std::size_t Bits::count_ones(std::size_t begin, std::size_t end) const {
  if (end > size_) end = size_;
  if (begin >= end) return 0;
  const std::size_t wb = begin >> 6, we = (end - 1) >> 6;
  if (wb == we) {
    std::uint64_t w = words_[wb];
    w >>= (begin & 63);
    const std::size_t len = end - begin;
    if (len < 64) w &= (std::uint64_t{1} << len) - 1;
    return std::popcount(w);
  }
  std::size_t total = std::popcount(words_[wb] >> (begin & 63));
  for (std::size_t w = wb + 1; w < we; ++w) total += std::popcount(words_[w]);
  std::uint64_t last = words_[we];
  const std::size_t tail = end - (we << 6);  // 1..64 bits of the last word
  if (tail < 64) last &= (std::uint64_t{1} << tail) - 1;
  return total + std::popcount(last);
}

std::int64_t Bits::pm1_sum(std::size_t begin, std::size_t end) const {
  if (end > size_) end = size_;
  if (begin >= end) return 0;
  const auto ones = static_cast<std::int64_t>(count_ones(begin, end));
  return 2 * ones - static_cast<std::int64_t>(end - begin);
}

std::string Bits::to_string() const {
  std::string s(size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    if (get(i)) s[i] = '1';
  }
  return s;
}

std::uint64_t Bits::stable_hash() const {
  std::uint64_t h = splitmix64(size_);
  for (auto w : words_) h = splitmix64(h ^ w);
  return h;
}

std::strong_ordering Bits::operator<=>(const Bits& other) const {
  const std::size_t common_words =
      std::min(words_.size(), other.words_.size());
  for (std::size_t w = 0; w < common_words; ++w) {
    const std::uint64_t diff = words_[w] ^ other.words_[w];
    if (diff != 0) {
      const std::size_t bit = (w << 6) + std::countr_zero(diff);
      if (bit >= size_ || bit >= other.size_) break;  // differs only in tail
      return get(bit) ? std::strong_ordering::greater
                      : std::strong_ordering::less;
    }
  }
  return size_ <=> other.size_;
}

Bits concat(const Bits& a, const Bits& b) {
  Bits out = a;
  out.append(b);
  return out;
}

}  // namespace poprec
