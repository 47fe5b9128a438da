#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace poprec {

// Finalizer from the splitmix64 generator; bijective on 64-bit words.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for a named substream of a root seed. Chaining derive_seed calls
// gives hierarchical streams (experiment -> trial -> trace) that stay
// order-independent under concurrency.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return splitmix64(splitmix64(root) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

// Deterministic random stream. mt19937_64 output is fully specified by the
// standard, and all variate transforms below are written out explicitly, so
// identical seeds give identical draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t root, std::uint64_t stream) {
    return Rng(derive_seed(root, stream));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe to pass through std::log.
  double next_unit_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_unit() < p; }

  bool next_bit() { return (engine_() >> 63) != 0; }

  // Index into a cumulative weight table; weights must sum to ~1.
  std::size_t categorical(const std::vector<double>& cumulative) {
    const double u = next_unit();
    for (std::size_t i = 0; i + 1 < cumulative.size(); ++i) {
      if (u < cumulative[i]) return i;
    }
    return cumulative.empty() ? 0 : cumulative.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace poprec
