#pragma once

#include <cstdint>
#include <vector>

#include "poprec/bits.hpp"
#include "poprec/rng.hpp"

namespace poprec {

// Insertion/deletion channel parameters. Before each source bit the channel
// inserts Geometric(1-q')-1 uniform bits, then every bit of the widened
// string is deleted independently with probability q. Expected trace length
// is n*p/p' = alpha*n.
struct ChannelParams {
  double q = 0.0;   // deletion rate
  double qp = 0.0;  // insertion rate

  double p() const { return 1.0 - q; }
  double pp() const { return 1.0 - qp; }
  double alpha() const { return p() / pp(); }

  ChannelParams() = default;
  ChannelParams(double deletion_rate, double insertion_rate);
};

// Trace template over {0,..,n-1} union {*}: each source index appears at most
// once, indices ascend, '*' marks a slot for a fresh uniform bit. Separates
// the channel's positional randomness from the source bits.
struct Pattern {
  static constexpr std::int32_t kStar = -1;
  std::vector<std::int32_t> entries;
  std::uint32_t n = 0;

  std::size_t size() const { return entries.size(); }
};

// Geometric(p_success) on {1, 2, ...} by inverse CDF, so that a fixed seed
// reproduces the same draws everywhere.
std::uint64_t sample_geometric(double p_success, Rng& rng);

Trace apply_channel(const BitString& x, const ChannelParams& params, Rng& rng);

Pattern sample_pattern(std::uint32_t n, const ChannelParams& params, Rng& rng);

Trace realize_pattern(const Pattern& r, const BitString& x, Rng& rng);

// Exact P[Y = y | X = x] under the channel, by dynamic programming with the
// geometric insertion blocks marginalized in closed form inside each
// transition. Scoped to small x (n <= 24): it exists to verify samplers and
// to drive the brute-force MAP reconstructor, not to run at scale.
double trace_likelihood(const BitString& x, const Trace& y, const ChannelParams& params);

constexpr std::size_t kMaxLikelihoodSourceLength = 24;

}  // namespace poprec
