#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poprec/bits.hpp"
#include "poprec/channel.hpp"

namespace poprec {

// Thresholds for the block-sum verdict. For source length n the trace is cut
// into s_tilde blocks of t positions each, consecutive blocks separated by a
// gap of t positions: block l covers positions [(2l-2)t+1, (2l-1)t] (1-based).
struct ClusterParams {
  std::uint32_t n = 0;
  std::uint64_t t = 0;        // block length, floor(n^(2/3))
  std::uint64_t s_tilde = 0;  // block count, floor(alpha*n/(4t))
  double tau = 0.0;           // guaranteed same-source block overlap fraction, 0.7*p*p'
  double beta = 0.0;          // deviation threshold, multiplies sqrt(2t)
  double gamma = 0.0;         // fraction of exceeding blocks that flips the verdict
  double margin = 0.0;        // calibration gap, diagnostic only

  void validate() const;
};

struct Calibration {
  double beta = 0.0;
  double gamma = 0.0;
  double margin = 0.0;
};

// Picks beta maximizing f(beta)-g(beta) where f is the two-sided tail of
// N(0,2t) at beta*sqrt(2t) and g the same tail of N(0,(1-tau)2t); gamma is
// the midpoint and margin half the gap. The ratio form makes the optimum
// independent of t; t is kept in the interface for the Monte Carlo
// validation, which is discrete.
Calibration calibrate_thresholds(std::uint64_t t, double tau);

// floor(n^(2/3)) computed exactly (t^3 <= n^2 < (t+1)^3).
std::uint64_t block_length(std::uint64_t n);

// Derives all clustering parameters for source length n. Throws if the
// construction degenerates (s_tilde < 1), naming the minimal viable n.
ClusterParams derive_params(std::uint32_t n, const ChannelParams& channel);

// Z_l for every block: sum of bits over block l in the +-1 convention
// (bit 1 -> +1, bit 0 -> -1), positions past the end of the trace contribute 0.
std::vector<std::int64_t> block_sums(const Trace& z, const ClusterParams& params);

enum class Verdict : std::uint8_t { Same, Different };

Verdict verdict_from_sums(const std::vector<std::int64_t>& a,
                          const std::vector<std::int64_t>& b,
                          const ClusterParams& params);

Verdict cluster_pair(const Trace& z1, const Trace& z2, const ClusterParams& params);

// Symmetric pairwise verdicts, packed upper-triangular; diagonal is Same.
class VerdictMatrix {
 public:
  VerdictMatrix() = default;
  explicit VerdictMatrix(std::size_t size);

  std::size_t size() const { return size_; }
  Verdict get(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, Verdict v);

 private:
  std::size_t index(std::size_t i, std::size_t j) const;
  std::size_t size_ = 0;
  std::vector<std::uint64_t> same_bits_;
};

VerdictMatrix cluster_all(const std::vector<Trace>& traces,
                          const ClusterParams& params, int threads = 1);

// Connected components of the Same-graph plus the clique check. In strict
// mode a component that is not a clique is a failure; in robust mode the
// components are returned anyway with the violation count.
struct PartitionResult {
  bool clique_ok = false;
  std::uint64_t violations = 0;
  std::vector<std::vector<std::uint32_t>> clusters;
};
PartitionResult partition_cliques(const VerdictMatrix& m, bool strict = true);

std::string calibration_json(std::uint64_t t, double tau, const Calibration& c);
void write_verdict_csv(const std::string& path, const VerdictMatrix& m);

}  // namespace poprec
