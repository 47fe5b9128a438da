#include "poprec/cluster.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "poprec/stats.hpp"

namespace poprec {

void ClusterParams::validate() const {
  if (n == 0 || t == 0 || s_tilde == 0)
    throw std::invalid_argument("ClusterParams: n, t, s_tilde must be positive");
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("ClusterParams: tau must be in (0,1)");
  if (!(beta > 0.0)) throw std::invalid_argument("ClusterParams: beta must be positive");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("ClusterParams: gamma must be in (0,1)");
}

Calibration calibrate_thresholds(std::uint64_t t, double tau) {
  if (t < 1) throw std::invalid_argument("calibrate_thresholds: t must be >= 1");
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("calibrate_thresholds: tau must be in (0,1)");

  const double stretch = 1.0 / std::sqrt(1.0 - tau);
  double best_beta = 0.0, best_gap = -1.0, best_f = 0.0, best_g = 0.0;
  for (std::uint64_t i = 1; i < 50000; ++i) {
    const double beta = 1e-4 * static_cast<double>(i);
    const double f = normal_two_sided_tail(beta);
    const double g = normal_two_sided_tail(beta * stretch);
    if (f - g > best_gap) {
      best_gap = f - g;
      best_beta = beta;
      best_f = f;
      best_g = g;
    }
  }
  Calibration c;
  c.beta = best_beta;
  c.gamma = (best_f + best_g) / 2.0;
  c.margin = (best_f - best_g) / 2.0;
  if (!(c.margin > 0.0))
    throw std::runtime_error("calibrate_thresholds: non-positive margin");
  return c;
}

std::uint64_t block_length(std::uint64_t n) {
  auto cube_at_most = [](std::uint64_t t, unsigned __int128 target) {
    const unsigned __int128 c =
        static_cast<unsigned __int128>(t) * t * t;
    return c <= target;
  };
  const unsigned __int128 n2 = static_cast<unsigned __int128>(n) * n;
  auto t = static_cast<std::uint64_t>(std::floor(std::pow(static_cast<double>(n), 2.0 / 3.0)));
  while (!cube_at_most(t, n2)) --t;
  while (cube_at_most(t + 1, n2)) ++t;
  return t;
}

ClusterParams derive_params(std::uint32_t n, const ChannelParams& channel) {
  if (n == 0) throw std::invalid_argument("derive_params: n must be positive");
  const double alpha = channel.alpha();
  ClusterParams out;
  out.n = n;
  out.t = block_length(n);
  out.s_tilde = static_cast<std::uint64_t>(alpha * n / (4.0 * static_cast<double>(out.t)));
  if (out.s_tilde < 1) {
    std::uint64_t viable = n;
    while (static_cast<std::uint64_t>(
               alpha * static_cast<double>(viable) /
               (4.0 * static_cast<double>(block_length(viable)))) < 1)
      ++viable;
    std::ostringstream msg;
    msg << "derive_params: instance too small, no blocks fit (n=" << n
        << ", alpha=" << alpha << "); minimal viable n is " << viable;
    throw std::invalid_argument(msg.str());
  }
  out.tau = 0.7 * channel.p() * channel.pp();
  const Calibration c = calibrate_thresholds(out.t, out.tau);
  out.beta = c.beta;
  out.gamma = c.gamma;
  out.margin = c.margin;
  out.validate();
  return out;
}

std::vector<std::int64_t> block_sums(const Trace& z, const ClusterParams& params) {
  std::vector<std::int64_t> sums(params.s_tilde, 0);
  for (std::uint64_t l = 1; l <= params.s_tilde; ++l) {
    const std::uint64_t begin = (2 * l - 2) * params.t;  // 0-based [begin, end)
    const std::uint64_t end = (2 * l - 1) * params.t;
    sums[l - 1] = z.pm1_sum(begin, end);
  }
  return sums;
}

Verdict verdict_from_sums(const std::vector<std::int64_t>& a,
                          const std::vector<std::int64_t>& b,
                          const ClusterParams& params) {
  const double threshold = params.beta * std::sqrt(2.0 * static_cast<double>(params.t));
  std::uint64_t exceeding = 0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (std::abs(static_cast<double>(a[l] - b[l])) >= threshold) ++exceeding;
  }
  // Ties at exactly gamma*s_tilde count as "different".
  return static_cast<double>(exceeding) >=
                 params.gamma * static_cast<double>(params.s_tilde)
             ? Verdict::Different
             : Verdict::Same;
}

Verdict cluster_pair(const Trace& z1, const Trace& z2, const ClusterParams& params) {
  return verdict_from_sums(block_sums(z1, params), block_sums(z2, params), params);
}

VerdictMatrix::VerdictMatrix(std::size_t size)
    : size_(size), same_bits_((size * (size - 1) / 2 + 63) / 64, 0) {}

std::size_t VerdictMatrix::index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  return i * size_ - i * (i + 1) / 2 + (j - i - 1);
}

Verdict VerdictMatrix::get(std::size_t i, std::size_t j) const {
  if (i == j) return Verdict::Same;
  const std::size_t k = index(i, j);
  return (same_bits_[k >> 6] >> (k & 63)) & 1 ? Verdict::Same : Verdict::Different;
}

void VerdictMatrix::set(std::size_t i, std::size_t j, Verdict v) {
  const std::size_t k = index(i, j);
  const std::uint64_t mask = std::uint64_t{1} << (k & 63);
  if (v == Verdict::Same)
    same_bits_[k >> 6] |= mask;
  else
    same_bits_[k >> 6] &= ~mask;
}

VerdictMatrix cluster_all(const std::vector<Trace>& traces,
                          const ClusterParams& params, int threads) {
  if (traces.size() < 2)
    throw std::invalid_argument("cluster_all: need at least two traces");
  const std::size_t count = traces.size();

  std::vector<std::vector<std::int64_t>> sums(count);
  for (std::size_t i = 0; i < count; ++i) sums[i] = block_sums(traces[i], params);

  VerdictMatrix m(count);
  auto work_rows = [&](std::size_t begin_row, std::size_t end_row) {
    for (std::size_t i = begin_row; i < end_row; ++i) {
      for (std::size_t j = i + 1; j < count; ++j) {
        m.set(i, j, verdict_from_sums(sums[i], sums[j], params));
      }
    }
  };
  if (threads <= 1) {
    work_rows(0, count);
  } else {
    // Adjacent rows can share packed words, so threads fill private
    // matrices and the results are merged afterwards. Verdicts are data;
    // the outcome does not depend on the thread count.
    std::vector<VerdictMatrix> parts(threads, VerdictMatrix(count));
    std::vector<std::thread> pool;
    for (int tdx = 0; tdx < threads; ++tdx) {
      pool.emplace_back([&, tdx] {
        for (std::size_t i = static_cast<std::size_t>(tdx); i < count;
             i += static_cast<std::size_t>(threads)) {
          for (std::size_t j = i + 1; j < count; ++j) {
            parts[tdx].set(i, j, verdict_from_sums(sums[i], sums[j], params));
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (std::size_t i = 0; i < count; ++i) {
      const auto owner = static_cast<int>(i % static_cast<std::size_t>(threads));
      for (std::size_t j = i + 1; j < count; ++j) m.set(i, j, parts[owner].get(i, j));
    }
  }
  return m;
}

PartitionResult partition_cliques(const VerdictMatrix& m, bool strict) {
  const std::size_t count = m.size();
  std::vector<std::uint32_t> component(count, 0);
  std::vector<bool> seen(count, false);
  PartitionResult result;

  for (std::size_t start = 0; start < count; ++start) {
    if (seen[start]) continue;
    std::vector<std::uint32_t> members;
    std::vector<std::uint32_t> frontier{static_cast<std::uint32_t>(start)};
    seen[start] = true;
    while (!frontier.empty()) {
      const std::uint32_t v = frontier.back();
      frontier.pop_back();
      members.push_back(v);
      for (std::size_t w = 0; w < count; ++w) {
        if (!seen[w] && m.get(v, w) == Verdict::Same) {
          seen[w] = true;
          frontier.push_back(static_cast<std::uint32_t>(w));
        }
      }
    }
    for (const auto v : members) component[v] = static_cast<std::uint32_t>(result.clusters.size());
    result.clusters.push_back(std::move(members));
  }

  std::uint64_t violations = 0;
  for (const auto& cluster : result.clusters) {
    for (std::size_t a = 0; a < cluster.size(); ++a) {
      for (std::size_t b = a + 1; b < cluster.size(); ++b) {
        if (m.get(cluster[a], cluster[b]) == Verdict::Different) ++violations;
      }
    }
  }
  result.violations = violations;
  result.clique_ok = violations == 0;
  if (strict && !result.clique_ok) result.clusters.clear();
  return result;
}

std::string calibration_json(std::uint64_t t, double tau, const Calibration& c) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "{\"t\": %llu, \"tau\": %.17g, \"beta\": %.17g, \"gamma\": %.17g, "
                "\"margin\": %.17g}",
                static_cast<unsigned long long>(t), tau, c.beta, c.gamma, c.margin);
  return buf;
}

void write_verdict_csv(const std::string& path, const VerdictMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "i,j,verdict\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      out << i << ',' << j << ','
          << (m.get(i, j) == Verdict::Same ? "same" : "different") << '\n';
    }
  }
}

}  // namespace poprec
