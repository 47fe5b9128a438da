#include "poprec/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace poprec {

ChannelParams::ChannelParams(double deletion_rate, double insertion_rate)
    : q(deletion_rate), qp(insertion_rate) {
  if (!(q >= 0.0 && q < 1.0))
    throw std::invalid_argument("ChannelParams: deletion rate must be in [0,1)");
  if (!(qp >= 0.0 && qp < 1.0))
    throw std::invalid_argument("ChannelParams: insertion rate must be in [0,1)");
}

std::uint64_t sample_geometric(double p_success, Rng& rng) {
  if (!(p_success > 0.0 && p_success <= 1.0))
    throw std::invalid_argument("sample_geometric: p_success must be in (0,1]");
  if (p_success == 1.0) return 1;
  const double u = rng.next_unit_open();
  const double value = std::ceil(std::log(u) / std::log1p(-p_success));
  if (value < 1.0) return 1;
  return static_cast<std::uint64_t>(value);
}

Trace apply_channel(const BitString& x, const ChannelParams& params, Rng& rng) {
  if (x.empty()) throw std::invalid_argument("apply_channel: source must be non-empty");
  const double p = params.p();
  Trace out;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (params.qp > 0.0) {
      const std::uint64_t inserted = sample_geometric(params.pp(), rng) - 1;
      for (std::uint64_t k = 0; k < inserted; ++k) {
        const bool bit = rng.next_bit();
        if (rng.bernoulli(p)) out.push_back(bit);
      }
    }
    if (rng.bernoulli(p)) out.push_back(x.get(j));
  }
  return out;
}

Pattern sample_pattern(std::uint32_t n, const ChannelParams& params, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_pattern: n must be positive");
  const double p = params.p();
  Pattern r;
  r.n = n;
  r.entries.reserve(static_cast<std::size_t>(n * params.alpha()) + 8);
  for (std::uint32_t j = 0; j < n; ++j) {
    if (params.qp > 0.0) {
      const std::uint64_t inserted = sample_geometric(params.pp(), rng) - 1;
      for (std::uint64_t k = 0; k < inserted; ++k) {
        if (rng.bernoulli(p)) r.entries.push_back(Pattern::kStar);
      }
    }
    if (rng.bernoulli(p)) r.entries.push_back(static_cast<std::int32_t>(j));
  }
  return r;
}

Trace realize_pattern(const Pattern& r, const BitString& x, Rng& rng) {
  if (r.n != x.size())
    throw std::invalid_argument("realize_pattern: pattern/source length mismatch");
  Trace out;
  for (const auto entry : r.entries) {
    if (entry == Pattern::kStar) {
      out.push_back(rng.next_bit());
    } else {
      out.push_back(x.get(static_cast<std::size_t>(entry)));
    }
  }
  return out;
}

double trace_likelihood(const BitString& x, const Trace& y, const ChannelParams& params) {
  if (x.empty()) throw std::invalid_argument("trace_likelihood: source must be non-empty");
  if (x.size() > kMaxLikelihoodSourceLength)
    throw std::invalid_argument("trace_likelihood: source longer than the oracle bound");

  const double q = params.q, qp = params.qp, p = params.p();
  const std::size_t n = x.size(), m = y.size();

  // Within one insertion block, the count S of inserted bits that survive
  // deletion satisfies P[S=s] = c0 * rho^s with c0 = (1-q')/(1-qq') and
  // rho = pq'/(1-qq'); each survivor matches a required bit with prob 1/2.
  // Folding the factor 2^-s into rho gives the per-step geometric series
  //   g[i][j] = sum_s c0 (rho/2)^s f[i][j-s] = c0 f[i][j] + (rho/2) g[i][j-1],
  // and the source-bit step
  //   f[i][j] = q g[i-1][j] + p [y_j == x_i] g[i-1][j-1].
  const double c0 = (1.0 - qp) / (1.0 - q * qp);
  const double r = p * qp / (2.0 * (1.0 - q * qp));

  std::vector<double> f(m + 1, 0.0), g(m + 1, 0.0);
  f[0] = 1.0;
  g[0] = c0;
  for (std::size_t j = 1; j <= m; ++j) g[j] = r * g[j - 1];

  std::vector<double> fn(m + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    const bool xi = x.get(i - 1);
    fn[0] = q * g[0];
    for (std::size_t j = 1; j <= m; ++j) {
      fn[j] = q * g[j];
      if (y.get(j - 1) == xi) fn[j] += p * g[j - 1];
    }
    f.swap(fn);
    g[0] = c0 * f[0];
    for (std::size_t j = 1; j <= m; ++j) g[j] = c0 * f[j] + r * g[j - 1];
  }
  return f[m];
}

}  // namespace poprec
