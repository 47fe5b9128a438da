#include "poprec/stats.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace poprec {

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double normal_two_sided_tail(double x) { return std::erfc(std::abs(x) / std::sqrt(2.0)); }

namespace {

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return gamma_q(dof / 2.0, x / 2.0);
}

ChiSquareResult chi_square_two_sample(const std::vector<std::uint64_t>& counts_a,
                                      const std::vector<std::uint64_t>& counts_b,
                                      std::uint64_t min_pooled_count) {
  if (counts_a.size() != counts_b.size())
    throw std::invalid_argument("chi_square_two_sample: histogram size mismatch");
  std::uint64_t total_a = 0, total_b = 0;
  for (auto v : counts_a) total_a += v;
  for (auto v : counts_b) total_b += v;
  if (total_a == 0 || total_b == 0)
    throw std::invalid_argument("chi_square_two_sample: empty sample");

  // Merge sparse bins so the asymptotic chi-square approximation applies.
  std::uint64_t rare_a = 0, rare_b = 0;
  std::vector<std::pair<double, double>> bins;
  for (std::size_t i = 0; i < counts_a.size(); ++i) {
    const std::uint64_t pooled = counts_a[i] + counts_b[i];
    if (pooled == 0) continue;
    if (pooled < min_pooled_count) {
      rare_a += counts_a[i];
      rare_b += counts_b[i];
    } else {
      bins.emplace_back(static_cast<double>(counts_a[i]),
                        static_cast<double>(counts_b[i]));
    }
  }
  if (rare_a + rare_b > 0)
    bins.emplace_back(static_cast<double>(rare_a), static_cast<double>(rare_b));

  const double ka = std::sqrt(static_cast<double>(total_b) / static_cast<double>(total_a));
  const double kb = 1.0 / ka;
  double stat = 0.0;
  for (const auto& [a, b] : bins) {
    const double d = a * ka - b * kb;
    stat += d * d / (a + b);
  }
  ChiSquareResult result;
  result.statistic = stat;
  result.dof = static_cast<int>(bins.size()) - 1;
  result.p_value = result.dof >= 1 ? chi_square_sf(stat, result.dof) : 1.0;
  return result;
}

WilsonInterval wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = phat + z2 / (2.0 * nn);
  const double half = z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn));
  return {(center - half) / denom, (center + half) / denom};
}

double pm1_tail_estimate(std::size_t summands, double threshold,
                         std::size_t samples, Rng& rng) {
  const std::size_t full_words = summands / 64;
  const std::size_t tail_bits = summands % 64;
  const std::uint64_t tail_mask =
      tail_bits ? (std::uint64_t{1} << tail_bits) - 1 : 0;
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::int64_t ones = 0;
    for (std::size_t w = 0; w < full_words; ++w) ones += std::popcount(rng.next_u64());
    if (tail_bits) ones += std::popcount(rng.next_u64() & tail_mask);
    const std::int64_t sum = 2 * ones - static_cast<std::int64_t>(summands);
    if (std::abs(static_cast<double>(sum)) >= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

}  // namespace poprec
