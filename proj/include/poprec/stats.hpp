#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "poprec/rng.hpp"

namespace poprec {

// P[N(0,1) >= x]
double normal_upper_tail(double x);

// P[|N(0,1)| >= x]
double normal_two_sided_tail(double x);

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with dof degrees.
double chi_square_sf(double x, double dof);

// Two-sample chi-square homogeneity test on matched histograms. Bins whose
// pooled count is below min_pooled_count are merged into one rare-bin before
// the statistic is formed.
struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};
ChiSquareResult chi_square_two_sample(const std::vector<std::uint64_t>& counts_a,
                                      const std::vector<std::uint64_t>& counts_b,
                                      std::uint64_t min_pooled_count = 10);

// Wilson score interval for k successes out of n at ~95% confidence.
struct WilsonInterval {
  double lower = 0.0;
  double upper = 1.0;
};
WilsonInterval wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054);

// Monte Carlo estimate of P[|X_1 + ... + X_m| >= threshold] for independent
// uniform +-1 summands, via popcounts over packed random words.
double pm1_tail_estimate(std::size_t summands, double threshold,
                         std::size_t samples, Rng& rng);

}  // namespace poprec
