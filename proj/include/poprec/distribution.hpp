#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poprec/bits.hpp"

namespace poprec {

// Discrete distribution over distinct bit strings of a common length.
// Support is kept lexicographically sorted so serialization is canonical.
struct DiscreteDistribution {
  std::vector<BitString> support;
  std::vector<double> weights;

  void validate() const;
  std::size_t find(const BitString& s) const;  // index or support.size()
};

// A population: an ordered support list with a probability vector. Duplicate
// strings are allowed on input but are merged (with a warning flag) before
// simulation; a random support has none with overwhelming probability.
struct Population {
  std::vector<BitString> strings;
  std::vector<double> probs;

  void validate() const;
  // Merged + sorted view of this population as a distribution.
  DiscreteDistribution as_distribution() const;
  bool has_duplicates() const;
};

DiscreteDistribution make_distribution(std::vector<BitString> support,
                                       std::vector<double> weights);

// Empirical distribution of a non-empty sample: weight count/total per item.
DiscreteDistribution empirical_distribution(const std::vector<BitString>& samples);

// Drops support items with weight <= cutoff and renormalizes. Removing
// everything is an error.
DiscreteDistribution prune_low_frequency(const DiscreteDistribution& d, double cutoff);

// Half L1 distance over the union support.
double tv_distance(const DiscreteDistribution& a, const DiscreteDistribution& b);

std::string distribution_to_json(const DiscreteDistribution& d);
DiscreteDistribution distribution_from_json(const std::string& text);

}  // namespace poprec
