#include "poprec/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace poprec {

namespace {

constexpr double kWeightSumTolerance = 1e-12;

void sort_by_support(DiscreteDistribution& d) {
  std::vector<std::size_t> order(d.support.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d.support[a] < d.support[b];
  });
  DiscreteDistribution sorted;
  sorted.support.reserve(order.size());
  sorted.weights.reserve(order.size());
  for (const auto i : order) {
    sorted.support.push_back(std::move(d.support[i]));
    sorted.weights.push_back(d.weights[i]);
  }
  d = std::move(sorted);
}

}  // namespace

void DiscreteDistribution::validate() const {
  if (support.size() != weights.size())
    throw std::invalid_argument("distribution: support/weight size mismatch");
  if (support.empty()) throw std::invalid_argument("distribution: empty support");
  const std::size_t n = support.front().size();
  double sum = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i].size() != n)
      throw std::invalid_argument("distribution: mixed support lengths");
    if (weights[i] < 0.0) throw std::invalid_argument("distribution: negative weight");
    sum += weights[i];
    if (i > 0 && !(support[i - 1] < support[i]))
      throw std::invalid_argument("distribution: support not sorted/distinct");
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance)
    throw std::invalid_argument("distribution: weights do not sum to 1");
}

std::size_t DiscreteDistribution::find(const BitString& s) const {
  const auto it = std::lower_bound(support.begin(), support.end(), s);
  if (it != support.end() && *it == s)
    return static_cast<std::size_t>(it - support.begin());
  return support.size();
}

void Population::validate() const {
  if (strings.size() != probs.size())
    throw std::invalid_argument("population: strings/probs size mismatch");
  if (strings.empty()) throw std::invalid_argument("population: empty");
  const std::size_t n = strings.front().size();
  if (n == 0) throw std::invalid_argument("population: zero-length strings");
  double sum = 0.0;
  for (std::size_t i = 0; i < strings.size(); ++i) {
    if (strings[i].size() != n)
      throw std::invalid_argument("population: mixed string lengths");
    if (probs[i] < 0.0) throw std::invalid_argument("population: negative probability");
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance)
    throw std::invalid_argument("population: probabilities do not sum to 1");
}

bool Population::has_duplicates() const {
  auto sorted = strings;
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

DiscreteDistribution Population::as_distribution() const {
  validate();
  std::unordered_map<Bits, double, BitsHash> merged;
  for (std::size_t i = 0; i < strings.size(); ++i) merged[strings[i]] += probs[i];
  DiscreteDistribution d;
  for (auto& [s, w] : merged) {
    d.support.push_back(s);
    d.weights.push_back(w);
  }
  sort_by_support(d);
  d.validate();
  return d;
}

DiscreteDistribution make_distribution(std::vector<BitString> support,
                                       std::vector<double> weights) {
  DiscreteDistribution d;
  d.support = std::move(support);
  d.weights = std::move(weights);
  sort_by_support(d);
  d.validate();
  return d;
}

DiscreteDistribution empirical_distribution(const std::vector<BitString>& samples) {
  if (samples.empty())
    throw std::invalid_argument("empirical_distribution: empty sample");
  std::unordered_map<Bits, std::uint64_t, BitsHash> counts;
  for (const auto& s : samples) ++counts[s];
  DiscreteDistribution d;
  const double total = static_cast<double>(samples.size());
  for (auto& [s, c] : counts) {
    d.support.push_back(s);
    d.weights.push_back(static_cast<double>(c) / total);
  }
  sort_by_support(d);
  d.validate();
  return d;
}

DiscreteDistribution prune_low_frequency(const DiscreteDistribution& d, double cutoff) {
  if (!(cutoff >= 0.0 && cutoff < 1.0))
    throw std::invalid_argument("prune_low_frequency: cutoff must be in [0,1)");
  DiscreteDistribution out;
  double kept = 0.0;
  for (std::size_t i = 0; i < d.support.size(); ++i) {
    if (d.weights[i] > cutoff) {
      out.support.push_back(d.support[i]);
      out.weights.push_back(d.weights[i]);
      kept += d.weights[i];
    }
  }
  if (out.support.empty())
    throw std::invalid_argument("prune_low_frequency: cutoff removed the whole support");
  for (auto& w : out.weights) w /= kept;
  return out;
}

double tv_distance(const DiscreteDistribution& a, const DiscreteDistribution& b) {
  double total = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.support.size() || j < b.support.size()) {
    if (j == b.support.size() ||
        (i < a.support.size() && a.support[i] < b.support[j])) {
      total += a.weights[i];
      ++i;
    } else if (i == a.support.size() || b.support[j] < a.support[i]) {
      total += b.weights[j];
      ++j;
    } else {
      total += std::abs(a.weights[i] - b.weights[j]);
      ++i;
      ++j;
    }
  }
  return total / 2.0;
}

std::string distribution_to_json(const DiscreteDistribution& d) {
  nlohmann::ordered_json out;
  out["n"] = d.support.empty() ? 0 : d.support.front().size();
  out["items"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < d.support.size(); ++i) {
    out["items"].push_back({{"bits", d.support[i].to_string()}, {"weight", d.weights[i]}});
  }
  return out.dump(2);
}

DiscreteDistribution distribution_from_json(const std::string& text) {
  const auto parsed = nlohmann::json::parse(text);
  DiscreteDistribution d;
  for (const auto& item : parsed.at("items")) {
    d.support.push_back(Bits::from_string(item.at("bits").get<std::string>()));
    d.weights.push_back(item.at("weight").get<double>());
  }
  const auto n = parsed.at("n").get<std::size_t>();
  for (const auto& s : d.support) {
    if (s.size() != n) throw std::invalid_argument("distribution json: length mismatch");
  }
  sort_by_support(d);
  d.validate();
  return d;
}

}  // namespace poprec
