#include "poprec/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace poprec {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

void PipelineConfig::validate() const {
  if (n == 0) throw std::invalid_argument("pipeline: n must be positive");
  if (s < 1) throw std::invalid_argument("pipeline: support size must be >= 1");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("pipeline: eps must be in (0,1)");
  if (!(delta_hard > 0.0 && delta_hard < 1.0))
    throw std::invalid_argument("pipeline: delta_hard must be in (0,1)");
  if (!(delta_fail > 0.0 && delta_fail < 1.0))
    throw std::invalid_argument("pipeline: delta_fail must be in (0,1)");
  reconstructor.validate();
}

double PipelineConfig::large_cluster_threshold() const {
  return static_cast<double>(traces) * eps / (2.0 * static_cast<double>(s));
}

double trace_budget_raw(double n, double s, double eps, double delta_hard,
                        double delta_fail, double scale, double exponent) {
  const double arg = std::max(n, 2.0 * s / delta_hard);
  const double stretched = std::exp(exponent * std::cbrt(std::log(arg)));
  return (s / (eps * eps)) * scale * stretched * std::log(3.0 * s / delta_fail);
}

std::uint64_t compute_trace_budget(const PipelineConfig& cfg) {
  cfg.validate();
  const double raw =
      trace_budget_raw(static_cast<double>(cfg.n), static_cast<double>(cfg.s),
                       cfg.eps, cfg.delta_hard, cfg.delta_fail, cfg.budget_scale,
                       cfg.budget_exponent);
  const double t = std::ceil(raw);
  if (!(t >= 1.0)) throw std::invalid_argument("trace budget: degenerate value");
  if (t > static_cast<double>(cfg.max_traces))
    throw std::invalid_argument("trace budget exceeds the configured maximum (" +
                                std::to_string(cfg.max_traces) + ")");
  return static_cast<std::uint64_t>(t);
}

std::string to_string(PipelineStatus s) {
  switch (s) {
    case PipelineStatus::Ok:
      return "ok";
    case PipelineStatus::CliqueCheckFailed:
      return "clique_check_failed";
    case PipelineStatus::AllClustersSmall:
      return "all_clusters_small";
    case PipelineStatus::ReconstructionFailed:
      return "reconstruction_failed";
  }
  return "?";
}

RecoveryResult run_pipeline_on_traces(const PipelineConfig& cfg,
                                      const ChannelParams& channel,
                                      std::vector<Trace> traces,
                                      std::vector<std::uint32_t> truth_labels,
                                      Rng& rng) {
  const auto t_total = Clock::now();
  RecoveryResult result;
  result.traces_drawn = traces.size();
  result.truth_labels = std::move(truth_labels);

  // Stage 2: pairwise verdicts and the clique partition.
  const auto t_cluster = Clock::now();
  VerdictMatrix verdicts;
  if (cfg.clustering == ClusteringMode::BlockSums) {
    const ClusterParams params = derive_params(cfg.n, channel);
    verdicts = cluster_all(traces, params, cfg.threads);
  } else {
    if (result.truth_labels.size() != traces.size())
      throw std::invalid_argument("pipeline: ground-truth clustering needs labels");
    verdicts = VerdictMatrix(traces.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
      for (std::size_t j = i + 1; j < traces.size(); ++j) {
        verdicts.set(i, j, result.truth_labels[i] == result.truth_labels[j]
                               ? Verdict::Same
                               : Verdict::Different);
      }
    }
  }
  result.wall.cluster_ms = ms_since(t_cluster);

  const auto t_partition = Clock::now();
  const PartitionResult partition = partition_cliques(verdicts, cfg.strict);
  result.wall.partition_ms = ms_since(t_partition);
  result.clique_check_passed = partition.clique_ok;
  result.clique_violations = partition.violations;
  if (cfg.keep_verdicts) result.verdicts = std::move(verdicts);
  if (cfg.strict && !partition.clique_ok) {
    result.status = PipelineStatus::CliqueCheckFailed;
    result.wall.total_ms = ms_since(t_total);
    return result;
  }
  result.clusters_found = partition.clusters.size();

  // Stage 3: keep clusters with at least T*eps/(2s) members (ties kept).
  const double threshold = static_cast<double>(result.traces_drawn) * cfg.eps /
                           (2.0 * static_cast<double>(cfg.s));
  std::vector<const std::vector<std::uint32_t>*> large;
  for (const auto& cluster : partition.clusters) {
    ClusterOutcome outcome;
    outcome.size = cluster.size();
    outcome.large = static_cast<double>(cluster.size()) >= threshold - 1e-9;
    if (outcome.large) large.push_back(&cluster);
    result.per_cluster.push_back(outcome);
  }
  result.clusters_large = large.size();
  if (large.empty()) {
    result.status = PipelineStatus::AllClustersSmall;
    result.wall.total_ms = ms_since(t_total);
    return result;
  }

  // Stage 4: reconstruct each large cluster. A padded reconstructor gets the
  // per-cluster parameters tau = delta_hard/(2s), delta = delta_fail/(3s).
  const auto t_reconstruct = Clock::now();
  ReconstructorSpec spec = cfg.reconstructor;
  if (spec.kind == ReconstructorKind::Padded) {
    spec.padding.tau = cfg.delta_hard / (2.0 * static_cast<double>(cfg.s));
    spec.padding.repeats = PaddingConfig::repeats_for_confidence(
        cfg.delta_fail / (3.0 * static_cast<double>(cfg.s)));
    if (spec.padding.traces_per_run == 0) {
      spec.padding.traces_per_run = PaddingConfig::default_traces_per_run(
          spec.padding.padded_length(), spec.padding.delta_prime);
    }
  }

  std::vector<BitString> recovered;
  std::vector<std::uint64_t> recovered_sizes;
  std::size_t outcome_index = 0;
  for (const auto& cluster : partition.clusters) {
    ClusterOutcome& outcome = result.per_cluster[outcome_index++];
    if (!outcome.large) continue;
    std::vector<Trace> members;
    members.reserve(cluster.size());
    for (const auto idx : cluster) members.push_back(traces[idx]);
    Rng cluster_rng = Rng::substream(rng.next_u64(), outcome_index);
    const ReconstructionResult rec =
        reconstruct(spec, cfg.n, members, channel, cluster_rng);
    if (rec.ok()) {
      outcome.reconstructed = true;
      outcome.value = rec.value->to_string();
      recovered.push_back(*rec.value);
      recovered_sizes.push_back(cluster.size());
    } else {
      outcome.error = rec.error;
      if (cfg.strict) {
        result.status = PipelineStatus::ReconstructionFailed;
        result.wall.reconstruct_ms = ms_since(t_reconstruct);
        result.wall.total_ms = ms_since(t_total);
        return result;
      }
      ++result.clusters_dropped;
    }
  }
  result.wall.reconstruct_ms = ms_since(t_reconstruct);
  if (recovered.empty()) {
    result.status = PipelineStatus::ReconstructionFailed;
    result.wall.total_ms = ms_since(t_total);
    return result;
  }

  // Stage 5: weight each surviving cluster by its share of the kept traces.
  // Clusters that recovered the same string pool their weight.
  std::unordered_map<Bits, double, BitsHash> weight_by_string;
  const double total = static_cast<double>(
      std::accumulate(recovered_sizes.begin(), recovered_sizes.end(), std::uint64_t{0}));
  for (std::size_t i = 0; i < recovered.size(); ++i) {
    weight_by_string[recovered[i]] += static_cast<double>(recovered_sizes[i]) / total;
  }
  std::vector<BitString> support;
  std::vector<double> weights;
  for (auto& [s, w] : weight_by_string) {
    support.push_back(s);
    weights.push_back(w);
  }
  result.distribution = make_distribution(std::move(support), std::move(weights));
  result.wall.total_ms = ms_since(t_total);
  return result;
}

RecoveryResult recover_population(const PipelineConfig& cfg,
                                  const ChannelParams& channel,
                                  const Population& source, Rng& rng) {
  PipelineConfig resolved = cfg;
  resolved.validate();
  source.validate();
  if (resolved.traces == 0) resolved.traces = compute_trace_budget(resolved);
  if (resolved.traces > resolved.max_traces)
    throw std::invalid_argument("pipeline: trace count exceeds the configured maximum");

  // Duplicate support strings are merged up front (summed probability).
  Population sim = source;
  if (sim.has_duplicates()) {
    std::unordered_map<Bits, double, BitsHash> merged;
    std::vector<Bits> order;
    for (std::size_t i = 0; i < sim.strings.size(); ++i) {
      if (merged.find(sim.strings[i]) == merged.end()) order.push_back(sim.strings[i]);
      merged[sim.strings[i]] += sim.probs[i];
    }
    sim.strings = order;
    sim.probs.clear();
    for (const auto& s : order) sim.probs.push_back(merged[s]);
  }

  const auto t_generate = std::chrono::steady_clock::now();
  std::vector<double> cumulative(sim.probs.size());
  std::partial_sum(sim.probs.begin(), sim.probs.end(), cumulative.begin());

  const std::uint64_t generation_root = rng.next_u64();
  std::vector<Trace> traces;
  std::vector<std::uint32_t> labels;
  traces.reserve(resolved.traces);
  labels.reserve(resolved.traces);
  for (std::uint64_t i = 0; i < resolved.traces; ++i) {
    Rng stream = Rng::substream(generation_root, i);
    const std::size_t which = stream.categorical(cumulative);
    labels.push_back(static_cast<std::uint32_t>(which));
    traces.push_back(apply_channel(sim.strings[which], channel, stream));
  }
  const double generate_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - t_generate)
                                 .count();

  RecoveryResult result = run_pipeline_on_traces(resolved, channel, std::move(traces),
                                                 std::move(labels), rng);
  result.wall.generate_ms = generate_ms;
  result.wall.total_ms += generate_ms;
  return result;
}

EvaluationMetrics evaluate_run(const RecoveryResult& result, const Population& truth) {
  EvaluationMetrics metrics;
  const DiscreteDistribution truth_dist = truth.as_distribution();

  if (result.distribution) {
    metrics.tv = tv_distance(*result.distribution, truth_dist);
    std::uint64_t matched = 0;
    for (const auto& s : result.distribution->support) {
      if (truth_dist.find(s) != truth_dist.support.size()) ++matched;
    }
    metrics.precision =
        static_cast<double>(matched) /
        static_cast<double>(result.distribution->support.size());
    std::uint64_t covered = 0;
    for (const auto& s : truth_dist.support) {
      if (result.distribution->find(s) != result.distribution->support.size()) ++covered;
    }
    metrics.recall =
        static_cast<double>(covered) / static_cast<double>(truth_dist.support.size());
  }

  if (result.verdicts && !result.truth_labels.empty()) {
    const auto& m = *result.verdicts;
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = i + 1; j < m.size(); ++j) {
        const bool same_source = result.truth_labels[i] == result.truth_labels[j];
        const bool same_verdict = m.get(i, j) == Verdict::Same;
        if (same_source) {
          ++metrics.same_pairs;
          if (!same_verdict) ++metrics.same_labeled_different;
        } else {
          ++metrics.diff_pairs;
          if (same_verdict) ++metrics.diff_labeled_same;
        }
      }
    }
  }
  return metrics;
}

}  // namespace poprec
