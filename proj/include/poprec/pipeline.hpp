#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poprec/channel.hpp"
#include "poprec/cluster.hpp"
#include "poprec/distribution.hpp"
#include "poprec/reconstruct.hpp"

namespace poprec {

// How stage 2 groups traces: the block-sum verdicts, or the ground-truth
// source labels (a simulation-only hook that isolates the other stages,
// usable when the block construction has no room at tiny n).
enum class ClusteringMode : std::uint8_t { BlockSums, GroundTruth };

struct PipelineConfig {
  std::uint32_t n = 0;
  std::uint32_t s = 1;       // support size
  double eps = 0.1;          // target accuracy
  double delta_hard = 0.1;   // tolerated fraction of hard supports
  double delta_fail = 0.1;   // failure probability
  std::uint64_t traces = 0;  // T; 0 derives it from the budget formula
  double budget_scale = 1.0;     // multiplies the whole budget formula
  double budget_exponent = 1.0;  // multiplies the cube-root exponent
  std::uint64_t max_traces = 10'000'000;
  ReconstructorSpec reconstructor;
  bool strict = true;  // strict clique check; failed clusters abort the run
  ClusteringMode clustering = ClusteringMode::BlockSums;
  int threads = 1;
  bool keep_verdicts = true;  // retain the verdict matrix for diagnostics

  void validate() const;
  double large_cluster_threshold() const;  // T * eps / (2s)
};

// T = ceil((s/eps^2) * scale * exp(exponent * (ln max{n, 2s/delta_hard})^(1/3))
//          * ln(3s/delta_fail)). Range validation lives in PipelineConfig;
// this is the bare formula.
double trace_budget_raw(double n, double s, double eps, double delta_hard,
                        double delta_fail, double scale = 1.0, double exponent = 1.0);

std::uint64_t compute_trace_budget(const PipelineConfig& cfg);

enum class PipelineStatus : std::uint8_t {
  Ok,
  CliqueCheckFailed,
  AllClustersSmall,
  ReconstructionFailed,
};

std::string to_string(PipelineStatus s);

struct ClusterOutcome {
  std::uint64_t size = 0;
  bool large = false;
  bool reconstructed = false;
  std::string value;  // recovered bits, or empty
  ReconstructError error = ReconstructError::None;
};

struct StageTimes {
  double generate_ms = 0.0;
  double cluster_ms = 0.0;
  double partition_ms = 0.0;
  double reconstruct_ms = 0.0;
  double total_ms = 0.0;
};

struct RecoveryResult {
  PipelineStatus status = PipelineStatus::Ok;
  std::optional<DiscreteDistribution> distribution;
  std::uint64_t traces_drawn = 0;
  std::uint64_t clusters_found = 0;
  std::uint64_t clusters_large = 0;
  bool clique_check_passed = false;
  std::uint64_t clique_violations = 0;
  std::uint64_t clusters_dropped = 0;  // robust mode only
  std::vector<ClusterOutcome> per_cluster;
  StageTimes wall;
  // Simulation-side data for scoring; not visible to the recovery stages.
  std::vector<std::uint32_t> truth_labels;
  std::optional<VerdictMatrix> verdicts;
};

// Stages 2-5 on an existing batch of traces. truth_labels are required for
// ClusteringMode::GroundTruth and for confusion scoring; they never reach the
// block-sum path.
RecoveryResult run_pipeline_on_traces(const PipelineConfig& cfg,
                                      const ChannelParams& channel,
                                      std::vector<Trace> traces,
                                      std::vector<std::uint32_t> truth_labels,
                                      Rng& rng);

// The full algorithm: draw T traces from the mixture, then stages 2-5.
RecoveryResult recover_population(const PipelineConfig& cfg,
                                  const ChannelParams& channel,
                                  const Population& source, Rng& rng);

struct EvaluationMetrics {
  double tv = 1.0;
  double precision = 0.0;
  double recall = 0.0;
  std::uint64_t same_pairs = 0;
  std::uint64_t diff_pairs = 0;
  std::uint64_t same_labeled_different = 0;  // false splits
  std::uint64_t diff_labeled_same = 0;       // false merges
};

EvaluationMetrics evaluate_run(const RecoveryResult& result, const Population& truth);

}  // namespace poprec
