#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poprec/channel.hpp"
#include "poprec/distribution.hpp"
#include "poprec/pipeline.hpp"

namespace poprec {

// One experiment: a channel, a pipeline configuration, a population (random
// support per trial, or explicit strings), a trial count and a seed.
struct ExperimentSpec {
  std::string scenario = "unnamed";
  ChannelParams channel;
  PipelineConfig pipeline;
  bool population_random = true;          // draw support fresh per trial
  std::vector<double> mixture;            // probability vector, size s
  std::vector<std::string> explicit_strings;  // population_random == false
  std::uint32_t trials = 1;
  std::uint64_t seed = 1;
  bool dump_verdicts = false;

  void validate() const;
};

// A one-axis sweep over an experiment.
struct SweepSpec {
  ExperimentSpec base;
  std::string axis;  // one of n, q, q', T, s, eps
  std::vector<double> values;
};

struct LoadedSpec {
  ExperimentSpec experiment;
  std::optional<SweepSpec> sweep;
};

LoadedSpec load_spec(const std::string& path);
LoadedSpec parse_spec(const std::string& json_text);
std::string spec_to_json(const ExperimentSpec& spec);

ExperimentSpec apply_axis(const ExperimentSpec& base, const std::string& axis,
                          double value);

struct TrialRecord {
  std::uint32_t trial = 0;
  std::uint64_t seed = 0;
  PipelineStatus status = PipelineStatus::Ok;
  double tv = 1.0;
  EvaluationMetrics metrics;
  RecoveryResult result;
  DiscreteDistribution truth;
};

struct BatchResult {
  ExperimentSpec spec;
  std::optional<double> sweep_value;
  std::vector<TrialRecord> trials;

  std::uint32_t successes(double tv_bound) const;
};

BatchResult run_batch(const ExperimentSpec& spec);

// Writes manifest.json, trial_<k>.json, aggregate.csv and timings.csv under
// out_dir. Everything except timings.csv is a deterministic function of the
// spec and seed.
struct ExperimentOutput {
  std::vector<BatchResult> batches;
  bool any_failure = false;
};
ExperimentOutput run_experiment(const LoadedSpec& spec, const std::string& out_dir);

// Recomputes aggregate.csv from the per-trial JSON files and compares.
bool self_audit(const std::string& out_dir, std::string* message = nullptr);

std::string aggregate_csv_header();

}  // namespace poprec
