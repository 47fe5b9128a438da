#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "poprec/bits.hpp"
#include "poprec/channel.hpp"
#include "poprec/rng.hpp"

namespace poprec {

enum class ReconstructorKind : std::uint8_t { ExactMap, Bma, Padded };

enum class ReconstructError : std::uint8_t {
  None,
  InsufficientTraces,
  NoMajority,
  ReconstructionFailed,
};

struct ReconstructionResult {
  std::optional<BitString> value;
  ReconstructError error = ReconstructError::None;
  // Per-run outcomes of the padded wrapper (empty otherwise): the candidate
  // strings and the winning tally, for diagnostics.
  std::vector<std::string> run_outputs;
  std::uint32_t majority_count = 0;

  bool ok() const { return value.has_value(); }
};

// Padded-run parameters. The padded wrapper reconstructs at length
// N = ceil(4M/tau) and keeps the first n bits; each of `repeats` runs uses
// fresh random padding and traces_per_run input traces, and the final answer
// must win at least 9/16 of the runs.
struct PaddingConfig {
  double tau = 0.0;
  double hardness_constant = 1.0;  // M; the base algorithm's hard fraction is M/n
  double delta_prime = 1.0 / 8.0;  // per-run confidence of the base call
  std::uint32_t repeats = 5;
  std::uint32_t traces_per_run = 0;

  static constexpr std::uint32_t kMajorityNumerator = 9;
  static constexpr std::uint32_t kMajorityDenominator = 16;

  std::uint64_t padded_length() const;
  // repeats = max(5, ceil(8 ln(1/delta))): a fixed Chernoff-safe multiple.
  static std::uint32_t repeats_for_confidence(double delta);
  // Default traces_per_run: ceil(c * exp((ln N)^(1/3)) * ln(1/delta')) with a
  // pilot-calibrated c (the exact MAP base saturates well below this).
  static std::uint32_t default_traces_per_run(std::uint64_t padded_length,
                                              double delta_prime,
                                              double scale = 5.0);

  void validate(std::uint32_t n) const;
};

struct ReconstructorSpec {
  ReconstructorKind kind = ReconstructorKind::Bma;
  // Padded only:
  ReconstructorKind base = ReconstructorKind::ExactMap;
  PaddingConfig padding;

  void validate() const;
  std::string describe() const;
};

constexpr std::uint32_t kMaxMapLength = 16;

// Brute-force MAP over all length-n strings: maximizes the summed
// log-likelihood of the traces, ties broken toward the lexicographically
// smallest candidate. Ground truth for the pipeline at tiny n.
BitString map_reconstruct(std::uint32_t n, const std::vector<Trace>& traces,
                          const ChannelParams& channel);

// Bitwise majority alignment with one cursor per trace. Under insertions the
// traces are first thinned at rate p' (a heuristic inversion of the
// insertion process); a cursor that stays in the minority for more than
// kBmaStuckRounds consecutive rounds is treated as desynchronized and may
// skip up to ceil(2q/(1-q)) positions to find the majority bit. Deterministic:
// the thinning stream is seeded from the trace contents.
BitString bma_reconstruct(std::uint32_t n, const std::vector<Trace>& traces,
                          const ChannelParams& channel,
                          bool* cursor_exhausted = nullptr);

constexpr int kBmaStuckRounds = 2;

using TraceSource = std::function<std::optional<Trace>()>;

// Majority vote over completed runs: the plurality string wins if its count
// reaches 9/16 of the planned repeats.
std::optional<std::size_t> majority_decision(const std::vector<BitString>& outcomes,
                                             std::uint32_t repeats);

ReconstructionResult padded_reconstruct(const ReconstructorSpec& base,
                                        const PaddingConfig& cfg, std::uint32_t n,
                                        const TraceSource& source,
                                        const ChannelParams& channel, Rng& rng);

ReconstructionResult reconstruct(const ReconstructorSpec& spec, std::uint32_t n,
                                 const std::vector<Trace>& traces,
                                 const ChannelParams& channel, Rng& rng);

}  // namespace poprec
