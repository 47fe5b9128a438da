#include "poprec/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace poprec {

std::uint64_t PaddingConfig::padded_length() const {
  return static_cast<std::uint64_t>(std::ceil(4.0 * hardness_constant / tau));
}

std::uint32_t PaddingConfig::repeats_for_confidence(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("repeats_for_confidence: delta must be in (0,1)");
  const double r = std::ceil(8.0 * std::log(1.0 / delta));
  return std::max<std::uint32_t>(5, static_cast<std::uint32_t>(r));
}

std::uint32_t PaddingConfig::default_traces_per_run(std::uint64_t padded_length,
                                                    double delta_prime,
                                                    double scale) {
  const double ln_n = std::log(static_cast<double>(std::max<std::uint64_t>(padded_length, 2)));
  const double m = scale * std::exp(std::cbrt(ln_n)) * std::log(1.0 / delta_prime);
  return static_cast<std::uint32_t>(std::ceil(m));
}

void PaddingConfig::validate(std::uint32_t n) const {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("PaddingConfig: tau must be in (0,1)");
  if (!(hardness_constant > 0.0))
    throw std::invalid_argument("PaddingConfig: hardness constant must be positive");
  if (!(delta_prime > 0.0 && delta_prime < 1.0))
    throw std::invalid_argument("PaddingConfig: delta_prime must be in (0,1)");
  if (repeats < 1) throw std::invalid_argument("PaddingConfig: repeats must be >= 1");
  if (traces_per_run < 1)
    throw std::invalid_argument("PaddingConfig: traces_per_run must be >= 1");
  // With tau below M/n the padded length must leave room for real padding.
  if (tau < hardness_constant / static_cast<double>(n) && padded_length() < 4 * n)
    throw std::invalid_argument("PaddingConfig: padded length below 4n");
}

void ReconstructorSpec::validate() const {
  if (kind == ReconstructorKind::Padded && base == ReconstructorKind::Padded)
    throw std::invalid_argument("ReconstructorSpec: padded wrapper cannot nest");
}

std::string ReconstructorSpec::describe() const {
  switch (kind) {
    case ReconstructorKind::ExactMap:
      return "exact_map";
    case ReconstructorKind::Bma:
      return "bma";
    case ReconstructorKind::Padded:
      return base == ReconstructorKind::ExactMap ? "padded(exact_map)" : "padded(bma)";
  }
  return "?";
}

BitString map_reconstruct(std::uint32_t n, const std::vector<Trace>& traces,
                          const ChannelParams& channel) {
  if (n == 0 || n > kMaxMapLength)
    throw std::invalid_argument("map_reconstruct: n out of range");
  if (traces.empty()) throw std::invalid_argument("map_reconstruct: no traces");

  double best_score = -std::numeric_limits<double>::infinity();
  std::uint64_t best_candidate = 0;
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << n); ++c) {
    const BitString candidate = Bits::from_uint(c, n);
    double score = 0.0;
    for (const auto& y : traces) {
      const double lik = trace_likelihood(candidate, y, channel);
      if (lik <= 0.0) {
        score = -std::numeric_limits<double>::infinity();
        break;
      }
      score += std::log(lik);
    }
    // Strict improvement keeps the first (lexicographically smallest) argmax.
    if (score > best_score) {
      best_score = score;
      best_candidate = c;
    }
  }
  return Bits::from_uint(best_candidate, n);
}

namespace {

Bits thin_for_insertions(const Trace& trace, double keep_rate) {
  // Seeded from the trace contents: no rng parameter, and the result is
  // invariant under permutations of the trace list.
  Rng rng(derive_seed(0x626d612d73756273ULL, trace.stable_hash()));
  Bits out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (rng.bernoulli(keep_rate)) out.push_back(trace.get(i));
  }
  return out;
}

}  // namespace

BitString bma_reconstruct(std::uint32_t n, const std::vector<Trace>& traces,
                          const ChannelParams& channel, bool* cursor_exhausted) {
  if (n == 0) throw std::invalid_argument("bma_reconstruct: n must be positive");
  if (traces.size() < 3)
    throw std::invalid_argument("bma_reconstruct: need at least three traces");

  std::vector<Bits> working;
  working.reserve(traces.size());
  if (channel.qp > 0.0) {
    for (const auto& t : traces) working.push_back(thin_for_insertions(t, channel.pp()));
  } else {
    working = traces;
  }

  const int lookahead = static_cast<int>(std::ceil(2.0 * channel.q / channel.p()));
  std::vector<std::size_t> cursor(working.size(), 0);
  std::vector<int> stuck(working.size(), 0);
  if (cursor_exhausted) *cursor_exhausted = false;

  BitString out(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    std::size_t ones = 0, zeros = 0;
    for (std::size_t i = 0; i < working.size(); ++i) {
      if (cursor[i] >= working[i].size()) continue;
      if (working[i].get(cursor[i]))
        ++ones;
      else
        ++zeros;
    }
    if (ones + zeros == 0) {
      // All cursors ran out: pad the rest with the majority of last bits.
      if (cursor_exhausted) *cursor_exhausted = true;
      std::size_t last_ones = 0, last_total = 0;
      for (const auto& w : working) {
        if (w.empty()) continue;
        ++last_total;
        if (w.get(w.size() - 1)) ++last_ones;
      }
      const bool pad = last_total > 0 && 2 * last_ones >= last_total;
      for (std::uint32_t j = k; j < n; ++j) out.set(j, pad);
      return out;
    }
    const bool majority = ones >= zeros;
    out.set(k, majority);
    for (std::size_t i = 0; i < working.size(); ++i) {
      const std::size_t c = cursor[i];
      if (c >= working[i].size()) continue;
      if (working[i].get(c) == majority) {
        cursor[i] = c + 1;
        stuck[i] = 0;
        continue;
      }
      // Minority: assume the bit was deleted in this trace and wait. A
      // cursor stuck for several rounds is desynchronized; let it skip
      // ahead (bounded) to the next occurrence of the majority bit.
      if (++stuck[i] > kBmaStuckRounds) {
        for (int d = 1; d <= lookahead; ++d) {
          if (c + d < working[i].size() && working[i].get(c + d) == majority) {
            cursor[i] = c + d + 1;
            stuck[i] = 0;
            break;
          }
        }
      }
    }
  }
  return out;
}

std::optional<std::size_t> majority_decision(const std::vector<BitString>& outcomes,
                                             std::uint32_t repeats) {
  std::unordered_map<Bits, std::size_t, BitsHash> tally;
  for (const auto& s : outcomes) ++tally[s];
  std::size_t best = 0;
  const Bits* winner = nullptr;
  for (const auto& [s, c] : tally) {
    if (c > best || (c == best && winner && s < *winner)) {
      best = c;
      winner = &s;
    }
  }
  if (!winner) return std::nullopt;
  // count/repeats >= 9/16, in integers.
  if (best * PaddingConfig::kMajorityDenominator <
      static_cast<std::size_t>(repeats) * PaddingConfig::kMajorityNumerator)
    return std::nullopt;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i] == *winner) return i;
  }
  return std::nullopt;
}

ReconstructionResult padded_reconstruct(const ReconstructorSpec& base,
                                        const PaddingConfig& cfg, std::uint32_t n,
                                        const TraceSource& source,
                                        const ChannelParams& channel, Rng& rng) {
  if (base.kind == ReconstructorKind::Padded)
    throw std::invalid_argument("padded_reconstruct: base cannot itself be padded");
  cfg.validate(n);
  const std::uint64_t padded_n = std::max<std::uint64_t>(cfg.padded_length(), n);
  if (base.kind == ReconstructorKind::ExactMap && padded_n > kMaxMapLength)
    throw std::invalid_argument("padded_reconstruct: padded length exceeds the MAP bound");

  ReconstructionResult result;

  // All input traces are pulled up front so runs are order-independent.
  std::vector<Trace> pulled;
  pulled.reserve(static_cast<std::size_t>(cfg.repeats) * cfg.traces_per_run);
  for (std::uint32_t i = 0; i < cfg.repeats * cfg.traces_per_run; ++i) {
    auto t = source();
    if (!t) {
      result.error = ReconstructError::InsufficientTraces;
      return result;
    }
    pulled.push_back(std::move(*t));
  }

  std::vector<BitString> outcomes;
  const std::uint64_t run_root = rng.next_u64();
  for (std::uint32_t run = 0; run < cfg.repeats; ++run) {
    Rng run_rng = Rng::substream(run_root, run);
    const std::uint64_t pad_len = padded_n - n;
    const Bits padding = Bits::random(pad_len, run_rng);

    std::vector<Trace> padded_traces;
    padded_traces.reserve(cfg.traces_per_run);
    for (std::uint32_t i = 0; i < cfg.traces_per_run; ++i) {
      Trace a = pulled[static_cast<std::size_t>(run) * cfg.traces_per_run + i];
      if (pad_len > 0) a.append(apply_channel(padding, channel, run_rng));
      padded_traces.push_back(std::move(a));
    }

    BitString w;
    try {
      if (base.kind == ReconstructorKind::ExactMap) {
        w = map_reconstruct(static_cast<std::uint32_t>(padded_n), padded_traces, channel);
      } else {
        w = bma_reconstruct(static_cast<std::uint32_t>(padded_n), padded_traces, channel);
      }
    } catch (const std::invalid_argument&) {
      result.run_outputs.emplace_back("<failed>");
      continue;
    }
    outcomes.push_back(w.prefix(n));
    result.run_outputs.push_back(outcomes.back().to_string());
  }

  const auto winner = majority_decision(outcomes, cfg.repeats);
  if (!winner) {
    result.error = ReconstructError::NoMajority;
    return result;
  }
  std::uint32_t count = 0;
  for (const auto& o : outcomes) {
    if (o == outcomes[*winner]) ++count;
  }
  result.majority_count = count;
  result.value = outcomes[*winner];
  return result;
}

ReconstructionResult reconstruct(const ReconstructorSpec& spec, std::uint32_t n,
                                 const std::vector<Trace>& traces,
                                 const ChannelParams& channel, Rng& rng) {
  spec.validate();
  ReconstructionResult result;
  if (traces.empty()) {
    result.error = ReconstructError::InsufficientTraces;
    return result;
  }
  try {
    switch (spec.kind) {
      case ReconstructorKind::ExactMap:
        result.value = map_reconstruct(n, traces, channel);
        return result;
      case ReconstructorKind::Bma:
        if (traces.size() < 3) {
          result.error = ReconstructError::InsufficientTraces;
          return result;
        }
        result.value = bma_reconstruct(n, traces, channel);
        return result;
      case ReconstructorKind::Padded: {
        std::size_t next = 0;
        TraceSource source = [&traces, &next]() -> std::optional<Trace> {
          if (next >= traces.size()) return std::nullopt;
          return traces[next++];
        };
        ReconstructorSpec base;
        base.kind = spec.base;
        return padded_reconstruct(base, spec.padding, n, source, channel, rng);
      }
    }
  } catch (const std::invalid_argument&) {
    result.error = ReconstructError::ReconstructionFailed;
    return result;
  }
  result.error = ReconstructError::ReconstructionFailed;
  return result;
}

}  // namespace poprec
