#include <cinttypes>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "poprec/channel.hpp"
#include "poprec/cluster.hpp"
#include "poprec/harness.hpp"
#include "poprec/stats.hpp"
#include "poprec/trace_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitBatchFailure = 3;

int cmd_run(const std::string& spec_path, const std::string& out_dir,
            std::uint64_t seed_override, bool seed_set, std::uint32_t trials_override,
            int threads_override, int strictness) {
  poprec::LoadedSpec loaded;
  try {
    loaded = poprec::load_spec(spec_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  auto adjust = [&](poprec::ExperimentSpec& spec) {
    if (seed_set) spec.seed = seed_override;
    if (trials_override > 0) spec.trials = trials_override;
    if (threads_override > 0) spec.pipeline.threads = threads_override;
    if (strictness == 1) spec.pipeline.strict = true;
    if (strictness == -1) spec.pipeline.strict = false;
  };
  adjust(loaded.experiment);
  if (loaded.sweep) adjust(loaded.sweep->base);

  const auto output = poprec::run_experiment(loaded, out_dir);
  std::uint64_t total = 0, ok = 0;
  for (const auto& batch : output.batches) {
    for (const auto& trial : batch.trials) {
      ++total;
      if (trial.status == poprec::PipelineStatus::Ok) ++ok;
    }
  }
  std::cout << "ran " << total << " trial(s), " << ok << " ok; results in "
            << out_dir << "\n";
  const bool strict = loaded.sweep ? loaded.sweep->base.pipeline.strict
                                   : loaded.experiment.pipeline.strict;
  if (strict && output.any_failure) return kExitBatchFailure;
  return kExitOk;
}

int cmd_calibrate(std::uint64_t t, double tau, std::uint64_t samples,
                  std::uint64_t seed, const std::string& out_path) {
  poprec::Calibration c;
  try {
    c = poprec::calibrate_thresholds(t, tau);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  const double threshold = c.beta * std::sqrt(2.0 * static_cast<double>(t));
  const auto m_full = static_cast<std::size_t>(2 * t);
  const auto m_reduced =
      static_cast<std::size_t>((1.0 - tau) * 2.0 * static_cast<double>(t));

  poprec::Rng rng(seed);
  const double f_hat = poprec::pm1_tail_estimate(m_full, threshold, samples, rng);
  const double g_hat = poprec::pm1_tail_estimate(m_reduced, threshold, samples, rng);

  std::printf("t=%" PRIu64 " tau=%.6f\n", t, tau);
  std::printf("beta=%.6f gamma=%.6f margin=%.6f\n", c.beta, c.gamma, c.margin);
  std::printf("monte carlo (%" PRIu64 " samples): f_hat=%.6f g_hat=%.6f\n", samples,
              f_hat, g_hat);
  if (c.margin < 0.01)
    std::printf("warning: margin is close to zero; verdicts will be unstable\n");
  if (!(f_hat >= c.gamma + c.margin / 2.0 && g_hat <= c.gamma - c.margin / 2.0))
    std::printf("warning: monte carlo estimates do not straddle gamma by margin/2\n");

  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << out_path << "\n";
      return kExitConfigError;
    }
    out << poprec::calibration_json(t, tau, c) << "\n";
  }
  return kExitOk;
}

int cmd_cluster_bench(const std::vector<std::uint64_t>& n_list, double q, double qp,
                      std::uint32_t pairs, std::uint32_t trials, std::uint64_t seed,
                      const std::string& out_path) {
  poprec::ChannelParams channel;
  try {
    channel = poprec::ChannelParams(q, qp);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) {
      std::cerr << "cannot write " << out_path << "\n";
      return kExitConfigError;
    }
    out = &file;
  }
  *out << "n,trial,pairs,same_errors,same_rate,same_wilson_lo,same_wilson_hi,"
          "diff_errors,diff_rate,diff_wilson_lo,diff_wilson_hi,identical_skipped\n";
  for (const auto n : n_list) {
    poprec::ClusterParams params;
    try {
      params = poprec::derive_params(static_cast<std::uint32_t>(n), channel);
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfigError;
    }
    for (std::uint32_t trial = 0; trial < trials; ++trial) {
      poprec::Rng rng(poprec::derive_seed(seed, n * 1000 + trial));
      std::uint32_t same_errors = 0, diff_errors = 0, skipped = 0;
      for (std::uint32_t pair = 0; pair < pairs; ++pair) {
        const auto x = poprec::Bits::random(n, rng);
        const auto z1 = poprec::apply_channel(x, channel, rng);
        const auto z2 = poprec::apply_channel(x, channel, rng);
        if (poprec::cluster_pair(z1, z2, params) == poprec::Verdict::Different)
          ++same_errors;

        auto x1 = poprec::Bits::random(n, rng);
        auto x2 = poprec::Bits::random(n, rng);
        while (x1 == x2) {  // probability 2^-n; excluded from scoring
          ++skipped;
          x2 = poprec::Bits::random(n, rng);
        }
        const auto w1 = poprec::apply_channel(x1, channel, rng);
        const auto w2 = poprec::apply_channel(x2, channel, rng);
        if (poprec::cluster_pair(w1, w2, params) == poprec::Verdict::Same)
          ++diff_errors;
      }
      const auto same_ci = poprec::wilson_interval(same_errors, pairs);
      const auto diff_ci = poprec::wilson_interval(diff_errors, pairs);
      char row[512];
      std::snprintf(row, sizeof(row),
                    "%" PRIu64 ",%u,%u,%u,%.6f,%.6f,%.6f,%u,%.6f,%.6f,%.6f,%u",
                    n, trial, pairs, same_errors,
                    static_cast<double>(same_errors) / pairs, same_ci.lower,
                    same_ci.upper, diff_errors,
                    static_cast<double>(diff_errors) / pairs, diff_ci.lower,
                    diff_ci.upper, skipped);
      *out << row << "\n";
    }
  }
  return kExitOk;
}

int cmd_gen(std::uint32_t n, double q, double qp, std::uint32_t count,
            std::uint64_t seed, const std::string& out_path) {
  try {
    const poprec::ChannelParams channel(q, qp);
    poprec::Rng root(seed);
    const auto x = poprec::Bits::random(n, root);
    std::vector<poprec::Trace> traces;
    traces.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      poprec::Rng stream = poprec::Rng::substream(seed, i + 1);
      traces.push_back(poprec::apply_channel(x, channel, stream));
    }
    poprec::TraceFileHeader header{n, channel, seed};
    poprec::write_trace_file(out_path, header, traces);
    std::cout << "source " << x.to_string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitOk;
}

int cmd_self_audit(const std::string& dir) {
  std::string message;
  const bool ok = poprec::self_audit(dir, &message);
  std::cout << (ok ? "audit ok" : "audit FAILED: " + message) << "\n";
  return ok ? kExitOk : kExitBatchFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"population recovery over the insertion/deletion channel"};
  app.require_subcommand(1);

  // run
  std::string spec_path, out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::uint32_t trials = 0;
  int threads = 0;
  int strictness = 0;
  auto* run = app.add_subcommand("run", "run an experiment spec");
  run->add_option("--spec", spec_path, "experiment spec (json)")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the spec seed")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--trials", trials, "override the trial count");
  run->add_option("--threads", threads, "worker threads for pair verdicts");
  auto* strict_flag = run->add_flag("--strict", "strict mode (fail on clique/reconstruction errors)");
  auto* robust_flag = run->add_flag("--robust", "robust mode (drop failed clusters, keep going)");

  // calibrate
  std::uint64_t cal_t = 1000;
  double cal_tau = 0.567;
  std::uint64_t cal_samples = 200000, cal_seed = 1;
  std::string cal_out;
  auto* calibrate = app.add_subcommand("calibrate", "derive block-sum thresholds");
  calibrate->add_option("--t", cal_t, "block length")->required();
  calibrate->add_option("--tau", cal_tau, "overlap fraction")->required();
  calibrate->add_option("--samples", cal_samples, "monte carlo sample count");
  calibrate->add_option("--seed", cal_seed, "monte carlo seed");
  calibrate->add_option("--out", cal_out, "write calibration json here");

  // cluster-bench
  std::vector<std::uint64_t> bench_n;
  double bench_q = 0.1, bench_qp = 0.1;
  std::uint32_t bench_pairs = 400, bench_trials = 1;
  std::uint64_t bench_seed = 1;
  std::string bench_out;
  auto* bench = app.add_subcommand("cluster-bench", "same/different accuracy vs n");
  bench->add_option("--n", bench_n, "source lengths")->required();
  bench->add_option("--q", bench_q, "deletion rate");
  bench->add_option("--qp", bench_qp, "insertion rate");
  bench->add_option("--pairs", bench_pairs, "pairs per class per trial");
  bench->add_option("--trials", bench_trials, "independent trials per n");
  bench->add_option("--seed", bench_seed, "seed");
  bench->add_option("--out", bench_out, "write csv here (default stdout)");

  // gen
  std::uint32_t gen_n = 1000, gen_count = 10;
  double gen_q = 0.1, gen_qp = 0.1;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "traces.txt";
  auto* gen = app.add_subcommand("gen", "sample traces of one random source string");
  gen->add_option("--n", gen_n, "source length")->required();
  gen->add_option("--q", gen_q, "deletion rate");
  gen->add_option("--qp", gen_qp, "insertion rate");
  gen->add_option("--count", gen_count, "number of traces");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--out", gen_out, "output trace file");

  // self-audit
  std::string audit_dir;
  auto* audit = app.add_subcommand("self-audit", "recompute aggregate.csv from trial json");
  audit->add_option("--dir", audit_dir, "experiment output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (strict_flag->count() > 0 && robust_flag->count() > 0) {
      std::cerr << "config error: --strict and --robust are exclusive\n";
      return kExitConfigError;
    }
    if (strict_flag->count() > 0) strictness = 1;
    if (robust_flag->count() > 0) strictness = -1;
    return cmd_run(spec_path, out_dir, seed, seed_set, trials, threads, strictness);
  }
  if (calibrate->parsed())
    return cmd_calibrate(cal_t, cal_tau, cal_samples, cal_seed, cal_out);
  if (bench->parsed())
    return cmd_cluster_bench(bench_n, bench_q, bench_qp, bench_pairs, bench_trials,
                             bench_seed, bench_out);
  if (gen->parsed()) return cmd_gen(gen_n, gen_q, gen_qp, gen_count, gen_seed, gen_out);
  if (audit->parsed()) return cmd_self_audit(audit_dir);
  return kExitOk;
}
