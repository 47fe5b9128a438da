#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "poprec/harness.hpp"

using namespace poprec;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kNoiselessSpec = R"json({
  "scenario": "noiseless_s1",
  "channel": {"q": 0.0, "q_prime": 0.0},
  "pipeline": {
    "n": 256, "s": 1, "eps": 0.25, "delta_hard": 0.1, "delta_fail": 0.1,
    "T": 16, "strict": true, "clustering": "block",
    "reconstructor": {"kind": "bma"}
  },
  "population": {"mode": "random", "mixture": [1.0]},
  "trials": 3,
  "seed": 424242
})json";

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("spec parsing round trip") {
  const LoadedSpec loaded = parse_spec(kNoiselessSpec);
  CHECK(loaded.experiment.scenario == "noiseless_s1");
  CHECK(loaded.experiment.pipeline.n == 256);
  CHECK(loaded.experiment.pipeline.traces == 16);
  CHECK(loaded.experiment.trials == 3);
  CHECK(!loaded.sweep.has_value());
  const std::string dumped = spec_to_json(loaded.experiment);
  const LoadedSpec again = parse_spec(dumped);
  CHECK(spec_to_json(again.experiment) == dumped);
}

TEST_CASE("spec validation errors") {
  CHECK_THROWS(parse_spec("{not json"));
  CHECK_THROWS(parse_spec(R"({"channel": {"q": 0.5, "q_prime": 0}})"));
  // mixture size mismatch
  std::string bad = kNoiselessSpec;
  const auto at = bad.find("[1.0]");
  bad.replace(at, 5, "[0.5,0.5]");
  CHECK_THROWS_AS(parse_spec(bad), std::invalid_argument);
}

TEST_CASE("sweep expansion") {
  std::ostringstream spec;
  spec << R"({"base": )" << kNoiselessSpec
       << R"(, "sweep": {"axis": "T", "values": [8, 16]}})";
  const LoadedSpec loaded = parse_spec(spec.str());
  REQUIRE(loaded.sweep.has_value());
  CHECK(loaded.sweep->axis == "T");
  const auto varied = apply_axis(loaded.sweep->base, "T", 8);
  CHECK(varied.pipeline.traces == 8);
  CHECK_THROWS_AS(apply_axis(loaded.sweep->base, "bogus", 1.0), std::invalid_argument);
  const auto eps_varied = apply_axis(loaded.sweep->base, "eps", 0.5);
  CHECK(eps_varied.pipeline.eps == 0.5);
  const auto s_varied = apply_axis(loaded.sweep->base, "s", 3);
  CHECK(s_varied.mixture.size() == 3);
}

TEST_CASE("noiseless batch succeeds in every trial") {
  const LoadedSpec loaded = parse_spec(kNoiselessSpec);
  const BatchResult batch = run_batch(loaded.experiment);
  REQUIRE(batch.trials.size() == 3);
  for (const auto& t : batch.trials) {
    CHECK(t.status == PipelineStatus::Ok);
    CHECK(t.tv == doctest::Approx(0.0));
  }
  CHECK(batch.successes(0.25) == 3);
}

TEST_CASE("run_experiment writes deterministic outputs") {
  const LoadedSpec loaded = parse_spec(kNoiselessSpec);
  const fs::path dir_a = fs::temp_directory_path() / "poprec_harness_a";
  const fs::path dir_b = fs::temp_directory_path() / "poprec_harness_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  const auto out_a = run_experiment(loaded, dir_a.string());
  const auto out_b = run_experiment(loaded, dir_b.string());
  CHECK(!out_a.any_failure);

  // everything except timings.csv must be byte-identical across runs
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    const auto name = entry.path().filename().string();
    if (name == "timings.csv") continue;
    CHECK(slurp(entry.path()) == slurp(dir_b / name));
    ++compared;
  }
  CHECK(compared >= 5);  // manifest + aggregate + 3 trials

  std::string message;
  CHECK(self_audit(dir_a.string(), &message));

  // corrupt the aggregate and the audit must fail
  {
    std::ofstream csv(dir_a / "aggregate.csv", std::ios::binary);
    csv << aggregate_csv_header() << "\n";
    csv << "noiseless_s1,none,0,3,2,0.6666,0,0,0,0,1,0,0,424242\n";
  }
  CHECK(!self_audit(dir_a.string(), &message));
}

TEST_CASE("cli process smoke") {
  const std::string cli = POPREC_CLI_PATH;
  const fs::path dir = fs::temp_directory_path() / "poprec_cli_smoke";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path spec = dir / "spec.json";
  {
    std::ofstream out(spec);
    out << kNoiselessSpec;
  }
  const std::string run_cmd =
      cli + " run --spec " + spec.string() + " --out " + (dir / "out").string() +
      " > /dev/null 2>&1";
  CHECK(std::system(run_cmd.c_str()) == 0);
  CHECK(fs::exists(dir / "out" / "aggregate.csv"));
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(fs::exists(dir / "out" / "timings.csv"));

  const std::string audit_cmd =
      cli + " self-audit --dir " + (dir / "out").string() + " > /dev/null 2>&1";
  CHECK(std::system(audit_cmd.c_str()) == 0);

  const std::string bad_cmd = cli + " run --spec /nonexistent.json > /dev/null 2>&1";
  const int bad_status = std::system(bad_cmd.c_str());
  CHECK(WEXITSTATUS(bad_status) == 2);

  const std::string cal_cmd = cli + " calibrate --t 200 --tau 0.567 --samples 20000 --out " +
                              (dir / "cal.json").string() + " > /dev/null 2>&1";
  CHECK(std::system(cal_cmd.c_str()) == 0);
  const std::string cal = slurp(dir / "cal.json");
  CHECK(cal.find("\"beta\"") != std::string::npos);

  // near-degenerate tau warns about the margin
  const std::string warn_cmd = cli + " calibrate --t 200 --tau 0.005 --samples 2000 > " +
                               (dir / "warn.txt").string() + " 2>&1";
  CHECK(std::system(warn_cmd.c_str()) == 0);
  CHECK(slurp(dir / "warn.txt").find("warning: margin") != std::string::npos);

  // cluster-bench emits one csv row per (n, trial)
  const std::string bench_cmd =
      cli + " cluster-bench --n 1000 --q 0.05 --qp 0.0 --pairs 5 --trials 2 --seed 3 --out " +
      (dir / "bench.csv").string() + " > /dev/null 2>&1";
  CHECK(std::system(bench_cmd.c_str()) == 0);
  {
    std::ifstream in(dir / "bench.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("n,trial,pairs,same_errors", 0) == 0);
    int rows = 0;
    while (std::getline(in, line)) rows += !line.empty();
    CHECK(rows == 2);
  }
}

TEST_CASE("cli strict batch failure exits 3") {
  const std::string cli = POPREC_CLI_PATH;
  const fs::path dir = fs::temp_directory_path() / "poprec_cli_strict";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path spec = dir / "spec.json";
  {
    // two sources, five traces: every nonempty cluster is "large"
    // (threshold 0.625) but the minority cluster is too small for bma, so
    // strict mode fails the batch; robust mode drops it and continues,
    // since the majority cluster always has at least three traces.
    std::ofstream out(spec);
    out << R"json({
      "scenario": "strict_failure",
      "channel": {"q": 0.0, "q_prime": 0.0},
      "pipeline": {
        "n": 64, "s": 2, "eps": 0.5, "T": 5, "strict": true,
        "clustering": "oracle", "reconstructor": {"kind": "bma"}
      },
      "population": {"mode": "random", "mixture": [0.5, 0.5]},
      "trials": 2, "seed": 77
    })json";
  }
  const std::string cmd = cli + " run --spec " + spec.string() + " --out " +
                          (dir / "out").string() + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 3);

  // the same batch in robust mode completes with exit 0
  const std::string robust_cmd = cli + " run --spec " + spec.string() + " --robust --out " +
                                 (dir / "out_robust").string() + " > /dev/null 2>&1";
  const int robust_status = std::system(robust_cmd.c_str());
  CHECK(WEXITSTATUS(robust_status) == 0);
}

TEST_SUITE_END();
