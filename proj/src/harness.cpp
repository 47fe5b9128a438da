#include "poprec/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "poprec/cluster.hpp"

namespace poprec {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Shortest representation that round-trips.
std::string fmt_double(double v) {
  char buf[40];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

ReconstructorKind kind_from_string(const std::string& s) {
  if (s == "exact_map") return ReconstructorKind::ExactMap;
  if (s == "bma") return ReconstructorKind::Bma;
  if (s == "padded") return ReconstructorKind::Padded;
  throw std::invalid_argument("unknown reconstructor kind: " + s);
}

std::string kind_to_string(ReconstructorKind k) {
  switch (k) {
    case ReconstructorKind::ExactMap:
      return "exact_map";
    case ReconstructorKind::Bma:
      return "bma";
    case ReconstructorKind::Padded:
      return "padded";
  }
  return "?";
}

ReconstructorSpec reconstructor_from_json(const json& j) {
  ReconstructorSpec spec;
  spec.kind = kind_from_string(j.at("kind").get<std::string>());
  if (spec.kind == ReconstructorKind::Padded) {
    spec.base = kind_from_string(j.at("base").at("kind").get<std::string>());
    if (spec.base == ReconstructorKind::Padded)
      throw std::invalid_argument("reconstructor: padded wrapper cannot nest");
    if (j.contains("tau")) spec.padding.tau = j.at("tau").get<double>();
    if (j.contains("hardness_constant"))
      spec.padding.hardness_constant = j.at("hardness_constant").get<double>();
    if (j.contains("traces_per_run"))
      spec.padding.traces_per_run = j.at("traces_per_run").get<std::uint32_t>();
    if (j.contains("repeats")) spec.padding.repeats = j.at("repeats").get<std::uint32_t>();
  }
  return spec;
}

ordered_json reconstructor_to_json(const ReconstructorSpec& spec) {
  ordered_json j;
  j["kind"] = kind_to_string(spec.kind);
  if (spec.kind == ReconstructorKind::Padded) {
    j["base"] = ordered_json{{"kind", kind_to_string(spec.base)}};
    j["tau"] = spec.padding.tau;
    j["hardness_constant"] = spec.padding.hardness_constant;
    j["traces_per_run"] = spec.padding.traces_per_run;
    j["repeats"] = spec.padding.repeats;
  }
  return j;
}

}  // namespace

void ExperimentSpec::validate() const {
  pipeline.validate();
  if (trials == 0) throw std::invalid_argument("experiment: trials must be >= 1");
  if (mixture.size() != pipeline.s)
    throw std::invalid_argument("experiment: mixture size must equal s");
  double sum = 0.0;
  for (const auto w : mixture) {
    if (w < 0.0) throw std::invalid_argument("experiment: negative mixture weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("experiment: mixture must sum to 1");
  if (!population_random) {
    if (explicit_strings.size() != pipeline.s)
      throw std::invalid_argument("experiment: need s explicit strings");
    for (const auto& s : explicit_strings) {
      if (s.size() != pipeline.n)
        throw std::invalid_argument("experiment: explicit string length != n");
    }
  }
}

LoadedSpec parse_spec(const std::string& json_text) {
  const json root = json::parse(json_text);
  const json& base = root.contains("base") ? root.at("base") : root;

  ExperimentSpec spec;
  spec.scenario = base.value("scenario", std::string("unnamed"));
  const json& ch = base.at("channel");
  spec.channel = ChannelParams(ch.at("q").get<double>(), ch.at("q_prime").get<double>());

  const json& pl = base.at("pipeline");
  spec.pipeline.n = pl.at("n").get<std::uint32_t>();
  spec.pipeline.s = pl.at("s").get<std::uint32_t>();
  spec.pipeline.eps = pl.at("eps").get<double>();
  spec.pipeline.delta_hard = pl.value("delta_hard", 0.1);
  spec.pipeline.delta_fail = pl.value("delta_fail", 0.1);
  spec.pipeline.traces = pl.value("T", std::uint64_t{0});
  spec.pipeline.budget_scale = pl.value("budget_scale", 1.0);
  spec.pipeline.budget_exponent = pl.value("budget_exponent", 1.0);
  spec.pipeline.max_traces = pl.value("max_traces", std::uint64_t{10'000'000});
  spec.pipeline.strict = pl.value("strict", true);
  spec.pipeline.threads = pl.value("threads", 1);
  const std::string clustering = pl.value("clustering", std::string("block"));
  if (clustering == "block")
    spec.pipeline.clustering = ClusteringMode::BlockSums;
  else if (clustering == "oracle")
    spec.pipeline.clustering = ClusteringMode::GroundTruth;
  else
    throw std::invalid_argument("unknown clustering mode: " + clustering);
  spec.pipeline.reconstructor = reconstructor_from_json(pl.at("reconstructor"));

  const json& pop = base.at("population");
  const std::string mode = pop.at("mode").get<std::string>();
  spec.mixture = pop.at("mixture").get<std::vector<double>>();
  if (mode == "random") {
    spec.population_random = true;
  } else if (mode == "explicit") {
    spec.population_random = false;
    if (pop.contains("strings")) {
      spec.explicit_strings = pop.at("strings").get<std::vector<std::string>>();
    } else {
      const auto path = pop.at("strings_file").get<std::string>();
      std::ifstream in(path);
      if (!in) throw std::invalid_argument("cannot open strings file: " + path);
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty()) spec.explicit_strings.push_back(line);
      }
    }
  } else {
    throw std::invalid_argument("unknown population mode: " + mode);
  }

  spec.trials = base.value("trials", 1u);
  spec.seed = base.value("seed", std::uint64_t{1});
  spec.dump_verdicts = base.value("dump_verdicts", false);
  spec.validate();

  LoadedSpec loaded;
  loaded.experiment = spec;
  if (root.contains("sweep")) {
    SweepSpec sweep;
    sweep.base = spec;
    sweep.axis = root.at("sweep").at("axis").get<std::string>();
    sweep.values = root.at("sweep").at("values").get<std::vector<double>>();
    if (sweep.values.empty()) throw std::invalid_argument("sweep: empty value list");
    for (const auto v : sweep.values) apply_axis(spec, sweep.axis, v).validate();
    loaded.sweep = sweep;
  }
  return loaded;
}

LoadedSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open spec file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_spec(buffer.str());
}

std::string spec_to_json(const ExperimentSpec& spec) {
  ordered_json j;
  j["scenario"] = spec.scenario;
  j["channel"] = {{"q", spec.channel.q}, {"q_prime", spec.channel.qp}};
  ordered_json pl;
  pl["n"] = spec.pipeline.n;
  pl["s"] = spec.pipeline.s;
  pl["eps"] = spec.pipeline.eps;
  pl["delta_hard"] = spec.pipeline.delta_hard;
  pl["delta_fail"] = spec.pipeline.delta_fail;
  pl["T"] = spec.pipeline.traces;
  pl["budget_scale"] = spec.pipeline.budget_scale;
  pl["budget_exponent"] = spec.pipeline.budget_exponent;
  pl["max_traces"] = spec.pipeline.max_traces;
  pl["strict"] = spec.pipeline.strict;
  pl["threads"] = spec.pipeline.threads;
  pl["clustering"] =
      spec.pipeline.clustering == ClusteringMode::BlockSums ? "block" : "oracle";
  pl["reconstructor"] = reconstructor_to_json(spec.pipeline.reconstructor);
  j["pipeline"] = pl;
  ordered_json pop;
  pop["mode"] = spec.population_random ? "random" : "explicit";
  pop["mixture"] = spec.mixture;
  if (!spec.population_random) pop["strings"] = spec.explicit_strings;
  j["population"] = pop;
  j["trials"] = spec.trials;
  j["seed"] = spec.seed;
  j["dump_verdicts"] = spec.dump_verdicts;
  return j.dump(2);
}

ExperimentSpec apply_axis(const ExperimentSpec& base, const std::string& axis,
                          double value) {
  ExperimentSpec out = base;
  if (axis == "n") {
    out.pipeline.n = static_cast<std::uint32_t>(value);
  } else if (axis == "q") {
    out.channel = ChannelParams(value, base.channel.qp);
  } else if (axis == "q'") {
    out.channel = ChannelParams(base.channel.q, value);
  } else if (axis == "T") {
    out.pipeline.traces = static_cast<std::uint64_t>(value);
  } else if (axis == "s") {
    const auto s = static_cast<std::uint32_t>(value);
    out.pipeline.s = s;
    out.mixture.assign(s, 1.0 / static_cast<double>(s));
  } else if (axis == "eps") {
    out.pipeline.eps = value;
  } else {
    throw std::invalid_argument("unknown sweep axis: " + axis);
  }
  return out;
}

std::uint32_t BatchResult::successes(double tv_bound) const {
  std::uint32_t count = 0;
  for (const auto& t : trials) {
    if (t.status == PipelineStatus::Ok && t.tv <= tv_bound) ++count;
  }
  return count;
}

BatchResult run_batch(const ExperimentSpec& spec) {
  spec.validate();
  BatchResult batch;
  batch.spec = spec;
  batch.trials.reserve(spec.trials);

  for (std::uint32_t trial = 0; trial < spec.trials; ++trial) {
    const std::uint64_t trial_seed = derive_seed(spec.seed, trial);
    Rng rng(trial_seed);

    Population population;
    if (spec.population_random) {
      Rng pop_rng = Rng::substream(trial_seed, 0x706f70);
      for (std::uint32_t i = 0; i < spec.pipeline.s; ++i)
        population.strings.push_back(Bits::random(spec.pipeline.n, pop_rng));
    } else {
      for (const auto& s : spec.explicit_strings)
        population.strings.push_back(Bits::from_string(s));
    }
    population.probs = spec.mixture;

    TrialRecord record;
    record.trial = trial;
    record.seed = trial_seed;
    record.truth = population.as_distribution();
    record.result = recover_population(spec.pipeline, spec.channel, population, rng);
    record.status = record.result.status;
    record.metrics = evaluate_run(record.result, population);
    record.tv = record.metrics.tv;
    batch.trials.push_back(std::move(record));
  }
  return batch;
}

std::string aggregate_csv_header() {
  return "scenario,sweep_axis,sweep_value,trials,ok,success_rate,mean_tv,max_tv,"
         "clique_failures,all_small,reconstruction_failures,mean_false_split_rate,"
         "mean_false_merge_rate,seed";
}

namespace {

ordered_json trial_to_json(const TrialRecord& record) {
  ordered_json j;
  j["trial"] = record.trial;
  j["seed"] = record.seed;
  j["status"] = to_string(record.status);
  j["tv"] = record.tv;
  j["precision"] = record.metrics.precision;
  j["recall"] = record.metrics.recall;
  j["traces"] = record.result.traces_drawn;
  j["clusters_found"] = record.result.clusters_found;
  j["clusters_large"] = record.result.clusters_large;
  j["clique_check_passed"] = record.result.clique_check_passed;
  j["clique_violations"] = record.result.clique_violations;
  j["clusters_dropped"] = record.result.clusters_dropped;
  j["same_pairs"] = record.metrics.same_pairs;
  j["diff_pairs"] = record.metrics.diff_pairs;
  j["same_labeled_different"] = record.metrics.same_labeled_different;
  j["diff_labeled_same"] = record.metrics.diff_labeled_same;
  ordered_json clusters = ordered_json::array();
  for (const auto& c : record.result.per_cluster) {
    clusters.push_back({{"size", c.size},
                        {"large", c.large},
                        {"reconstructed", c.reconstructed},
                        {"value", c.value}});
  }
  j["clusters"] = clusters;
  if (record.result.distribution)
    j["distribution"] = json::parse(distribution_to_json(*record.result.distribution));
  j["truth"] = json::parse(distribution_to_json(record.truth));
  return j;
}

std::string aggregate_row(const BatchResult& batch) {
  const auto& trials = batch.trials;
  std::uint64_t ok = 0, clique_failures = 0, all_small = 0, rec_failures = 0;
  double tv_sum = 0.0, tv_max = 0.0, split_sum = 0.0, merge_sum = 0.0;
  std::uint64_t scored = 0;
  for (const auto& t : trials) {
    switch (t.status) {
      case PipelineStatus::Ok:
        ++ok;
        tv_sum += t.tv;
        tv_max = std::max(tv_max, t.tv);
        ++scored;
        break;
      case PipelineStatus::CliqueCheckFailed:
        ++clique_failures;
        break;
      case PipelineStatus::AllClustersSmall:
        ++all_small;
        break;
      case PipelineStatus::ReconstructionFailed:
        ++rec_failures;
        break;
    }
    const double same_total = static_cast<double>(t.metrics.same_pairs);
    const double diff_total = static_cast<double>(t.metrics.diff_pairs);
    if (same_total > 0)
      split_sum += static_cast<double>(t.metrics.same_labeled_different) / same_total;
    if (diff_total > 0)
      merge_sum += static_cast<double>(t.metrics.diff_labeled_same) / diff_total;
  }
  const double count = static_cast<double>(trials.size());
  std::ostringstream row;
  row << batch.spec.scenario << ',';
  row << (batch.sweep_value ? "value" : "none") << ',';
  row << (batch.sweep_value ? fmt_double(*batch.sweep_value) : "0") << ',';
  row << trials.size() << ',' << ok << ',' << fmt_double(static_cast<double>(ok) / count)
      << ',' << fmt_double(scored ? tv_sum / static_cast<double>(scored) : 1.0) << ','
      << fmt_double(tv_max) << ',' << clique_failures << ',' << all_small << ','
      << rec_failures << ',' << fmt_double(split_sum / count) << ','
      << fmt_double(merge_sum / count) << ',' << batch.spec.seed;
  return row.str();
}

}  // namespace

ExperimentOutput run_experiment(const LoadedSpec& loaded, const std::string& out_dir) {
  fs::create_directories(out_dir);

  std::vector<ExperimentSpec> specs;
  std::vector<std::optional<double>> sweep_values;
  if (loaded.sweep) {
    for (const auto v : loaded.sweep->values) {
      specs.push_back(apply_axis(loaded.sweep->base, loaded.sweep->axis, v));
      sweep_values.emplace_back(v);
    }
  } else {
    specs.push_back(loaded.experiment);
    sweep_values.emplace_back(std::nullopt);
  }

  // Manifest: the fully resolved configuration for exact replay.
  {
    ordered_json manifest;
    manifest["spec"] = json::parse(spec_to_json(loaded.experiment));
    if (loaded.sweep) {
      manifest["sweep"] = {{"axis", loaded.sweep->axis},
                           {"values", loaded.sweep->values}};
    }
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
  }

  ExperimentOutput output;
  std::ofstream csv(fs::path(out_dir) / "aggregate.csv", std::ios::binary);
  std::ofstream timings(fs::path(out_dir) / "timings.csv", std::ios::binary);
  csv << aggregate_csv_header() << "\n";
  timings << "scenario,sweep_value,trial,generate_ms,cluster_ms,partition_ms,"
             "reconstruct_ms,total_ms\n";

  for (std::size_t b = 0; b < specs.size(); ++b) {
    BatchResult batch = run_batch(specs[b]);
    batch.sweep_value = sweep_values[b];
    csv << aggregate_row(batch) << "\n";
    for (const auto& record : batch.trials) {
      std::ostringstream name;
      name << "trial";
      if (batch.sweep_value) name << "_v" << b;
      name << "_" << record.trial << ".json";
      std::ofstream out(fs::path(out_dir) / name.str(), std::ios::binary);
      out << trial_to_json(record).dump(2) << "\n";
      timings << specs[b].scenario << ','
              << (batch.sweep_value ? fmt_double(*batch.sweep_value) : "0") << ','
              << record.trial << ',' << fmt_double(record.result.wall.generate_ms)
              << ',' << fmt_double(record.result.wall.cluster_ms) << ','
              << fmt_double(record.result.wall.partition_ms) << ','
              << fmt_double(record.result.wall.reconstruct_ms) << ','
              << fmt_double(record.result.wall.total_ms) << "\n";
      if (specs[b].dump_verdicts && record.result.verdicts) {
        std::ostringstream vname;
        vname << "verdicts";
        if (batch.sweep_value) vname << "_v" << b;
        vname << "_" << record.trial << ".csv";
        write_verdict_csv((fs::path(out_dir) / vname.str()).string(),
                          *record.result.verdicts);
      }
      if (record.status != PipelineStatus::Ok && specs[b].pipeline.strict)
        output.any_failure = true;
    }
    output.batches.push_back(std::move(batch));
  }
  return output;
}

bool self_audit(const std::string& out_dir, std::string* message) {
  std::ifstream csv(fs::path(out_dir) / "aggregate.csv");
  if (!csv) {
    if (message) *message = "missing aggregate.csv";
    return false;
  }
  std::string header;
  std::getline(csv, header);
  if (header != aggregate_csv_header()) {
    if (message) *message = "unexpected aggregate.csv header";
    return false;
  }

  std::vector<std::string> rows;
  std::string line;
  while (std::getline(csv, line)) {
    if (!line.empty()) rows.push_back(line);
  }

  std::size_t batch_index = 0;
  for (const auto& row : rows) {
    std::vector<std::string> fields;
    std::stringstream ss(row);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 14) {
      if (message) *message = "bad column count in aggregate.csv";
      return false;
    }
    const auto trials = std::stoull(fields[3]);
    std::uint64_t ok = 0;
    double tv_sum = 0.0;
    std::uint64_t scored = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      std::ostringstream name;
      name << "trial";
      if (fields[1] == "value") name << "_v" << batch_index;
      name << "_" << t << ".json";
      std::ifstream in(fs::path(out_dir) / name.str());
      if (!in) {
        if (message) *message = "missing per-trial file " + name.str();
        return false;
      }
      const json j = json::parse(in);
      if (j.at("status").get<std::string>() == "ok") {
        ++ok;
        tv_sum += j.at("tv").get<double>();
        ++scored;
      }
    }
    if (std::stoull(fields[4]) != ok) {
      if (message) *message = "ok-count mismatch in row: " + row;
      return false;
    }
    const double mean_tv = scored ? tv_sum / static_cast<double>(scored) : 1.0;
    if (std::abs(std::stod(fields[6]) - mean_tv) > 1e-9) {
      if (message) *message = "mean-tv mismatch in row: " + row;
      return false;
    }
    ++batch_index;
  }
  if (message) *message = "ok";
  return true;
}

}  // namespace poprec
