// Copyright 2026 The metricgen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "metricgen/dataset.h"
#include "metricgen/equivalence.h"
#include "metricgen/errors.h"
#include "metricgen/evolution.h"
#include "metricgen/metric_graph.h"
#include "metricgen/ranking.h"
#include "metricgen/run_config.h"
#include "metricgen/run_directory.h"

namespace metricgen {

namespace {

namespace fs = std::filesystem;

constexpr const char* kOutputRootEnv = "METRICGEN_OUTPUT_ROOT";

fs::path OutputRoot() {
  const char* root = std::getenv(kOutputRootEnv);
  return root && *root ? fs::path(root) : fs::path("runs");
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(0, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Flags shared by search and eval.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
  std::string train_path;
  std::string test_path;
  std::string valid_path;
  std::vector<std::string> settings;

  void Register(CLI::App* app) {
    app->add_option("--config", config_path, "run configuration file");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--parallelism", parallelism, "concurrent fitness evaluations");
    app->add_option("--train", train_path, "training adjacency file");
    app->add_option("--test", test_path, "test adjacency file");
    app->add_option("--valid", valid_path, "validation adjacency file");
    app->add_option("--set", settings, "key=value override (repeatable)");
  }

  RunConfig Resolve() const {
    RunConfig config = config_path.empty() ? RunConfig{} : LoadRunConfig(config_path);
    if (seed) config.seed = *seed;
    if (parallelism) config.parallelism = *parallelism;
    if (!train_path.empty()) config.train_path = train_path;
    if (!test_path.empty()) config.test_path = test_path;
    if (!valid_path.empty()) config.valid_path = valid_path;
    for (const std::string& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects key=value, got '{}'", s));
      ApplySetting(config, s.substr(0, eq), s.substr(eq + 1));
    }
    return config;
  }
};

struct SearchFlags {
  ConfigFlags config;
  std::string strategy;
  std::optional<int> budget;
  std::string out_dir;
  bool quiet = false;
};

int CmdSearch(const SearchFlags& flags, std::ostream& out, std::ostream& err) {
  RunConfig config = flags.config.Resolve();
  if (!flags.strategy.empty()) ApplySetting(config, "strategy", flags.strategy);
  if (flags.budget) config.budget = *flags.budget;
  if (!flags.out_dir.empty()) config.output_dir = flags.out_dir;
  config.Check();
  const InteractionDataset ds = LoadRunDataset(config);

  const fs::path dir = config.output_dir.empty()
                           ? OutputRoot() / fmt::format("{}-seed{}", config.strategy, config.seed)
                           : fs::path(config.output_dir);
  BeginRunDirectory(dir, config);

  const EvolutionConfig evo = config.EffectiveEvolution();
  const GenerationConfig gen = config.EffectiveGeneration();
  const TrainConfig train = config.EffectiveTrain();
  SearchResult result;
  if (config.random_search()) {
    result = RandomSearch(ds, config.EffectiveBudget(), evo, gen, train);
  } else {
    result = RunSearch(ds, evo, gen, train, [&](const GenerationLog& log) {
      if (flags.quiet) return;
      err << fmt::format("generation {:>3}  best {:.6f}  {}\n", log.generation, log.best_fitness,
                         PrintExpr(log.population.front().graph));
    });
  }
  FinishRunDirectory(dir, config, result);
  out << fmt::format("run directory {}\nbest {}\nsearch fitness {}\nfull fitness {}\n",
                     dir.string(), PrintExpr(result.best.graph), result.best.fitness,
                     result.best_full_fitness);
  return kExitOk;
}

struct EvalFlags {
  ConfigFlags config;
  std::string metric;
  std::string metric_file;
  std::string json_path;
};

int CmdEval(const EvalFlags& flags, std::ostream& out) {
  if (flags.metric.empty() == flags.metric_file.empty()) {
    throw ConfigError("eval needs exactly one of --metric or --metric-file");
  }
  const std::string text = flags.metric.empty() ? ReadFile(flags.metric_file) : flags.metric;
  RunConfig config = flags.config.Resolve();
  config.Check();
  const MetricGraph metric = ParseExpr(text);
  const InteractionDataset ds = LoadRunDataset(config);
  const FullTrainingReport report =
      FullyTrain(metric, ds, config.EffectiveEvolution(), config.EffectiveTrain());
  if (!std::isfinite(report.valid_fitness)) {
    throw DegenerateCandidate(fmt::format("{} is degenerate under training", PrintExpr(metric)));
  }
  out << fmt::format("metric={}\nfull_fitness={}\nepochs={}\n", PrintExpr(metric),
                     report.valid_fitness, report.epochs);
  out << "[valid]\n" << report.valid.ToKeyValue() << "[test]\n" << report.test.ToKeyValue();
  if (!flags.json_path.empty()) {
    nlohmann::json doc = {{"metric", PrintExpr(metric)},
                          {"full_fitness", report.valid_fitness},
                          {"epochs", report.epochs},
                          {"valid", nlohmann::json::parse(report.valid.ToJson())},
                          {"test", nlohmann::json::parse(report.test.ToJson())}};
    std::ofstream(flags.json_path) << doc.dump(2) << "\n";
  }
  return kExitOk;
}

struct SynthFlags {
  SyntheticSpec spec;
  std::string out_dir;
};

int CmdSynth(const SynthFlags& flags, std::ostream& out) {
  flags.spec.Check();
  const fs::path dir = flags.out_dir.empty()
                           ? OutputRoot() / fmt::format("synth-seed{}", flags.spec.seed)
                           : fs::path(flags.out_dir);
  fs::create_directories(dir);
  const SyntheticData data = GenerateSynthetic(flags.spec);
  WriteAdjacency(data.dataset, dir);
  WriteSyntheticSidecar(flags.spec, dir);
  out << fmt::format("wrote {} users, {} items, {} train interactions to {}\n",
                     data.dataset.num_users(), data.dataset.num_items(),
                     data.dataset.num_interactions(Split::kTrain), dir.string());
  return kExitOk;
}

struct ReportFlags {
  std::string run_dir;
  std::vector<std::string> compare;
};

int CmdReport(const ReportFlags& flags, std::ostream& out) {
  if (!flags.compare.empty()) {
    out << RenderComparison(flags.compare[0], flags.compare[1]);
    return kExitOk;
  }
  if (flags.run_dir.empty()) throw ConfigError("report needs a run directory or --compare A B");
  out << RenderReport(flags.run_dir);
  return kExitOk;
}

struct MecFlags {
  std::string a;
  std::string b;
  EquivalenceConfig mec;
  int dim = 16;
  std::uint64_t seed = 0;
};

int CmdMecCheck(const MecFlags& flags, std::ostream& out) {
  flags.mec.Check();
  if (flags.dim < 1) throw ConfigError("--dim must be >= 1");
  const MetricGraph a = ParseExpr(flags.a);
  const MetricGraph b = ParseExpr(flags.b);
  const ProbeSet probes(flags.mec.num_probes, flags.dim, flags.seed);
  const ScoreVector sa = ComputeScoreVector(a, probes);
  const ScoreVector sb = ComputeScoreVector(b, probes);
  double gap = 0.0;
  for (size_t k = 0; k < sa.scores.size(); ++k) {
    gap = std::max(gap, std::abs(sa.scores[k] - sb.scores[k]));
  }
  const bool same = Equivalent(sa, sb, flags.mec.delta);
  out << fmt::format("{}\nmax_abs_difference={}\n", same ? "equivalent" : "distinct",
                     sa.finite && sb.finite ? fmt::format("{}", gap) : std::string("nan"));
  return kExitOk;
}

int ExitCodeFor(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const UnknownToken*>(&e)) {
    return kExitUsage;
  }
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const EmptyDatasetError*>(&e) ||
      dynamic_cast<const IncompleteRun*>(&e)) {
    return kExitData;
  }
  return kExitRuntime;
}

const char* ErrorKind(int code) {
  switch (code) {
    case kExitUsage:
      return "config error";
    case kExitData:
      return "data error";
    default:
      return "runtime error";
  }
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evolutionary search over similarity metrics for recommendation", "metricgen"};
  app.require_subcommand(1);

  SearchFlags search;
  CLI::App* search_cmd = app.add_subcommand("search", "run an evolutionary or random search");
  search.config.Register(search_cmd);
  search_cmd->add_option("--strategy", search.strategy, "es | sur | full | random");
  search_cmd->add_option("--budget", search.budget, "random-search candidate budget");
  search_cmd->add_option("--out", search.out_dir, "run directory");
  search_cmd->add_flag("--quiet", search.quiet, "no per-generation progress");

  EvalFlags eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "fully train one metric and report Top-K metrics");
  eval.config.Register(eval_cmd);
  eval_cmd->add_option("--metric", eval.metric, "metric expression");
  eval_cmd->add_option("--metric-file", eval.metric_file, "file holding a metric expression");
  eval_cmd->add_option("--json", eval.json_path, "also write the reports as JSON");

  SynthFlags synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "write a planted-metric synthetic dataset");
  synth_cmd->add_option("--users", synth.spec.num_users, "number of users")->capture_default_str();
  synth_cmd->add_option("--items", synth.spec.num_items, "number of items")->capture_default_str();
  synth_cmd->add_option("--dim", synth.spec.dim, "planted embedding dimension")->capture_default_str();
  synth_cmd->add_option("--m", synth.spec.interactions_per_user, "interactions per user")
      ->capture_default_str();
  synth_cmd->add_option("--noise", synth.spec.noise, "replacement probability")->capture_default_str();
  synth_cmd->add_option("--metric", synth.spec.metric, "planted metric")->capture_default_str();
  synth_cmd->add_option("--seed", synth.spec.seed, "seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out_dir, "output directory");

  ReportFlags report;
  CLI::App* report_cmd = app.add_subcommand("report", "summarize a completed run directory");
  report_cmd->add_option("run_dir", report.run_dir, "run directory");
  report_cmd->add_option("--compare", report.compare, "two run directories")->expected(2);

  MecFlags mec;
  CLI::App* mec_cmd = app.add_subcommand("mec-check", "probe-based equivalence of two metrics");
  mec_cmd->add_option("a", mec.a, "first expression")->required();
  mec_cmd->add_option("b", mec.b, "second expression")->required();
  mec_cmd->add_option("--delta", mec.mec.delta, "tolerance")->capture_default_str();
  mec_cmd->add_option("--probes", mec.mec.num_probes, "probe pairs")->capture_default_str();
  mec_cmd->add_option("--dim", mec.dim, "probe dimension")->capture_default_str();
  mec_cmd->add_option("--seed", mec.seed, "probe seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*search_cmd) return CmdSearch(search, out, err);
    if (*eval_cmd) return CmdEval(eval, out);
    if (*synth_cmd) return CmdSynth(synth, out);
    if (*report_cmd) return CmdReport(report, out);
    if (*mec_cmd) return CmdMecCheck(mec, out);
  } catch (const std::exception& e) {
    const int code = ExitCodeFor(e);
    err << fmt::format("metricgen: {}: {}\n", ErrorKind(code), e.what());
    return code;
  }
  return kExitUsage;
}

}  // namespace metricgen
