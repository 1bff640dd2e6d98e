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

#include "metricgen/run_config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

#include "metricgen/errors.h"
#include "metricgen/random.h"

namespace metricgen {

namespace {

constexpr std::uint64_t kSurrogateSeedTag = 0x737572;

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T ParseNumber(std::string_view key, std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(fmt::format("{}: cannot parse '{}' as a number", key, text));
  }
  return value;
}

std::string FormatDouble(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

bool ParseBool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, text));
}

OptimizerKind ParseOptimizer(std::string_view key, std::string_view text) {
  if (text == "adam") return OptimizerKind::kAdam;
  if (text == "sgd") return OptimizerKind::kSgd;
  throw ConfigError(fmt::format("{}: expected adam or sgd, got '{}'", key, text));
}

const char* OptimizerName(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

std::vector<double> ParsePool(std::string_view key, std::string_view text) {
  std::vector<double> pool;
  while (!text.empty()) {
    const auto comma = text.find(',');
    pool.push_back(ParseNumber<double>(key, Trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return pool;
}

std::string FormatPool(const std::vector<double>& pool) {
  std::string out;
  for (size_t i = 0; i < pool.size(); ++i) {
    if (i > 0) out += ',';
    out += FormatDouble(pool[i]);
  }
  return out;
}

struct Entry {
  RunConfigKey key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

#define MG_STRING(name, field, help)                                          \
  Entry{{name, help}, [](const RunConfig& c) { return c.field; },            \
        [](RunConfig& c, std::string_view v) { c.field = std::string(v); }}
#define MG_NUMBER(name, type, field, help)                                    \
  Entry{{name, help}, [](const RunConfig& c) { return fmt::format("{}", c.field); }, \
        [](RunConfig& c, std::string_view v) { c.field = ParseNumber<type>(name, v); }}
#define MG_DOUBLE(name, field, help)                                          \
  Entry{{name, help}, [](const RunConfig& c) { return FormatDouble(c.field); }, \
        [](RunConfig& c, std::string_view v) { c.field = ParseNumber<double>(name, v); }}
#define MG_BOOL(name, field, help)                                            \
  Entry{{name, help}, [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }, \
        [](RunConfig& c, std::string_view v) { c.field = ParseBool(name, v); }}
#define MG_OPTIMIZER(name, field, help)                                       \
  Entry{{name, help}, [](const RunConfig& c) { return std::string(OptimizerName(c.field)); }, \
        [](RunConfig& c, std::string_view v) { c.field = ParseOptimizer(name, v); }}

const std::vector<Entry>& Entries() {
  static const std::vector<Entry> entries = {
      MG_STRING("train_path", train_path, "training adjacency file"),
      MG_STRING("test_path", test_path, "test adjacency file"),
      MG_STRING("valid_path", valid_path, "validation adjacency file; empty splits train"),
      MG_DOUBLE("valid_fraction", valid_fraction, "share of each user's train items held out"),
      MG_STRING("output_dir", output_dir, "run directory; empty uses the output root"),
      MG_NUMBER("seed", std::uint64_t, seed, "master seed"),
      MG_NUMBER("parallelism", int, parallelism, "concurrent fitness evaluations"),
      Entry{{"strategy", "es | sur | full | random"},
            [](const RunConfig& c) { return c.strategy; },
            [](RunConfig& c, std::string_view v) {
              if (v != "random" && !StrategyFromName(v)) {
                throw ConfigError(fmt::format("strategy: unknown strategy '{}'", v));
              }
              c.strategy = std::string(v);
            }},
      MG_NUMBER("budget", int, budget, "random-search candidates; 0 matches evolution"),
      MG_NUMBER("population", int, evolution.population, "population size N"),
      MG_NUMBER("generations", int, evolution.generations, "generations T"),
      MG_DOUBLE("gamma", evolution.gamma, "mutation ratio"),
      MG_NUMBER("stop_epochs", int, evolution.stop_epochs, "early-stop training epochs"),
      MG_NUMBER("full_epochs", int, evolution.full_epochs, "full training epoch cap"),
      MG_NUMBER("full_patience", int, evolution.full_patience, "full training patience"),
      MG_BOOL("mec", evolution.use_mec, "deduplicate equivalent metrics"),
      MG_DOUBLE("mec_delta", evolution.mec.delta, "equivalence tolerance"),
      MG_NUMBER("mec_probes", int, evolution.mec.num_probes, "equivalence probe pairs"),
      MG_NUMBER("mec_rounds", int, evolution.mec.max_rounds, "dedup replacement rounds"),
      MG_NUMBER("max_depth", int, generation.max_depth, "graph depth limit (1-6)"),
      Entry{{"constant_pool", "comma-separated scale constants"},
            [](const RunConfig& c) { return FormatPool(c.generation.constant_pool); },
            [](RunConfig& c, std::string_view v) {
              c.generation.constant_pool = ParsePool("constant_pool", v);
            }},
      MG_DOUBLE("leaf_probability", generation.leaf_probability, "early leaf chance"),
      MG_NUMBER("dim", int, train.dim, "embedding dimension"),
      MG_DOUBLE("lr", train.learning_rate, "encoder learning rate"),
      MG_DOUBLE("weight_decay", train.weight_decay, "L2 coefficient"),
      MG_NUMBER("batch_size", int, train.batch_size, "BPR triplets per step"),
      MG_DOUBLE("init_scale", train.init_scale, "embedding init standard deviation"),
      MG_OPTIMIZER("optimizer", train.optimizer, "adam | sgd"),
      MG_NUMBER("eval_k", int, train.eval_k, "cutoff for Recall/NDCG"),
      MG_NUMBER("sur_embed", int, evolution.surrogate.embed_dim, "surrogate token embedding size"),
      MG_NUMBER("sur_hidden", int, evolution.surrogate.hidden, "surrogate hidden size"),
      MG_NUMBER("sur_epochs", int, evolution.surrogate.epochs, "surrogate training epochs"),
      MG_DOUBLE("sur_lr", evolution.surrogate.learning_rate, "surrogate learning rate"),
      MG_OPTIMIZER("sur_optimizer", evolution.surrogate.optimizer, "adam | sgd"),
      MG_NUMBER("sur_ensemble", int, evolution.surrogate.ensemble, "averaged surrogate members"),
      MG_NUMBER("sur_warmup", int, evolution.surrogate.warmup, "fully trained candidates before prediction"),
      MG_BOOL("sur_train_once", evolution.surrogate.train_once, "fit the surrogate only after warmup"),
  };
  return entries;
}

#undef MG_STRING
#undef MG_NUMBER
#undef MG_DOUBLE
#undef MG_BOOL
#undef MG_OPTIMIZER

}  // namespace

const std::vector<RunConfigKey>& RunConfigKeys() {
  static const std::vector<RunConfigKey> keys = [] {
    std::vector<RunConfigKey> out;
    for (const Entry& e : Entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

void ApplySetting(RunConfig& config, std::string_view key, std::string_view value) {
  for (const Entry& e : Entries()) {
    if (e.key.name == key) {
      e.set(config, Trim(value));
      return;
    }
  }
  throw ConfigError(fmt::format("unknown config key '{}'", key));
}

RunConfig ParseRunConfig(std::string_view text, RunConfig base) {
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    }
    try {
      ApplySetting(base, Trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return base;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseRunConfig(buf.str());
}

std::string EchoRunConfig(const RunConfig& config) {
  std::string out = "# metricgen run configuration\n";
  for (const Entry& e : Entries()) out += fmt::format("{} = {}\n", e.key.name, e.get(config));
  return out;
}

bool SameRunConfig(const RunConfig& a, const RunConfig& b) {
  return EchoRunConfig(a) == EchoRunConfig(b);
}

void RunConfig::Check() const {
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) {
    throw ConfigError("valid_fraction must be in (0, 1)");
  }
  if (strategy != "random" && !StrategyFromName(strategy)) {
    throw ConfigError(fmt::format("unknown strategy '{}'", strategy));
  }
  if (budget < 0) throw ConfigError("budget must be >= 0");
  EffectiveEvolution().Check();
  EffectiveGeneration().Check();
  EffectiveTrain().Check();
}

EvolutionConfig RunConfig::EffectiveEvolution() const {
  EvolutionConfig evo = evolution;
  evo.seed = seed;
  evo.parallelism = parallelism;
  evo.surrogate.seed = DeriveSeed(seed, {kSurrogateSeedTag});
  if (auto s = StrategyFromName(strategy)) evo.strategy = *s;
  return evo;
}

GenerationConfig RunConfig::EffectiveGeneration() const {
  GenerationConfig gen = generation;
  gen.seed = seed;
  return gen;
}

TrainConfig RunConfig::EffectiveTrain() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

int RunConfig::EffectiveBudget() const {
  return budget > 0 ? budget : EffectiveEvolution().CandidateBudget();
}

InteractionDataset LoadRunDataset(const RunConfig& config) {
  if (config.train_path.empty()) throw FormatError(0, "train_path is not set");
  InteractionDataset ds = LoadAdjacency(config.train_path, config.test_path, config.valid_path);
  if (!config.valid_path.empty()) return ds;
  return SplitValidation(ds, config.valid_fraction, config.seed);
}

}  // namespace metricgen
