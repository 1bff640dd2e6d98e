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

#ifndef METRICGEN_RUN_CONFIG_H_
#define METRICGEN_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "metricgen/dataset.h"
#include "metricgen/evolution.h"
#include "metricgen/metric_graph.h"
#include "metricgen/trainer.h"

namespace metricgen {

// Every knob of a search run. The master seed feeds generation, training,
// MEC probes and the surrogate; the per-module seed fields are derived.
struct RunConfig {
  std::string train_path;
  std::string test_path;
  std::string valid_path;  // empty: carve validation out of train
  double valid_fraction = 0.1;
  std::string output_dir;  // empty: a seed-named directory under the output root
  std::uint64_t seed = 0;
  int parallelism = 1;
  std::string strategy = "es";  // es | sur | full | random
  int budget = 0;               // random search; 0 means N + T * ceil(gamma * N)

  EvolutionConfig evolution;
  GenerationConfig generation;
  TrainConfig train;

  // Throws ConfigError.
  void Check() const;

  // Sub-configurations with the master seed and parallelism applied.
  EvolutionConfig EffectiveEvolution() const;
  GenerationConfig EffectiveGeneration() const;
  TrainConfig EffectiveTrain() const;
  int EffectiveBudget() const;
  bool random_search() const { return strategy == "random"; }
};

struct RunConfigKey {
  std::string name;
  std::string help;
};

// All recognised keys in echo order.
const std::vector<RunConfigKey>& RunConfigKeys();

// Sets one key from its text form. Throws ConfigError on an unknown key or a
// malformed value.
void ApplySetting(RunConfig& config, std::string_view key, std::string_view value);

// "key = value" lines, '#' comments, blank lines ignored. Throws ConfigError
// naming the line.
RunConfig ParseRunConfig(std::string_view text, RunConfig base = {});
RunConfig LoadRunConfig(const std::filesystem::path& path);

// Every key with its effective value; ParseRunConfig(EchoRunConfig(c))
// reproduces c exactly.
std::string EchoRunConfig(const RunConfig& config);

bool SameRunConfig(const RunConfig& a, const RunConfig& b);

// Loads train/test (and valid, or a seeded split of train).
InteractionDataset LoadRunDataset(const RunConfig& config);

}  // namespace metricgen

#endif  // METRICGEN_RUN_CONFIG_H_
