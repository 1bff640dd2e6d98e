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

#include "metricgen/equivalence.h"

#include <cmath>

#include "metricgen/errors.h"
#include "metricgen/evaluator.h"

namespace metricgen {

void EquivalenceConfig::Check() const {
  if (!(delta > 0.0)) throw ConfigError("mec delta must be positive");
  if (num_probes < 1) throw ConfigError("mec probe count must be >= 1");
  if (max_rounds < 0) throw ConfigError("mec max_rounds must be >= 0");
}

ProbeSet::ProbeSet(int num_probes, int dim, std::uint64_t seed)
    : users_(static_cast<size_t>(num_probes), static_cast<size_t>(dim)),
      items_(static_cast<size_t>(num_probes), static_cast<size_t>(dim)) {
  if (num_probes < 1 || dim < 1) throw ConfigError("probe set needs K >= 1 and d >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < num_probes; ++k) {
    for (double& x : users_.row(static_cast<size_t>(k))) x = normal(rng);
    for (double& x : items_.row(static_cast<size_t>(k))) x = normal(rng);
  }
}

ProbeSet::ProbeSet(Matrix users, Matrix items) : users_(std::move(users)), items_(std::move(items)) {
  if (users_.rows() != items_.rows() || users_.cols() != items_.cols() || users_.rows() == 0) {
    throw DimensionMismatch("probe user/item matrices must be non-empty and equally shaped");
  }
}

ScoreVector ComputeScoreVector(const MetricGraph& graph, const ProbeSet& probes) {
  ScoreVector out;
  out.scores.resize(static_cast<size_t>(probes.size()));
  EvalWorkspace ws(probes.dim());
  GraphEvaluator eval(graph);
  for (int k = 0; k < probes.size(); ++k) {
    const size_t r = static_cast<size_t>(k);
    out.finite &= eval.Forward(probes.users().row(r), probes.items().row(r), ws, &out.scores[r]);
  }
  return out;
}

bool Equivalent(const ScoreVector& a, const ScoreVector& b, double delta) {
  if (!a.finite || !b.finite || a.scores.size() != b.scores.size()) return false;
  for (size_t k = 0; k < a.scores.size(); ++k) {
    if (!(std::abs(a.scores[k] - b.scores[k]) < delta)) return false;
  }
  return true;
}

bool Equivalent(const MetricGraph& a, const MetricGraph& b, const ProbeSet& probes,
                const EquivalenceConfig& config) {
  return Equivalent(ComputeScoreVector(a, probes), ComputeScoreVector(b, probes), config.delta);
}

std::vector<DedupEntry> DedupAgainst(std::vector<MetricGraph> candidates,
                                     const std::vector<ScoreVector>& fixed,
                                     const ProbeSet& probes, const EquivalenceConfig& config,
                                     const GenerationConfig& generation, Rng& rng) {
  const size_t n = candidates.size();
  std::vector<int> source(n);
  std::vector<ScoreVector> scores(n);
  for (size_t i = 0; i < n; ++i) {
    source[i] = static_cast<int>(i);
    scores[i] = ComputeScoreVector(candidates[i], probes);
  }
  auto clashes_fixed = [&](size_t i) {
    for (const ScoreVector& f : fixed) {
      if (Equivalent(scores[i], f, config.delta)) return true;
    }
    return false;
  };

  std::bernoulli_distribution coin(0.5);
  for (int round = 0; round < config.max_rounds; ++round) {
    std::vector<char> replace(n, 0);
    bool any = false;
    for (size_t i = 0; i < n; ++i) {
      if (!scores[i].finite || clashes_fixed(i)) {
        replace[i] = 1;
        any = true;
      }
    }
    for (size_t i = 0; i < n; ++i) {
      if (replace[i]) continue;
      for (size_t j = i + 1; j < n; ++j) {
        if (replace[j] || !Equivalent(scores[i], scores[j], config.delta)) continue;
        any = true;
        if (coin(rng)) {
          replace[i] = 1;
          break;
        }
        replace[j] = 1;
      }
    }
    if (!any) break;
    for (size_t i = 0; i < n; ++i) {
      if (!replace[i]) continue;
      candidates[i] = RandomGenerate(generation, rng);
      source[i] = -1;
      scores[i] = ComputeScoreVector(candidates[i], probes);
    }
  }

  // Whatever still clashes after the budget is dropped.
  std::vector<DedupEntry> out;
  std::vector<const ScoreVector*> kept;
  for (size_t i = 0; i < n; ++i) {
    if (!scores[i].finite || clashes_fixed(i)) continue;
    bool dup = false;
    for (const ScoreVector* k : kept) {
      if (Equivalent(scores[i], *k, config.delta)) {
        dup = true;
        break;
      }
    }
    if (dup) continue;
    kept.push_back(&scores[i]);
    out.push_back(DedupEntry{std::move(candidates[i]), source[i]});
  }
  return out;
}

std::vector<MetricGraph> Dedup(std::vector<MetricGraph> population, const ProbeSet& probes,
                               const EquivalenceConfig& config,
                               const GenerationConfig& generation, Rng& rng) {
  std::vector<DedupEntry> entries =
      DedupAgainst(std::move(population), {}, probes, config, generation, rng);
  std::vector<MetricGraph> out;
  out.reserve(entries.size());
  for (DedupEntry& e : entries) out.push_back(std::move(e.graph));
  return out;
}

}  // namespace metricgen
