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

// Probe-based metric equivalence: two metrics are the same candidate when
// their scores agree within an absolute tolerance on every pair of a fixed
// random probe set.

#ifndef METRICGEN_EQUIVALENCE_H_
#define METRICGEN_EQUIVALENCE_H_

#include <cstdint>
#include <vector>

#include "metricgen/matrix.h"
#include "metricgen/metric_graph.h"
#include "metricgen/random.h"

namespace metricgen {

struct EquivalenceConfig {
  double delta = 1e-6;
  int num_probes = 64;
  int max_rounds = 10;  // dedup replacement rounds before dropping

  void Check() const;
};

// K user/item pairs drawn i.i.d. standard normal. Immutable once built.
class ProbeSet {
 public:
  ProbeSet(int num_probes, int dim, std::uint64_t seed);
  ProbeSet(Matrix users, Matrix items);

  int size() const { return static_cast<int>(users_.rows()); }
  int dim() const { return static_cast<int>(users_.cols()); }
  const Matrix& users() const { return users_; }
  const Matrix& items() const { return items_; }

 private:
  Matrix users_;
  Matrix items_;
};

struct ScoreVector {
  std::vector<double> scores;
  bool finite = true;
};

ScoreVector ComputeScoreVector(const MetricGraph& graph, const ProbeSet& probes);

// Both vectors must be finite; a non-finite vector is never equivalent to
// anything, itself included.
bool Equivalent(const ScoreVector& a, const ScoreVector& b, double delta);
bool Equivalent(const MetricGraph& a, const MetricGraph& b, const ProbeSet& probes,
                const EquivalenceConfig& config);

// Replaces one member of every equivalent (or non-finite) pair with a
// fresh random graph until the population is duplicate free or the round
// budget runs out; leftovers are dropped, so the result may be shorter.
std::vector<MetricGraph> Dedup(std::vector<MetricGraph> population, const ProbeSet& probes,
                               const EquivalenceConfig& config,
                               const GenerationConfig& generation, Rng& rng);

struct DedupEntry {
  MetricGraph graph;
  int source = -1;  // index in the input, -1 for a fresh replacement
};

// Dedup() that also keeps every survivor distinct from `fixed`, whose
// members are never replaced, and reports where each survivor came from.
std::vector<DedupEntry> DedupAgainst(std::vector<MetricGraph> candidates,
                                     const std::vector<ScoreVector>& fixed,
                                     const ProbeSet& probes, const EquivalenceConfig& config,
                                     const GenerationConfig& generation, Rng& rng);

}  // namespace metricgen

#endif  // METRICGEN_EQUIVALENCE_H_
