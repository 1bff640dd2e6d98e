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

#ifndef METRICGEN_EVOLUTION_H_
#define METRICGEN_EVOLUTION_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "metricgen/dataset.h"
#include "metricgen/equivalence.h"
#include "metricgen/metric_graph.h"
#include "metricgen/ranking.h"
#include "metricgen/surrogate.h"
#include "metricgen/trainer.h"

namespace metricgen {

enum class FitnessKind { kEarlyStop, kSurrogate, kFull };
enum class MutationKind { kNone, kInsertion, kDeletion, kReplacement, kRandom };
enum class Strategy { kEarlyStop, kSurrogate, kFull };

const char* FitnessKindName(FitnessKind kind);
const char* MutationKindName(MutationKind kind);
const char* StrategyName(Strategy strategy);
std::optional<Strategy> StrategyFromName(std::string_view name);

inline constexpr double kDegenerateFitness = -std::numeric_limits<double>::infinity();

struct CandidateRecord {
  int id = -1;
  MetricGraph graph = InnerProductMetric();
  double fitness = kDegenerateFitness;
  bool evaluated = false;
  FitnessKind fitness_kind = FitnessKind::kEarlyStop;
  int generation = 0;
  int parent = -1;
  MutationKind mutation = MutationKind::kNone;
  int cost_epochs = 0;

  bool degenerate() const { return evaluated && fitness == kDegenerateFitness; }
};

struct EvolutionConfig {
  int population = 50;
  int generations = 100;
  double gamma = 0.7;
  Strategy strategy = Strategy::kEarlyStop;
  int stop_epochs = 10;
  // Full training: up to full_epochs with patience on validation NDCG.
  int full_epochs = 100;
  int full_patience = 10;
  SurrogateConfig surrogate;
  EquivalenceConfig mec;
  bool use_mec = true;
  std::uint64_t seed = 0;
  int parallelism = 1;

  void Check() const;
  // ceil(gamma * N).
  int OffspringCount() const;
  // N + T * ceil(gamma * N): the candidate budget of a full search.
  int CandidateBudget() const;
};

// ---- Mutations -----------------------------------------------------------

struct MutationResult {
  MetricGraph graph;
  bool noop = false;
};

inline constexpr int kMutationRetries = 20;

// Deterministic building blocks. Each returns nullopt if the edit would
// break a metric invariant.
std::optional<MetricGraph> InsertAbove(const MetricGraph& graph, int node, Symbol op,
                                       double constant, Symbol extra_leaf);
std::optional<MetricGraph> DeleteNode(const MetricGraph& graph, int node, int kept_child);
std::optional<MetricGraph> ReplaceOperator(const MetricGraph& graph, int node, Symbol op,
                                           double constant, Symbol extra_leaf, int dropped_child);

// Random mutations; after kMutationRetries failed attempts the input is
// returned unchanged with noop set.
MutationResult MutateInsertion(const MetricGraph& graph, const GenerationConfig& config, Rng& rng);
MutationResult MutateDeletion(const MetricGraph& graph, const GenerationConfig& config, Rng& rng);
MutationResult MutateReplacement(const MetricGraph& graph, const GenerationConfig& config, Rng& rng);
MutationResult Mutate(MutationKind kind, const MetricGraph& graph, const GenerationConfig& config,
                      Rng& rng);

// ---- Fitness ---------------------------------------------------------------

struct FitnessValue {
  double fitness = kDegenerateFitness;
  FitnessKind kind = FitnessKind::kEarlyStop;
  int cost_epochs = 0;
};

// Validation NDCG@eval_k after `epochs` of training (patience as in
// `train`); degenerate training maps to kDegenerateFitness.
FitnessValue TrainedFitness(const MetricGraph& metric, const InteractionDataset& ds,
                            const TrainConfig& train, int epochs, int patience, FitnessKind kind);

// Early-stop or full-training fitness for one candidate.
FitnessValue EvaluateFitness(const MetricGraph& metric, Strategy strategy,
                             const EvolutionConfig& evo, const InteractionDataset& ds,
                             const TrainConfig& train);

// Runs fn(0..n-1) on up to `parallelism` threads.
// One full training (full_epochs, full_patience) followed by validation and
// test evaluation. valid_fitness is -inf for a degenerate metric.
struct FullTrainingReport {
  double valid_fitness = kDegenerateFitness;
  EvalReport valid;
  EvalReport test;
  int epochs = 0;
};

FullTrainingReport FullyTrain(const MetricGraph& metric, const InteractionDataset& ds,
                              const EvolutionConfig& evo, const TrainConfig& train);

void ParallelFor(int n, int parallelism, const std::function<void(int)>& fn);

// Orders by fitness (descending), then generation, then id; keeps N.
std::vector<CandidateRecord> SelectTopN(std::vector<CandidateRecord> pool, int n);

// ---- Search ----------------------------------------------------------------

struct GenerationLog {
  int generation = 0;
  std::vector<CandidateRecord> population;  // after selection, best first
  double best_fitness = kDegenerateFitness;
};

struct SearchStats {
  int candidates_evaluated = 0;
  int full_trainings = 0;
  int surrogate_predictions = 0;
  long long epochs_consumed = 0;
  int mutation_noops = 0;
  int mec_replacements = 0;
  double wall_seconds = 0.0;
};

struct SearchResult {
  std::string method;  // "evolution" or "random"
  Strategy strategy = Strategy::kEarlyStop;
  CandidateRecord best;
  double best_full_fitness = kDegenerateFitness;  // validation NDCG after full training
  EvalReport best_valid;
  EvalReport best_test;
  std::vector<GenerationLog> history;
  SearchStats stats;
  std::optional<SurrogateEnsemble> surrogate;
  SurrogateDataset surrogate_data;
};

// Stateful fitness oracle shared by the evolutionary and random searches:
// handles the early-stop, full and surrogate strategies (the latter with
// its warmup and per-generation refresh).
class FitnessEngine {
 public:
  FitnessEngine(const InteractionDataset& ds, const EvolutionConfig& evo,
                const TrainConfig& train, const GenerationConfig& gen);

  // Evaluates every unevaluated record in place.
  void EvaluateBatch(std::vector<CandidateRecord>& records);
  // Surrogate strategy: fully trains the best predicted record of the batch,
  // adds it to the surrogate data and refreshes the model.
  void RefreshSurrogate(std::vector<CandidateRecord>& batch);

  const SearchStats& stats() const { return stats_; }
  SearchStats& stats() { return stats_; }
  const std::optional<SurrogateEnsemble>& surrogate() const { return model_; }
  const SurrogateDataset& surrogate_data() const { return data_; }

 private:
  void Account(const CandidateRecord& r);
  void FitSurrogate();

  const InteractionDataset& ds_;
  EvolutionConfig evo_;
  TrainConfig train_;
  TokenVocabulary vocab_;
  SurrogateDataset data_;
  std::optional<SurrogateEnsemble> model_;
  SearchStats stats_;
};

std::vector<CandidateRecord> InitPopulation(const EvolutionConfig& evo, const GenerationConfig& gen,
                                            const ProbeSet& probes, int* next_id,
                                            SearchStats* stats = nullptr);

std::vector<CandidateRecord> GenerateOffspring(const std::vector<CandidateRecord>& population,
                                               const EvolutionConfig& evo,
                                               const GenerationConfig& gen, const ProbeSet& probes,
                                               int generation, int* next_id,
                                               SearchStats* stats = nullptr);

using GenerationCallback = std::function<void(const GenerationLog&)>;

SearchResult RunSearch(const InteractionDataset& ds, const EvolutionConfig& evo,
                       const GenerationConfig& gen, const TrainConfig& train,
                       const GenerationCallback& on_generation = {});

SearchResult RandomSearch(const InteractionDataset& ds, int budget, const EvolutionConfig& evo,
                          const GenerationConfig& gen, const TrainConfig& train);

}  // namespace metricgen

#endif  // METRICGEN_EVOLUTION_H_
