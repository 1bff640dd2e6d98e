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

#include "metricgen/evolution.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "metricgen/errors.h"

namespace metricgen {

namespace {

// Seed-derivation tags.
constexpr std::uint64_t kProbeTag = 0x70726f6265;
constexpr std::uint64_t kInitTag = 0x696e6974;
constexpr std::uint64_t kParentTag = 0x706172;
constexpr std::uint64_t kMecTag = 0x6d6563;
constexpr std::uint64_t kTopUpTag = 0x746f70;
constexpr std::uint64_t kRandomTag = 0x726e64;

template <typename Container>
auto PickUniform(const Container& c, Rng& rng) {
  std::uniform_int_distribution<size_t> pick(0, std::size(c) - 1);
  return c[pick(rng)];
}

// Child-index path from the root to `node`.
std::vector<int> PathTo(const MetricGraph& g, int node) {
  std::vector<int> path;
  for (int id = node; g.node(id).parent >= 0; id = g.node(id).parent) {
    const Node& p = g.node(g.node(id).parent);
    path.push_back(p.children[0] == id ? 0 : 1);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

Expr& At(Expr& root, const std::vector<int>& path) {
  Expr* e = &root;
  for (int k : path) e = &e->children[static_cast<size_t>(k)];
  return *e;
}

std::optional<MetricGraph> Checked(const Expr& e, int max_depth) {
  MetricGraph g(e, max_depth);
  if (!Validate(g)) return std::nullopt;
  return g;
}

double PickConstant(Symbol op, const GenerationConfig& config, Rng& rng) {
  return op == Symbol::kScale ? PickUniform(config.constant_pool, rng) : 0.0;
}

std::vector<int> NodesWhere(const MetricGraph& g, bool (*pred)(const MetricGraph&, int)) {
  std::vector<int> ids;
  for (int id = 0; id < g.size(); ++id) {
    if (pred(g, id)) ids.push_back(id);
  }
  return ids;
}

// Non-root nodes whose subtree can move one level down without crossing
// the depth limit.
std::vector<int> InsertionSites(const MetricGraph& g) {
  std::vector<int> deepest(static_cast<size_t>(g.size()));
  // Children follow their parent in pre-order.
  for (int id = g.size() - 1; id >= 0; --id) {
    const Node& n = g.node(id);
    int d = n.depth;
    for (int k = 0; k < n.num_children; ++k) d = std::max(d, deepest[static_cast<size_t>(n.children[k])]);
    deepest[static_cast<size_t>(id)] = d;
  }
  std::vector<int> ids;
  for (int id = 1; id < g.size(); ++id) {
    if (deepest[static_cast<size_t>(id)] < g.max_depth()) ids.push_back(id);
  }
  return ids;
}

bool IsIntermediate(const MetricGraph& g, int id) {
  return id > 0 && IsOperator(g.node(id).symbol);
}

}  // namespace

const char* FitnessKindName(FitnessKind kind) {
  switch (kind) {
    case FitnessKind::kEarlyStop:
      return "early-stop";
    case FitnessKind::kSurrogate:
      return "surrogate";
    case FitnessKind::kFull:
      return "full";
  }
  return "?";
}

const char* MutationKindName(MutationKind kind) {
  switch (kind) {
    case MutationKind::kNone:
      return "init";
    case MutationKind::kInsertion:
      return "insertion";
    case MutationKind::kDeletion:
      return "deletion";
    case MutationKind::kReplacement:
      return "replacement";
    case MutationKind::kRandom:
      return "random";
  }
  return "?";
}

const char* StrategyName(Strategy strategy) {
  switch (strategy) {
    case Strategy::kEarlyStop:
      return "es";
    case Strategy::kSurrogate:
      return "sur";
    case Strategy::kFull:
      return "full";
  }
  return "?";
}

std::optional<Strategy> StrategyFromName(std::string_view name) {
  if (name == "es") return Strategy::kEarlyStop;
  if (name == "sur") return Strategy::kSurrogate;
  if (name == "full") return Strategy::kFull;
  return std::nullopt;
}

void EvolutionConfig::Check() const {
  if (population < 2) throw ConfigError("population size N must be >= 2");
  if (generations < 0) throw ConfigError("generations T must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("mutation ratio gamma must be in (0, 1]");
  if (stop_epochs < 0) throw ConfigError("stop epochs must be >= 0");
  if (full_epochs < 0) throw ConfigError("full epochs must be >= 0");
  if (full_patience < 0) throw ConfigError("full patience must be >= 0");
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  mec.Check();
  if (strategy == Strategy::kSurrogate) surrogate.Check();
}

int EvolutionConfig::OffspringCount() const {
  return static_cast<int>(std::ceil(gamma * static_cast<double>(population) - 1e-9));
}

int EvolutionConfig::CandidateBudget() const {
  return population + generations * OffspringCount();
}

// ---- Mutations -------------------------------------------------------------

std::optional<MetricGraph> InsertAbove(const MetricGraph& graph, int node, Symbol op,
                                       double constant, Symbol extra_leaf) {
  if (node <= 0 || node >= graph.size()) return std::nullopt;
  if (OutputKind(op) != ValueKind::kVector || IsLeaf(op)) return std::nullopt;
  Expr root = graph.ToExpr();
  Expr& slot = At(root, PathTo(graph, node));
  Expr inserted{op, op == Symbol::kScale ? constant : 0.0, {}};
  inserted.children.push_back(std::move(slot));
  if (Arity(op) == 2) inserted.children.push_back(Expr::Leaf(extra_leaf));
  slot = std::move(inserted);
  return Checked(root, graph.max_depth());
}

std::optional<MetricGraph> DeleteNode(const MetricGraph& graph, int node, int kept_child) {
  if (node <= 0 || node >= graph.size() || !IsOperator(graph.node(node).symbol)) return std::nullopt;
  const Node& n = graph.node(node);
  if (kept_child < 0 || kept_child >= n.num_children) return std::nullopt;
  // The parent consumes a vector, so the promoted child must produce one.
  if (OutputKind(graph.node(n.children[static_cast<size_t>(kept_child)]).symbol) != ValueKind::kVector) {
    return std::nullopt;
  }
  Expr root = graph.ToExpr();
  Expr& slot = At(root, PathTo(graph, node));
  Expr kept = std::move(slot.children[static_cast<size_t>(kept_child)]);
  slot = std::move(kept);
  return Checked(root, graph.max_depth());
}

std::optional<MetricGraph> ReplaceOperator(const MetricGraph& graph, int node, Symbol op,
                                           double constant, Symbol extra_leaf, int dropped_child) {
  if (node <= 0 || node >= graph.size() || !IsOperator(graph.node(node).symbol)) return std::nullopt;
  if (IsLeaf(op) || OutputKind(op) != ValueKind::kVector) return std::nullopt;
  Expr root = graph.ToExpr();
  Expr& slot = At(root, PathTo(graph, node));
  slot.symbol = op;
  slot.constant = op == Symbol::kScale ? constant : 0.0;
  const size_t want = static_cast<size_t>(Arity(op));
  if (slot.children.size() > want) {
    if (dropped_child < 0 || static_cast<size_t>(dropped_child) >= slot.children.size()) {
      return std::nullopt;
    }
    slot.children.erase(slot.children.begin() + dropped_child);
  }
  while (slot.children.size() < want) slot.children.push_back(Expr::Leaf(extra_leaf));
  return Checked(root, graph.max_depth());
}

MutationResult MutateInsertion(const MetricGraph& graph, const GenerationConfig& config, Rng& rng) {
  const std::vector<int> nodes = InsertionSites(graph);
  const auto vector_ops = OperatorsWithOutput(ValueKind::kVector);
  for (int attempt = 0; attempt < kMutationRetries && !nodes.empty(); ++attempt) {
    const int node = PickUniform(nodes, rng);
    const Symbol op = PickUniform(vector_ops, rng);
    const double c = PickConstant(op, config, rng);
    const Symbol leaf = PickUniform(kLeaves, rng);
    if (auto g = InsertAbove(graph, node, op, c, leaf)) return {std::move(*g), false};
  }
  return {graph, true};
}

MutationResult MutateDeletion(const MetricGraph& graph, const GenerationConfig&, Rng& rng) {
  const std::vector<int> nodes = NodesWhere(graph, IsIntermediate);
  for (int attempt = 0; attempt < kMutationRetries && !nodes.empty(); ++attempt) {
    const int node = PickUniform(nodes, rng);
    std::vector<MetricGraph> eligible;
    for (int k = 0; k < graph.node(node).num_children; ++k) {
      if (auto g = DeleteNode(graph, node, k)) eligible.push_back(std::move(*g));
    }
    if (eligible.empty()) continue;  // redirect to another node
    return {PickUniform(eligible, rng), false};
  }
  return {graph, true};
}

MutationResult MutateReplacement(const MetricGraph& graph, const GenerationConfig& config,
                                 Rng& rng) {
  const std::vector<int> nodes = NodesWhere(graph, IsIntermediate);
  const auto vector_ops = OperatorsWithOutput(ValueKind::kVector);
  for (int attempt = 0; attempt < kMutationRetries && !nodes.empty(); ++attempt) {
    const int node = PickUniform(nodes, rng);
    const Symbol current = graph.node(node).symbol;
    std::vector<Symbol> choices;
    for (Symbol s : vector_ops) {
      if (s != current) choices.push_back(s);
    }
    const Symbol op = PickUniform(choices, rng);
    const double c = PickConstant(op, config, rng);
    const Symbol leaf = PickUniform(kLeaves, rng);
    std::uniform_int_distribution<int> pick_child(0, std::max(0, graph.node(node).num_children - 1));
    const int dropped = pick_child(rng);
    if (auto g = ReplaceOperator(graph, node, op, c, leaf, dropped)) return {std::move(*g), false};
  }
  return {graph, true};
}

MutationResult Mutate(MutationKind kind, const MetricGraph& graph, const GenerationConfig& config,
                      Rng& rng) {
  switch (kind) {
    case MutationKind::kInsertion:
      return MutateInsertion(graph, config, rng);
    case MutationKind::kDeletion:
      return MutateDeletion(graph, config, rng);
    case MutationKind::kReplacement:
      return MutateReplacement(graph, config, rng);
    default:
      return {graph, true};
  }
}

// ---- Fitness -----------------------------------------------------------------

FitnessValue TrainedFitness(const MetricGraph& metric, const InteractionDataset& ds,
                            const TrainConfig& train, int epochs, int patience, FitnessKind kind) {
  FitnessValue out;
  out.kind = kind;
  TrainConfig cfg = train;
  cfg.patience = patience;
  try {
    TrainResult r = Train(metric, ds, cfg, epochs);
    out.cost_epochs = r.epochs_run;
    out.fitness = Evaluate(metric, r.embeddings, ds, Split::kValid, cfg.eval_k).ndcg;
  } catch (const DegenerateCandidate&) {
    out.fitness = kDegenerateFitness;
  } catch (const NonFiniteError&) {
    out.fitness = kDegenerateFitness;
  }
  return out;
}

FitnessValue EvaluateFitness(const MetricGraph& metric, Strategy strategy,
                             const EvolutionConfig& evo, const InteractionDataset& ds,
                             const TrainConfig& train) {
  if (strategy == Strategy::kEarlyStop) {
    return TrainedFitness(metric, ds, train, evo.stop_epochs, 0, FitnessKind::kEarlyStop);
  }
  return TrainedFitness(metric, ds, train, evo.full_epochs, evo.full_patience, FitnessKind::kFull);
}

FullTrainingReport FullyTrain(const MetricGraph& metric, const InteractionDataset& ds,
                              const EvolutionConfig& evo, const TrainConfig& train) {
  FullTrainingReport out;
  TrainConfig cfg = train;
  cfg.patience = evo.full_patience;
  try {
    TrainResult r = Train(metric, ds, cfg, evo.full_epochs);
    out.epochs = r.epochs_run;
    out.valid = Evaluate(metric, r.embeddings, ds, Split::kValid, cfg.eval_k);
    out.test = Evaluate(metric, r.embeddings, ds, Split::kTest, cfg.eval_k);
    out.valid_fitness = out.valid.ndcg;
  } catch (const DegenerateCandidate&) {
  } catch (const NonFiniteError&) {
  }
  return out;
}

void ParallelFor(int n, int parallelism, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::min(n, std::max(1, parallelism));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<CandidateRecord> SelectTopN(std::vector<CandidateRecord> pool, int n) {
  std::stable_sort(pool.begin(), pool.end(), [](const CandidateRecord& a, const CandidateRecord& b) {
    if (a.fitness != b.fitness) return a.fitness > b.fitness;
    if (a.generation != b.generation) return a.generation < b.generation;
    return a.id < b.id;
  });
  if (pool.size() > static_cast<size_t>(n)) pool.resize(static_cast<size_t>(n));
  return pool;
}

// ---- FitnessEngine -----------------------------------------------------------

FitnessEngine::FitnessEngine(const InteractionDataset& ds, const EvolutionConfig& evo,
                             const TrainConfig& train, const GenerationConfig& gen)
    : ds_(ds), evo_(evo), train_(train), vocab_(gen.constant_pool) {}

void FitnessEngine::Account(const CandidateRecord& r) {
  ++stats_.candidates_evaluated;
  stats_.epochs_consumed += r.cost_epochs;
  if (r.fitness_kind == FitnessKind::kFull) ++stats_.full_trainings;
  if (r.fitness_kind == FitnessKind::kSurrogate) ++stats_.surrogate_predictions;
}

void FitnessEngine::FitSurrogate() {
  const SurrogateConfig& sc = evo_.surrogate;
  model_.emplace(vocab_, sc.embed_dim, sc.hidden, sc.ensemble, sc.seed);
  model_->Fit(data_, sc.epochs, sc.learning_rate, sc.optimizer);
}

void FitnessEngine::EvaluateBatch(std::vector<CandidateRecord>& records) {
  std::vector<size_t> pending;
  for (size_t i = 0; i < records.size(); ++i) {
    if (!records[i].evaluated) pending.push_back(i);
  }
  auto train_all = [&](const std::vector<size_t>& idx, Strategy strategy) {
    ParallelFor(static_cast<int>(idx.size()), evo_.parallelism, [&](int k) {
      CandidateRecord& r = records[idx[static_cast<size_t>(k)]];
      const FitnessValue f = EvaluateFitness(r.graph, strategy, evo_, ds_, train_);
      r.fitness = f.fitness;
      r.fitness_kind = f.kind;
      r.cost_epochs = f.cost_epochs;
      r.evaluated = true;
    });
    for (size_t i : idx) Account(records[i]);
  };

  if (evo_.strategy != Strategy::kSurrogate) {
    train_all(pending, evo_.strategy);
    return;
  }

  // Warmup: fully train until the surrogate data holds `warmup` pairs.
  size_t next = 0;
  while (!model_ && next < pending.size()) {
    const size_t need = static_cast<size_t>(evo_.surrogate.warmup) - data_.size();
    const size_t take = std::min(need, pending.size() - next);
    std::vector<size_t> idx(pending.begin() + static_cast<std::ptrdiff_t>(next),
                            pending.begin() + static_cast<std::ptrdiff_t>(next + take));
    train_all(idx, Strategy::kFull);
    for (size_t i : idx) data_.Add(records[i].graph, records[i].fitness, vocab_);
    next += take;
    if (data_.size() >= static_cast<size_t>(evo_.surrogate.warmup)) FitSurrogate();
  }
  for (; next < pending.size(); ++next) {
    CandidateRecord& r = records[pending[next]];
    r.fitness = model_->Predict(r.graph);
    r.fitness_kind = FitnessKind::kSurrogate;
    r.cost_epochs = 0;
    r.evaluated = true;
    Account(r);
  }
}

void FitnessEngine::RefreshSurrogate(std::vector<CandidateRecord>& batch) {
  if (evo_.strategy != Strategy::kSurrogate || !model_) return;
  CandidateRecord* best = nullptr;
  for (CandidateRecord& r : batch) {
    if (r.fitness_kind != FitnessKind::kSurrogate) continue;
    if (!best || r.fitness > best->fitness) best = &r;
  }
  if (!best) return;
  const FitnessValue f = EvaluateFitness(best->graph, Strategy::kFull, evo_, ds_, train_);
  best->fitness = f.fitness;
  best->fitness_kind = FitnessKind::kFull;
  best->cost_epochs = f.cost_epochs;
  ++stats_.full_trainings;
  stats_.epochs_consumed += f.cost_epochs;
  data_.Add(best->graph, best->fitness, vocab_);
  if (!evo_.surrogate.train_once) FitSurrogate();
}

// ---- Search --------------------------------------------------------------------

namespace {

std::vector<ScoreVector> ScoreAll(const std::vector<CandidateRecord>& records,
                                  const ProbeSet& probes) {
  std::vector<ScoreVector> out;
  out.reserve(records.size());
  for (const CandidateRecord& r : records) out.push_back(ComputeScoreVector(r.graph, probes));
  return out;
}

// Fresh random graphs, distinct from `existing`, until the population has
// `target` members or the attempt budget runs out.
void TopUp(std::vector<CandidateRecord>& population, int target, const EvolutionConfig& evo,
           const GenerationConfig& gen, const ProbeSet& probes, int generation, int* next_id) {
  if (static_cast<int>(population.size()) >= target) return;
  std::vector<ScoreVector> existing = ScoreAll(population, probes);
  Rng rng = MakeRng(evo.seed, {kTopUpTag, static_cast<std::uint64_t>(generation)});
  const int max_attempts = 100 * target;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(population.size()) < target;
       ++attempt) {
    MetricGraph g = RandomGenerate(gen, rng);
    ScoreVector s = ComputeScoreVector(g, probes);
    if (!s.finite) continue;
    bool dup = false;
    if (evo.use_mec) {
      for (const ScoreVector& e : existing) {
        if (Equivalent(s, e, evo.mec.delta)) {
          dup = true;
          break;
        }
      }
    }
    if (dup) continue;
    CandidateRecord r;
    r.id = (*next_id)++;
    r.graph = std::move(g);
    r.generation = generation;
    r.mutation = MutationKind::kRandom;
    population.push_back(std::move(r));
    existing.push_back(std::move(s));
  }
}

void Finish(SearchResult& result, const InteractionDataset& ds, const EvolutionConfig& evo,
            const TrainConfig& train) {
  FullTrainingReport full = FullyTrain(result.best.graph, ds, evo, train);
  result.best_full_fitness = full.valid_fitness;
  result.best_valid = std::move(full.valid);
  result.best_test = std::move(full.test);
  result.stats.epochs_consumed += full.epochs;
}

}  // namespace

std::vector<CandidateRecord> InitPopulation(const EvolutionConfig& evo, const GenerationConfig& gen,
                                            const ProbeSet& probes, int* next_id,
                                            SearchStats* stats) {
  std::vector<MetricGraph> graphs;
  graphs.reserve(static_cast<size_t>(evo.population));
  for (int i = 0; i < evo.population; ++i) {
    Rng rng = MakeRng(evo.seed, {kInitTag, static_cast<std::uint64_t>(i)});
    graphs.push_back(RandomGenerate(gen, rng));
  }
  std::vector<CandidateRecord> population;
  auto add = [&](MetricGraph g, MutationKind kind) {
    CandidateRecord r;
    r.id = (*next_id)++;
    r.graph = std::move(g);
    r.generation = 0;
    r.mutation = kind;
    population.push_back(std::move(r));
  };
  if (evo.use_mec) {
    Rng rng = MakeRng(evo.seed, {kMecTag, 0});
    for (DedupEntry& e : DedupAgainst(std::move(graphs), {}, probes, evo.mec, gen, rng)) {
      if (e.source < 0 && stats) ++stats->mec_replacements;
      add(std::move(e.graph), e.source < 0 ? MutationKind::kRandom : MutationKind::kNone);
    }
  } else {
    for (MetricGraph& g : graphs) add(std::move(g), MutationKind::kNone);
  }
  TopUp(population, evo.population, evo, gen, probes, 0, next_id);
  return population;
}

std::vector<CandidateRecord> GenerateOffspring(const std::vector<CandidateRecord>& population,
                                               const EvolutionConfig& evo,
                                               const GenerationConfig& gen, const ProbeSet& probes,
                                               int generation, int* next_id, SearchStats* stats) {
  const int count = evo.OffspringCount();
  const std::uint64_t g = static_cast<std::uint64_t>(generation);
  Rng parent_rng = MakeRng(evo.seed, {kParentTag, g});
  std::vector<int> parents(static_cast<size_t>(count));
  for (int& p : parents) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(population.size()) - 1);
    p = pick(parent_rng);
  }

  std::vector<MetricGraph> children;
  std::vector<MutationKind> kinds;
  children.reserve(parents.size());
  for (size_t k = 0; k < parents.size(); ++k) {
    Rng rng = MakeRng(evo.seed, {g, static_cast<std::uint64_t>(k)});
    std::uniform_int_distribution<int> pick_kind(1, 3);
    const MutationKind kind = static_cast<MutationKind>(pick_kind(rng));
    MutationResult m = Mutate(kind, population[static_cast<size_t>(parents[k])].graph, gen, rng);
    if (m.noop && stats) ++stats->mutation_noops;
    children.push_back(std::move(m.graph));
    kinds.push_back(kind);
  }

  std::vector<CandidateRecord> offspring;
  auto add = [&](MetricGraph graph, int source) {
    CandidateRecord r;
    r.id = (*next_id)++;
    r.graph = std::move(graph);
    r.generation = generation;
    if (source >= 0) {
      r.parent = population[static_cast<size_t>(parents[static_cast<size_t>(source)])].id;
      r.mutation = kinds[static_cast<size_t>(source)];
    } else {
      r.mutation = MutationKind::kRandom;
    }
    offspring.push_back(std::move(r));
  };
  if (evo.use_mec) {
    Rng rng = MakeRng(evo.seed, {kMecTag, g});
    std::vector<DedupEntry> entries =
        DedupAgainst(std::move(children), ScoreAll(population, probes), probes, evo.mec, gen, rng);
    for (DedupEntry& e : entries) {
      if (e.source < 0 && stats) ++stats->mec_replacements;
      add(std::move(e.graph), e.source);
    }
  } else {
    for (size_t k = 0; k < children.size(); ++k) add(std::move(children[k]), static_cast<int>(k));
  }
  return offspring;
}

SearchResult RunSearch(const InteractionDataset& ds, const EvolutionConfig& evo,
                       const GenerationConfig& gen, const TrainConfig& train,
                       const GenerationCallback& on_generation) {
  evo.Check();
  gen.Check();
  train.Check();
  const auto start = std::chrono::steady_clock::now();
  const ProbeSet probes(evo.mec.num_probes, train.dim, DeriveSeed(evo.seed, {kProbeTag}));
  FitnessEngine engine(ds, evo, train, gen);
  SearchResult result;
  result.method = "evolution";
  result.strategy = evo.strategy;
  int next_id = 0;

  auto log_generation = [&](int t, const std::vector<CandidateRecord>& pop) {
    GenerationLog log;
    log.generation = t;
    log.population = pop;
    log.best_fitness = pop.empty() ? kDegenerateFitness : pop.front().fitness;
    if (on_generation) on_generation(log);
    result.history.push_back(std::move(log));
  };

  std::vector<CandidateRecord> population =
      InitPopulation(evo, gen, probes, &next_id, &engine.stats());
  engine.EvaluateBatch(population);
  population = SelectTopN(std::move(population), evo.population);
  log_generation(0, population);

  for (int t = 1; t <= evo.generations; ++t) {
    std::vector<CandidateRecord> offspring =
        GenerateOffspring(population, evo, gen, probes, t, &next_id, &engine.stats());
    engine.EvaluateBatch(offspring);
    engine.RefreshSurrogate(offspring);
    population.insert(population.end(), std::make_move_iterator(offspring.begin()),
                      std::make_move_iterator(offspring.end()));
    population = SelectTopN(std::move(population), evo.population);
    if (static_cast<int>(population.size()) < evo.population) {
      TopUp(population, evo.population, evo, gen, probes, t, &next_id);
      engine.EvaluateBatch(population);
      population = SelectTopN(std::move(population), evo.population);
    }
    log_generation(t, population);
  }

  result.best = population.front();
  result.stats = engine.stats();
  result.surrogate = engine.surrogate();
  result.surrogate_data = engine.surrogate_data();
  Finish(result, ds, evo, train);
  result.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

SearchResult RandomSearch(const InteractionDataset& ds, int budget, const EvolutionConfig& evo,
                          const GenerationConfig& gen, const TrainConfig& train) {
  if (budget < 1) throw ConfigError("random search budget must be >= 1");
  evo.Check();
  gen.Check();
  train.Check();
  const auto start = std::chrono::steady_clock::now();
  FitnessEngine engine(ds, evo, train, gen);
  SearchResult result;
  result.method = "random";
  result.strategy = evo.strategy;

  std::vector<CandidateRecord> records;
  records.reserve(static_cast<size_t>(budget));
  for (int i = 0; i < budget; ++i) {
    Rng rng = MakeRng(evo.seed, {kRandomTag, static_cast<std::uint64_t>(i)});
    CandidateRecord r;
    r.id = i;
    r.graph = RandomGenerate(gen, rng);
    r.mutation = MutationKind::kRandom;
    records.push_back(std::move(r));
  }
  engine.EvaluateBatch(records);
  GenerationLog log;
  log.population = SelectTopN(std::move(records), budget);
  log.best_fitness = log.population.front().fitness;
  result.best = log.population.front();
  result.history.push_back(std::move(log));
  result.stats = engine.stats();
  result.surrogate = engine.surrogate();
  result.surrogate_data = engine.surrogate_data();
  Finish(result, ds, evo, train);
  result.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace metricgen
