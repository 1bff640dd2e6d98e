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

// Sequence-to-one fitness regressor over linearized metric graphs: token
// embeddings feed a single-layer GRU whose last state goes through an
// affine head.

#ifndef METRICGEN_SURROGATE_H_
#define METRICGEN_SURROGATE_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "metricgen/metric_graph.h"
#include "metricgen/trainer.h"

namespace metricgen {

// One token per operator, one smul token per pool constant, one per leaf,
// plus start and end markers.
class TokenVocabulary {
 public:
  static constexpr int kStart = 0;
  static constexpr int kEnd = 1;

  explicit TokenVocabulary(std::vector<double> constant_pool = {-1.0, 0.5, 2.0});

  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<double>& constants() const { return constants_; }

  // Throws UnknownToken for an smul constant outside the pool.
  int Encode(Symbol symbol, double constant) const;
  Symbol SymbolOf(int token) const;
  double ConstantOf(int token) const;
  // "START", "END", "dot", "smul:2", ...
  std::string Name(int token) const;

  friend bool operator==(const TokenVocabulary& a, const TokenVocabulary& b) {
    return a.constants_ == b.constants_;
  }

 private:
  struct Entry {
    Symbol symbol;
    double constant;
  };
  std::vector<double> constants_;
  std::vector<Entry> entries_;  // entries_[0..1] are the markers
};

// Pre-order, children left to right, wrapped in START/END.
std::vector<int> GraphToSequence(const MetricGraph& graph, const TokenVocabulary& vocab);

// Inverse of GraphToSequence. Throws UnknownToken on malformed input.
MetricGraph SequenceToGraph(std::span<const int> tokens, const TokenVocabulary& vocab,
                            int max_depth = kMaxDepthLimit);

// D_SUR: (token sequence, fitness) pairs with finite fitness.
struct SurrogateDataset {
  std::vector<std::vector<int>> sequences;
  std::vector<double> targets;
  std::vector<std::string> expressions;

  std::size_t size() const { return targets.size(); }
  // Stores the sequence of CanonicalForm(graph). Ignores non-finite
  // fitness values.
  void Add(const MetricGraph& graph, double fitness, const TokenVocabulary& vocab);
  // "expression<TAB>fitness" lines.
  void WriteLog(const std::filesystem::path& path) const;
};

struct SurrogateConfig {
  int embed_dim = 16;
  int hidden = 32;
  int epochs = 300;
  double learning_rate = 1e-2;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  int warmup = 50;
  // Independently seeded members whose predictions are averaged.
  int ensemble = 5;
  bool train_once = false;
  std::uint64_t seed = 0;

  void Check() const;
};

class SurrogateModel {
 public:
  SurrogateModel(TokenVocabulary vocab, int embed_dim, int hidden, std::uint64_t seed);

  const TokenVocabulary& vocabulary() const { return vocab_; }
  int embed_dim() const { return embed_dim_; }
  int hidden() const { return hidden_; }

  // Throws UnknownToken for ids outside the vocabulary.
  double Predict(std::span<const int> tokens) const;
  // Reads the sequence of CanonicalForm(graph).
  double Predict(const MetricGraph& graph) const;

  // Mean squared error of Predict() over the dataset.
  double Mse(const SurrogateDataset& data) const;

  // Loss on standardized targets, (1/Z) sum (net(x_z) - t_z)^2 with
  // t_z = (y_z - mean) / scale, and its gradient over parameters().
  double StandardizedLossAndGradient(const SurrogateDataset& data, std::span<double> grad) const;

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  double target_mean() const { return target_mean_; }
  double target_scale() const { return target_scale_; }
  void SetTargetStats(double mean, double scale);

  // Little-endian binary checkpoint: vocabulary names, dimensions, target
  // statistics and the float64 parameter array.
  void Save(const std::filesystem::path& path) const;
  void Save(std::ostream& out) const;
  static SurrogateModel Load(const std::filesystem::path& path);
  static SurrogateModel Load(std::istream& in, const std::string& source);

 private:
  struct Layout;
  double Net(std::span<const int> tokens) const;
  double NetAndGradient(std::span<const int> tokens, double dloss_dout,
                        std::span<double> grad) const;

  TokenVocabulary vocab_;
  int embed_dim_;
  int hidden_;
  std::vector<double> params_;
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
};

// Full-batch minimization of the MSE over every parameter. Returns the
// per-epoch MSE (in fitness units) measured before each update. Throws
// ConfigError when the dataset holds fewer than two pairs.
std::vector<double> TrainSurrogate(SurrogateModel& model, const SurrogateDataset& data,
                                   int epochs, double learning_rate,
                                   OptimizerKind optimizer = OptimizerKind::kAdam);

// Mean of independently initialised models trained on the same data. On a
// few dozen pairs a single recurrent fit mostly memorises; averaging cuts
// the seed variance of its rankings.
class SurrogateEnsemble {
 public:
  // Member k is seeded with DeriveSeed(seed, {k}).
  SurrogateEnsemble(const TokenVocabulary& vocab, int embed_dim, int hidden, int members,
                    std::uint64_t seed);

  int size() const { return static_cast<int>(members_.size()); }
  const std::vector<SurrogateModel>& members() const { return members_; }

  double Predict(std::span<const int> tokens) const;
  double Predict(const MetricGraph& graph) const;

  // Trains every member with TrainSurrogate(); returns the per-epoch mean
  // of the member MSE traces.
  std::vector<double> Fit(const SurrogateDataset& data, int epochs, double learning_rate,
                          OptimizerKind optimizer = OptimizerKind::kAdam);

  // Member count followed by the member checkpoints.
  void Save(const std::filesystem::path& path) const;
  static SurrogateEnsemble Load(const std::filesystem::path& path);

 private:
  SurrogateEnsemble() = default;

  std::vector<SurrogateModel> members_;
};

}  // namespace metricgen

#endif  // METRICGEN_SURROGATE_H_
