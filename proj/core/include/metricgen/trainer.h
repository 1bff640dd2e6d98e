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

// Matrix-factorization encoder trained with the BPR objective through an
// arbitrary candidate metric.

#ifndef METRICGEN_TRAINER_H_
#define METRICGEN_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "metricgen/dataset.h"
#include "metricgen/evaluator.h"
#include "metricgen/matrix.h"
#include "metricgen/metric_graph.h"

namespace metricgen {

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  int dim = 64;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  int batch_size = 1024;
  int epochs = 100;
  double init_scale = 0.1;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  // Stop after this many epochs without a better validation NDCG@eval_k
  // and keep the best epoch's embeddings. 0 disables validation tracking.
  int patience = 0;
  int eval_k = 20;

  void Check() const;
};

struct EmbeddingTable {
  Matrix users;
  Matrix items;

  int dim() const { return static_cast<int>(users.cols()); }
  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

// Entries ~ N(0, init_scale^2), deterministic per config.seed.
EmbeddingTable InitEmbeddings(int num_users, int num_items, const TrainConfig& config);

// Flat little-endian dump: u64 users, u64 items, u64 dim, then row-major
// float64 user rows followed by item rows.
void WriteEmbeddings(const EmbeddingTable& emb, const std::filesystem::path& path);
EmbeddingTable ReadEmbeddings(const std::filesystem::path& path);

// Row-sparse gradient accumulator.
class SparseGradients {
 public:
  SparseGradients(int num_users, int num_items, int dim);

  std::span<double> user(int u);
  std::span<double> item(int i);
  std::span<const double> user(int u) const { return users_.row(static_cast<size_t>(u)); }
  std::span<const double> item(int i) const { return items_.row(static_cast<size_t>(i)); }
  const std::vector<int>& touched_users() const { return touched_users_; }
  const std::vector<int>& touched_items() const { return touched_items_; }
  void Clear();

 private:
  Matrix users_;
  Matrix items_;
  std::vector<char> user_mark_;
  std::vector<char> item_mark_;
  std::vector<int> touched_users_;
  std::vector<int> touched_items_;
};

// The seam between the search and the model producing embeddings. The
// metric only ever sees one user row and one item row at a time.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual int dim() const = 0;
  virtual int num_users() const = 0;
  virtual int num_items() const = 0;
  virtual std::span<const double> user(int u) const = 0;
  virtual std::span<const double> item(int i) const = 0;
  // One optimizer update on exactly the touched rows.
  virtual void ApplyGradients(const SparseGradients& grads) = 0;
  virtual const EmbeddingTable& embeddings() const = 0;
};

class MfEncoder : public Encoder {
 public:
  MfEncoder(EmbeddingTable table, const TrainConfig& config);

  int dim() const override { return table_.dim(); }
  int num_users() const override { return static_cast<int>(table_.users.rows()); }
  int num_items() const override { return static_cast<int>(table_.items.rows()); }
  std::span<const double> user(int u) const override {
    return table_.users.row(static_cast<size_t>(u));
  }
  std::span<const double> item(int i) const override {
    return table_.items.row(static_cast<size_t>(i));
  }
  void ApplyGradients(const SparseGradients& grads) override;
  const EmbeddingTable& embeddings() const override { return table_; }

 private:
  void UpdateRow(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v) const;

  EmbeddingTable table_;
  TrainConfig config_;
  Matrix user_m_, user_v_, item_m_, item_v_;
  std::int64_t step_ = 0;
};

// Minimized BPR objective:
//   -(1/B) sum ln sigmoid(SM(p_u, q_i) - SM(p_u, q_j))
//   + weight_decay * (1/B) sum (|p_u|^2 + |q_i|^2 + |q_j|^2)
// Throws NonFiniteError.
double BprLoss(const MetricGraph& metric, const Encoder& encoder,
               std::span<const Triplet> triplets, double weight_decay);

// Loss of one batch and its gradient accumulated into `grads` (cleared
// first). Returns nullopt if any score or gradient is non-finite.
std::optional<double> BprLossAndGradient(const GraphEvaluator& eval, const Encoder& encoder,
                                         std::span<const Triplet> triplets, double weight_decay,
                                         EvalWorkspace& ws_pos, EvalWorkspace& ws_neg,
                                         SparseGradients& grads);

// One optimizer step on the rows touched by the batch. Returns the batch
// loss (before the update) or nullopt for a non-finite batch, in which
// case nothing is updated.
std::optional<double> TrainStep(const MetricGraph& metric, Encoder& encoder,
                                std::span<const Triplet> batch, const TrainConfig& config);

struct TrainResult {
  EmbeddingTable embeddings;
  std::vector<double> epoch_loss;  // mean batch loss over finite batches
  std::vector<double> valid_ndcg;  // per epoch, only with patience > 0
  int epochs_run = 0;
  int best_epoch = 0;  // 1-based; 0 means the initial embeddings
};

// Trains for `epochs` (config.epochs unless overridden) epochs of
// ceil(|train| / batch_size) steps. Throws DegenerateCandidate when more
// than half of an epoch's batches are non-finite.
TrainResult Train(const MetricGraph& metric, const InteractionDataset& ds,
                  const TrainConfig& config, std::optional<int> epochs_override = std::nullopt);

}  // namespace metricgen

#endif  // METRICGEN_TRAINER_H_
