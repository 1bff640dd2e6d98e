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

#include "metricgen/trainer.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "metricgen/errors.h"
#include "metricgen/ranking.h"

namespace metricgen {

namespace {

// ln(sigmoid(x)) without overflow.
double LogSigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double SquaredNorm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void WriteU64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t ReadU64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError(0, "truncated embedding file");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

}  // namespace

void TrainConfig::Check() const {
  if (dim < 1) throw ConfigError("train dim must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(init_scale >= 0.0)) throw ConfigError("init scale must be non-negative");
  if (patience < 0) throw ConfigError("patience must be >= 0");
  if (eval_k < 1) throw ConfigError("eval k must be >= 1");
}

EmbeddingTable InitEmbeddings(int num_users, int num_items, const TrainConfig& config) {
  const size_t d = static_cast<size_t>(config.dim);
  EmbeddingTable emb{Matrix(static_cast<size_t>(num_users), d),
                     Matrix(static_cast<size_t>(num_items), d)};
  if (config.init_scale == 0.0) return emb;
  Rng rng = MakeRng(config.seed, {0x1417});
  std::normal_distribution<double> normal(0.0, config.init_scale);
  for (double& x : emb.users.data()) x = normal(rng);
  for (double& x : emb.items.data()) x = normal(rng);
  return emb;
}

void WriteEmbeddings(const EmbeddingTable& emb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(0, "cannot write " + path.string());
  WriteU64(out, emb.users.rows());
  WriteU64(out, emb.items.rows());
  WriteU64(out, emb.users.cols());
  for (const Matrix* m : {&emb.users, &emb.items}) {
    for (double x : m->data()) WriteU64(out, std::bit_cast<std::uint64_t>(x));
  }
}

EmbeddingTable ReadEmbeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(0, "cannot open " + path.string());
  const std::uint64_t users = ReadU64(in);
  const std::uint64_t items = ReadU64(in);
  const std::uint64_t dim = ReadU64(in);
  EmbeddingTable emb{Matrix(users, dim), Matrix(items, dim)};
  for (Matrix* m : {&emb.users, &emb.items}) {
    for (double& x : m->data()) x = std::bit_cast<double>(ReadU64(in));
  }
  return emb;
}

SparseGradients::SparseGradients(int num_users, int num_items, int dim)
    : users_(static_cast<size_t>(num_users), static_cast<size_t>(dim)),
      items_(static_cast<size_t>(num_items), static_cast<size_t>(dim)),
      user_mark_(static_cast<size_t>(num_users), 0),
      item_mark_(static_cast<size_t>(num_items), 0) {}

std::span<double> SparseGradients::user(int u) {
  char& mark = user_mark_[static_cast<size_t>(u)];
  if (!mark) {
    mark = 1;
    touched_users_.push_back(u);
  }
  return users_.row(static_cast<size_t>(u));
}

std::span<double> SparseGradients::item(int i) {
  char& mark = item_mark_[static_cast<size_t>(i)];
  if (!mark) {
    mark = 1;
    touched_items_.push_back(i);
  }
  return items_.row(static_cast<size_t>(i));
}

void SparseGradients::Clear() {
  for (int u : touched_users_) {
    std::span<double> row = users_.row(static_cast<size_t>(u));
    std::fill(row.begin(), row.end(), 0.0);
    user_mark_[static_cast<size_t>(u)] = 0;
  }
  for (int i : touched_items_) {
    std::span<double> row = items_.row(static_cast<size_t>(i));
    std::fill(row.begin(), row.end(), 0.0);
    item_mark_[static_cast<size_t>(i)] = 0;
  }
  touched_users_.clear();
  touched_items_.clear();
}

MfEncoder::MfEncoder(EmbeddingTable table, const TrainConfig& config)
    : table_(std::move(table)), config_(config) {
  if (config_.optimizer == OptimizerKind::kAdam) {
    user_m_ = Matrix(table_.users.rows(), table_.users.cols());
    user_v_ = user_m_;
    item_m_ = Matrix(table_.items.rows(), table_.items.cols());
    item_v_ = item_m_;
  }
}

void MfEncoder::UpdateRow(std::span<double> param, std::span<const double> grad,
                          std::span<double> m, std::span<double> v) const {
  const double lr = config_.learning_rate;
  if (config_.optimizer == OptimizerKind::kSgd) {
    for (size_t k = 0; k < param.size(); ++k) param[k] -= lr * grad[k];
    return;
  }
  const double b1 = config_.adam_beta1;
  const double b2 = config_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (size_t k = 0; k < param.size(); ++k) {
    m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
    v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
    param[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.adam_epsilon);
  }
}

void MfEncoder::ApplyGradients(const SparseGradients& grads) {
  ++step_;
  const bool adam = config_.optimizer == OptimizerKind::kAdam;
  for (int u : grads.touched_users()) {
    const size_t r = static_cast<size_t>(u);
    UpdateRow(table_.users.row(r), grads.user(u), adam ? user_m_.row(r) : std::span<double>{},
              adam ? user_v_.row(r) : std::span<double>{});
  }
  for (int i : grads.touched_items()) {
    const size_t r = static_cast<size_t>(i);
    UpdateRow(table_.items.row(r), grads.item(i), adam ? item_m_.row(r) : std::span<double>{},
              adam ? item_v_.row(r) : std::span<double>{});
  }
}

double BprLoss(const MetricGraph& metric, const Encoder& encoder,
               std::span<const Triplet> triplets, double weight_decay) {
  GraphEvaluator eval(metric);
  EvalWorkspace ws(encoder.dim());
  const double inv_b = 1.0 / static_cast<double>(triplets.size());
  double loss = 0.0;
  for (const Triplet& t : triplets) {
    double pos = 0.0;
    double neg = 0.0;
    const bool ok = eval.Forward(encoder.user(t.user), encoder.item(t.positive), ws, &pos) &&
                    eval.Forward(encoder.user(t.user), encoder.item(t.negative), ws, &neg);
    if (!ok) throw NonFiniteError("non-finite score in BPR loss for " + PrintExpr(metric));
    loss -= LogSigmoid(pos - neg) * inv_b;
    loss += weight_decay * inv_b *
            (SquaredNorm(encoder.user(t.user)) + SquaredNorm(encoder.item(t.positive)) +
             SquaredNorm(encoder.item(t.negative)));
  }
  if (!std::isfinite(loss)) throw NonFiniteError("non-finite BPR loss for " + PrintExpr(metric));
  return loss;
}

std::optional<double> BprLossAndGradient(const GraphEvaluator& eval, const Encoder& encoder,
                                         std::span<const Triplet> triplets, double weight_decay,
                                         EvalWorkspace& ws_pos, EvalWorkspace& ws_neg,
                                         SparseGradients& grads) {
  grads.Clear();
  const double inv_b = 1.0 / static_cast<double>(triplets.size());
  const double decay = 2.0 * weight_decay * inv_b;
  double loss = 0.0;
  for (const Triplet& t : triplets) {
    std::span<const double> p = encoder.user(t.user);
    std::span<const double> qi = encoder.item(t.positive);
    std::span<const double> qj = encoder.item(t.negative);
    double pos = 0.0;
    double neg = 0.0;
    if (!eval.Forward(p, qi, ws_pos, &pos) || !eval.Forward(p, qj, ws_neg, &neg)) {
      return std::nullopt;
    }
    const double delta = pos - neg;
    loss -= LogSigmoid(delta) * inv_b;
    loss += weight_decay * inv_b * (SquaredNorm(p) + SquaredNorm(qi) + SquaredNorm(qj));
    // dL/d(pos) = -sigmoid(-delta) / B, dL/d(neg) = +sigmoid(-delta) / B.
    const double w = Sigmoid(-delta) * inv_b;
    std::span<double> gp = grads.user(t.user);
    std::span<double> gi = grads.item(t.positive);
    std::span<double> gj = grads.item(t.negative);
    if (!eval.Backward(p, qi, ws_pos, -w, gp, gi) || !eval.Backward(p, qj, ws_neg, w, gp, gj)) {
      return std::nullopt;
    }
    for (size_t k = 0; k < p.size(); ++k) {
      gp[k] += decay * p[k];
      gi[k] += decay * qi[k];
      gj[k] += decay * qj[k];
    }
  }
  if (!std::isfinite(loss)) return std::nullopt;
  for (int u : grads.touched_users()) {
    for (double g : grads.user(u)) {
      if (!std::isfinite(g)) return std::nullopt;
    }
  }
  for (int i : grads.touched_items()) {
    for (double g : grads.item(i)) {
      if (!std::isfinite(g)) return std::nullopt;
    }
  }
  return loss;
}

std::optional<double> TrainStep(const MetricGraph& metric, Encoder& encoder,
                                std::span<const Triplet> batch, const TrainConfig& config) {
  GraphEvaluator eval(metric);
  EvalWorkspace ws_pos(encoder.dim());
  EvalWorkspace ws_neg(encoder.dim());
  SparseGradients grads(encoder.num_users(), encoder.num_items(), encoder.dim());
  std::optional<double> loss =
      BprLossAndGradient(eval, encoder, batch, config.weight_decay, ws_pos, ws_neg, grads);
  if (loss) encoder.ApplyGradients(grads);
  return loss;
}

TrainResult Train(const MetricGraph& metric, const InteractionDataset& ds,
                  const TrainConfig& config, std::optional<int> epochs_override) {
  config.Check();
  const int epochs = epochs_override.value_or(config.epochs);
  MfEncoder encoder(InitEmbeddings(ds.num_users(), ds.num_items(), config), config);
  TrainResult result;
  if (epochs <= 0) {
    result.embeddings = encoder.embeddings();
    return result;
  }

  const bool track = config.patience > 0 && ds.num_interactions(Split::kValid) > 0;
  double best_ndcg = -1.0;
  if (track) best_ndcg = Evaluate(metric, encoder.embeddings(), ds, Split::kValid, config.eval_k).ndcg;
  EmbeddingTable best = track ? encoder.embeddings() : EmbeddingTable{};

  GraphEvaluator eval(metric);
  EvalWorkspace ws_pos(config.dim);
  EvalWorkspace ws_neg(config.dim);
  SparseGradients grads(ds.num_users(), ds.num_items(), config.dim);
  TripletSampler sampler(ds, DeriveSeed(config.seed, {0x5a3}));
  const size_t n_train = ds.train_edges().size();
  const size_t batch_size = static_cast<size_t>(config.batch_size);
  const size_t steps = (n_train + batch_size - 1) / batch_size;
  std::vector<Triplet> batch;
  batch.reserve(batch_size);
  int since_best = 0;

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    double loss_sum = 0.0;
    size_t finite = 0;
    for (size_t step = 0; step < steps; ++step) {
      const size_t size = std::min(batch_size, n_train - step * batch_size);
      batch.clear();
      for (size_t b = 0; b < size; ++b) batch.push_back(sampler.Sample());
      std::optional<double> loss =
          BprLossAndGradient(eval, encoder, batch, config.weight_decay, ws_pos, ws_neg, grads);
      if (!loss) continue;
      encoder.ApplyGradients(grads);
      loss_sum += *loss;
      ++finite;
    }
    if (2 * finite < steps) {
      throw DegenerateCandidate("more than half of the batches in epoch " +
                                std::to_string(epoch) + " were non-finite for " +
                                PrintExpr(metric));
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(finite));
    result.epochs_run = epoch;
    if (!track) continue;
    const double ndcg = Evaluate(metric, encoder.embeddings(), ds, Split::kValid, config.eval_k).ndcg;
    result.valid_ndcg.push_back(ndcg);
    if (ndcg > best_ndcg) {
      best_ndcg = ndcg;
      best = encoder.embeddings();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  result.embeddings = track ? std::move(best) : encoder.embeddings();
  if (!track) result.best_epoch = result.epochs_run;
  return result;
}

}  // namespace metricgen
