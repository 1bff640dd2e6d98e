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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "metricgen/errors.h"
#include "metricgen/ranking.h"
#include "support/oracles.h"

namespace metricgen {
namespace {

using Vec = std::vector<double>;

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

EmbeddingTable Table(std::vector<Vec> users, std::vector<Vec> items) {
  const size_t d = users[0].size();
  EmbeddingTable t{Matrix(users.size(), d), Matrix(items.size(), d)};
  for (size_t r = 0; r < users.size(); ++r) std::copy(users[r].begin(), users[r].end(), t.users.row(r).begin());
  for (size_t r = 0; r < items.size(); ++r) std::copy(items[r].begin(), items[r].end(), t.items.row(r).begin());
  return t;
}

TrainConfig Sgd(double lr, double decay = 0.0) {
  TrainConfig c;
  c.optimizer = OptimizerKind::kSgd;
  c.learning_rate = lr;
  c.weight_decay = decay;
  return c;
}

TEST(TrainConfig, Check) {
  TrainConfig c;
  EXPECT_NO_THROW(c.Check());
  c.dim = 0;
  EXPECT_THROW(c.Check(), ConfigError);
  c = {};
  c.learning_rate = -1;
  EXPECT_THROW(c.Check(), ConfigError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.Check(), ConfigError);
}

TEST(InitEmbeddings, DeterministicShapes) {
  TrainConfig c;
  c.dim = 2;
  const EmbeddingTable a = InitEmbeddings(1, 1, c);
  EXPECT_EQ(a.users.rows(), 1u);
  EXPECT_EQ(a.users.cols(), 2u);
  EXPECT_EQ(a.items.rows(), 1u);
  EXPECT_EQ(a.items.cols(), 2u);
  c.dim = 16;
  EXPECT_EQ(InitEmbeddings(30, 40, c), InitEmbeddings(30, 40, c));
  TrainConfig other = c;
  other.seed = 1;
  EXPECT_NE(InitEmbeddings(30, 40, c), InitEmbeddings(30, 40, other));
}

TEST(InitEmbeddings, ScaleSetsStandardDeviation) {
  TrainConfig c;
  c.dim = 32;
  c.init_scale = 0.1;
  const EmbeddingTable t = InitEmbeddings(500, 500, c);
  double sq = 0.0;
  for (double x : t.users.data()) sq += x * x;
  EXPECT_NEAR(std::sqrt(sq / 16000.0), 0.1, 0.005);
  c.init_scale = 0.0;
  const EmbeddingTable zero = InitEmbeddings(3, 3, c);
  for (double x : zero.items.data()) EXPECT_EQ(x, 0.0);
}

TEST(Embeddings, BinaryRoundTrip) {
  testing::TempDir dir("emb");
  TrainConfig c;
  c.dim = 3;
  const EmbeddingTable t = InitEmbeddings(4, 5, c);
  WriteEmbeddings(t, dir.path() / "emb.bin");
  EXPECT_EQ(ReadEmbeddings(dir.path() / "emb.bin"), t);
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "emb.bin"), 3 * 8 + (4 + 5) * 3 * 8u);
  std::ifstream in(dir.path() / "emb.bin", std::ios::binary);
  unsigned char header[24];
  in.read(reinterpret_cast<char*>(header), 24);
  EXPECT_EQ(header[0], 4);
  EXPECT_EQ(header[8], 5);
  EXPECT_EQ(header[16], 3);
  for (int b : {1, 2, 3, 4, 5, 6, 7}) EXPECT_EQ(header[b], 0);
}

TEST(BprLoss, EqualScoresGiveLnTwo) {
  const MfEncoder enc(Table({{1, 1}}, {{0.5, 0.5}, {0.5, 0.5}}), Sgd(0.1));
  const std::vector<Triplet> batch(5, Triplet{0, 0, 1});
  EXPECT_NEAR(BprLoss(InnerProductMetric(), enc, batch, 0.0), std::log(2.0), 1e-15);
}

TEST(BprLoss, SingleTriplet) {
  const MfEncoder enc(Table({{1, 0}}, {{1, 0}, {0, 0}}), Sgd(0.1));
  const std::vector<Triplet> batch = {{0, 0, 1}};
  EXPECT_NEAR(BprLoss(InnerProductMetric(), enc, batch, 0.0), -std::log(Sigmoid(1.0)), 1e-15);
  EXPECT_NEAR(BprLoss(InnerProductMetric(), enc, batch, 0.0), 0.3133, 5e-5);
  // Decay adds lambda * (|p|^2 + |q_i|^2 + |q_j|^2) / B.
  EXPECT_NEAR(BprLoss(InnerProductMetric(), enc, batch, 0.5), -std::log(Sigmoid(1.0)) + 1.0, 1e-15);
}

TEST(BprLoss, LargeMarginKeepsPrecision) {
  // -ln sigma(25) = ln(1 + e^-25), which 1 - sigma would round away.
  const MfEncoder enc(Table({{5, 0}}, {{5, 0}, {0, 0}}), Sgd(0.1));
  const std::vector<Triplet> batch = {{0, 0, 1}};
  const double loss = BprLoss(InnerProductMetric(), enc, batch, 0.0);
  EXPECT_NEAR(loss / std::exp(-25.0), 1.0, 1e-9);
}

TEST(BprLoss, NonFiniteThrows) {
  const MfEncoder enc(Table({{1e200}}, {{1e200}, {0}}), Sgd(0.1));
  const std::vector<Triplet> batch = {{0, 0, 1}};
  EXPECT_THROW(BprLoss(InnerProductMetric(), enc, batch, 0.0), NonFiniteError);
}

TEST(TrainStep, SgdStepOnBilinearBpr) {
  MfEncoder enc(Table({{1, 0}}, {{1, 0}, {0, 0}}), Sgd(0.1));
  const std::vector<Triplet> batch = {{0, 0, 1}};
  const auto loss = TrainStep(InnerProductMetric(), enc, batch, Sgd(0.1));
  ASSERT_TRUE(loss.has_value());
  const double s = Sigmoid(-1.0);
  // p += lr * s * (q_i - q_j); q_i += lr * s * p; q_j -= lr * s * p.
  EXPECT_NEAR(enc.user(0)[0], 1.0 + 0.1 * s, 1e-15);
  EXPECT_EQ(enc.user(0)[1], 0.0);
  EXPECT_NEAR(enc.item(0)[0], 1.0 + 0.1 * s, 1e-15);
  EXPECT_NEAR(enc.item(1)[0], -0.1 * s, 1e-15);
}

TEST(TrainStep, ZeroLearningRateLeavesEmbeddings) {
  const EmbeddingTable t = Table({{1, 2}}, {{3, 4}, {5, 6}});
  for (OptimizerKind opt : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
    TrainConfig c = Sgd(0.0, 1e-2);
    c.optimizer = opt;
    MfEncoder enc(t, c);
    const std::vector<Triplet> batch = {{0, 0, 1}};
    ASSERT_TRUE(TrainStep(InnerProductMetric(), enc, batch, c).has_value());
    EXPECT_EQ(enc.embeddings(), t);
  }
}

TEST(TrainStep, FixedBatchLossDecreases) {
  TrainConfig c = Sgd(0.05, 1e-3);
  c.dim = 4;
  c.init_scale = 0.1;
  MfEncoder enc(InitEmbeddings(3, 6, c), c);
  const std::vector<Triplet> batch = {{0, 0, 3}, {1, 1, 4}, {2, 2, 5}, {0, 1, 5}};
  const MetricGraph metric = ParseExpr("cos(u,add(v,norm(u)))");
  double previous = BprLoss(metric, enc, batch, c.weight_decay);
  for (int step = 0; step < 10; ++step) {
    ASSERT_TRUE(TrainStep(metric, enc, batch, c).has_value());
    const double now = BprLoss(metric, enc, batch, c.weight_decay);
    EXPECT_LT(now, previous) << "step " << step;
    previous = now;
  }
}

TEST(BprLossAndGradient, MatchesClosedFormForDot) {
  TrainConfig c = Sgd(0.1, 0.01);
  c.dim = 5;
  const EmbeddingTable t = InitEmbeddings(3, 7, [&] {
    TrainConfig i = c;
    i.init_scale = 1.0;
    return i;
  }());
  const MfEncoder enc(t, c);
  const std::vector<Triplet> batch = {{0, 1, 2}, {1, 3, 4}, {0, 5, 6}, {2, 1, 0}};
  const MetricGraph metric = InnerProductMetric();
  GraphEvaluator eval(metric);
  EvalWorkspace a(5), b(5);
  SparseGradients grads(3, 7, 5);
  ASSERT_TRUE(BprLossAndGradient(eval, enc, batch, c.weight_decay, a, b, grads).has_value());

  Matrix gu(3, 5), gi(7, 5);
  const double B = 4.0;
  for (const Triplet& tr : batch) {
    const auto p = t.users.row(tr.user), qi = t.items.row(tr.positive), qj = t.items.row(tr.negative);
    double delta = 0.0;
    for (int k = 0; k < 5; ++k) delta += p[k] * (qi[k] - qj[k]);
    const double s = Sigmoid(-delta) / B;
    for (int k = 0; k < 5; ++k) {
      gu(tr.user, k) += -s * (qi[k] - qj[k]) + 2 * c.weight_decay / B * p[k];
      gi(tr.positive, k) += -s * p[k] + 2 * c.weight_decay / B * qi[k];
      gi(tr.negative, k) += s * p[k] + 2 * c.weight_decay / B * qj[k];
    }
  }
  for (int u : grads.touched_users()) {
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(grads.user(u)[k], gu(u, k), 1e-10);
  }
  for (int i : grads.touched_items()) {
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(grads.item(i)[k], gi(i, k), 1e-10);
  }
  EXPECT_EQ(grads.touched_users().size(), 3u);
  EXPECT_EQ(grads.touched_items().size(), 7u);
}

TEST(TrainStep, OnlyTouchedRowsChange) {
  TrainConfig c;
  c.dim = 4;
  c.learning_rate = 0.1;
  const EmbeddingTable t = InitEmbeddings(5, 9, c);
  MfEncoder enc(t, c);
  const std::vector<Triplet> batch = {{1, 2, 7}, {3, 2, 4}};
  ASSERT_TRUE(TrainStep(InnerProductMetric(), enc, batch, c).has_value());
  for (size_t u = 0; u < 5; ++u) {
    const bool touched = u == 1 || u == 3;
    EXPECT_EQ(std::equal(t.users.row(u).begin(), t.users.row(u).end(), enc.user(u).begin()), !touched);
  }
  for (size_t i = 0; i < 9; ++i) {
    const bool touched = i == 2 || i == 4 || i == 7;
    EXPECT_EQ(std::equal(t.items.row(i).begin(), t.items.row(i).end(), enc.item(i).begin()), !touched);
  }
}

InteractionDataset SmallPlanted(double noise, int users = 300) {
  SyntheticSpec spec;
  spec.num_users = users;
  spec.num_items = 100;
  spec.interactions_per_user = 10;
  spec.noise = noise;
  spec.seed = 4;
  return GenerateSynthetic(spec).dataset;
}

TrainConfig Desk() {
  TrainConfig c;
  c.dim = 16;
  c.learning_rate = 0.01;
  c.batch_size = 256;
  return c;
}

TEST(Train, ZeroEpochsReturnsInitialEmbeddings) {
  const InteractionDataset ds = SmallPlanted(0.0, 50);
  const TrainConfig c = Desk();
  const TrainResult r = Train(InnerProductMetric(), ds, c, 0);
  EXPECT_EQ(r.embeddings, InitEmbeddings(ds.num_users(), ds.num_items(), c));
  EXPECT_EQ(r.epochs_run, 0);
  EXPECT_TRUE(r.epoch_loss.empty());
}

TEST(Train, DeterministicLossTrace) {
  const InteractionDataset ds = SmallPlanted(0.1, 100);
  const TrainResult a = Train(ParseExpr("cos(u,v)"), ds, Desk(), 3);
  const TrainResult b = Train(ParseExpr("cos(u,v)"), ds, Desk(), 3);
  ASSERT_EQ(a.epoch_loss.size(), 3u);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  EXPECT_EQ(a.embeddings, b.embeddings);
}

TEST(Train, BeatsRandomEmbeddingsOnPlantedData) {
  const InteractionDataset ds = SmallPlanted(0.0);
  const TrainConfig c = Desk();
  const double random_ndcg =
      Evaluate(InnerProductMetric(), InitEmbeddings(ds.num_users(), ds.num_items(), c), ds,
               Split::kValid)
          .ndcg;
  const TrainResult r = Train(InnerProductMetric(), ds, c, 30);
  const double trained = Evaluate(InnerProductMetric(), r.embeddings, ds, Split::kValid).ndcg;
  EXPECT_GE(trained, 3.0 * random_ndcg) << "random " << random_ndcg << " trained " << trained;
}

TEST(Train, PatienceKeepsBestEpoch) {
  const InteractionDataset ds = SmallPlanted(0.1, 100);
  TrainConfig c = Desk();
  c.patience = 2;
  const TrainResult r = Train(InnerProductMetric(), ds, c, 40);
  ASSERT_EQ(r.valid_ndcg.size(), static_cast<size_t>(r.epochs_run));
  ASSERT_GE(r.best_epoch, 1);
  const double best = Evaluate(InnerProductMetric(), r.embeddings, ds, Split::kValid).ndcg;
  EXPECT_EQ(best, r.valid_ndcg[static_cast<size_t>(r.best_epoch - 1)]);
  for (double x : r.valid_ndcg) EXPECT_LE(x, best);
  if (r.epochs_run < 40) EXPECT_EQ(r.epochs_run, r.best_epoch + 2);
}

TEST(Train, OverflowingMetricIsDegenerate) {
  const InteractionDataset ds = SmallPlanted(0.1, 20);
  TrainConfig c = Desk();
  c.init_scale = 1e200;
  EXPECT_THROW(Train(InnerProductMetric(), ds, c, 1), DegenerateCandidate);
}

}  // namespace
}  // namespace metricgen
