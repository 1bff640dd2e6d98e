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

#include "metricgen/ranking.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "json.hpp"
#include "metricgen/errors.h"
#include "metricgen/trainer.h"
#include "support/oracles.h"

namespace metricgen {
namespace {

using Ids = std::vector<int>;

TEST(RankItems, Examples) {
  const std::vector<double> scores = {0.1, 0.9, 0.5};
  EXPECT_EQ(RankItems(scores), (Ids{1, 2, 0}));
  EXPECT_EQ(RankItems(std::vector<double>{0.5, 0.5}), (Ids{0, 1}));
  EXPECT_EQ(RankItems(scores, Ids{1}), (Ids{2, 0}));
}

TEST(RankItems, NonFiniteScoresSinkToTheBottom) {
  const double nan = std::nan("");
  EXPECT_EQ(RankItems(std::vector<double>{nan, -5.0, 1.0}), (Ids{2, 1, 0}));
}

TEST(MetricsAtK, Examples) {
  const TopKMetrics first = MetricsAtK(Ids{7, 1, 2}, Ids{7}, 20);
  EXPECT_DOUBLE_EQ(first.recall, 1.0);
  EXPECT_DOUBLE_EQ(first.ndcg, 1.0);
  const TopKMetrics second = MetricsAtK(Ids{1, 7, 2}, Ids{7}, 20);
  EXPECT_DOUBLE_EQ(second.recall, 1.0);
  EXPECT_NEAR(second.ndcg, 1.0 / std::log2(3.0), 1e-15);
  EXPECT_NEAR(second.ndcg, 0.6309, 5e-5);
}

TEST(MetricsAtK, EmptyRelevantThrows) {
  EXPECT_THROW(MetricsAtK(Ids{0, 1}, Ids{}, 20), EmptyRelevant);
}

TEST(MetricsAtK, RelevantBeyondCutoffScoresZero) {
  const TopKMetrics m = MetricsAtK(Ids{0, 1, 2, 3}, Ids{3}, 2);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.ndcg, 0.0);
}

// Random instance with at most 10 items and coarse scores, so ties occur.
struct Instance {
  std::vector<double> scores;
  Ids mask;
  Ids relevant;
  int k;
};

Instance RandomInstance(std::mt19937_64& rng) {
  Instance in;
  const int n = std::uniform_int_distribution<int>(2, 10)(rng);
  std::uniform_int_distribution<int> level(0, 4);
  for (int i = 0; i < n; ++i) in.scores.push_back(level(rng) * 0.25);
  for (int i = 0; i < n; ++i) {
    const int role = std::uniform_int_distribution<int>(0, 3)(rng);
    if (role == 0) in.mask.push_back(i);
    if (role == 1) in.relevant.push_back(i);
  }
  if (in.relevant.empty()) {
    in.relevant.push_back(n - 1);
    std::erase(in.mask, n - 1);
  }
  in.k = std::uniform_int_distribution<int>(1, 12)(rng);
  return in;
}

TEST(MetricsAtK, MatchesBruteForceOnSmallInstances) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const Instance in = RandomInstance(rng);
    const TopKMetrics got = MetricsAtK(RankItems(in.scores, in.mask), in.relevant, in.k);
    const testing::RefTopK want = testing::BruteForceTopK(in.scores, in.mask, in.relevant, in.k);
    ASSERT_NEAR(got.recall, want.recall, 1e-12) << "trial " << trial;
    ASSERT_NEAR(got.ndcg, want.ndcg, 1e-12) << "trial " << trial;
    ASSERT_LE(got.ndcg, 1.0);
  }
}

TEST(MetricsAtK, RecallIsNonDecreasingInK) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = RandomInstance(rng);
    const Ids ranked = RankItems(in.scores, in.mask);
    double previous = 0.0;
    for (int k = 1; k <= 11; ++k) {
      const double recall = MetricsAtK(ranked, in.relevant, k).recall;
      ASSERT_GE(recall, previous);
      previous = recall;
    }
  }
}

TEST(RankItems, MonotoneTransformInvariance) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores(50);
    for (double& s : scores) s = normal(rng);
    const Ids base = RankItems(scores);
    for (auto f : {+[](double x) { return 2.0 * x; }, +[](double x) { return x * x * x + x; },
                   +[](double x) { return std::exp(x); }}) {
      std::vector<double> moved = scores;
      for (double& s : moved) s = f(s);
      ASSERT_EQ(RankItems(moved), base);
    }
  }
}

EmbeddingTable RandomTable(int users, int items, int dim, std::uint64_t seed) {
  TrainConfig c;
  c.dim = dim;
  c.seed = seed;
  return InitEmbeddings(users, items, c);
}

TEST(Evaluate, RandomEmbeddingsRecallMatchesCutoffFraction) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> item(0, 199);
  InteractionDataset::Lists train(500), test(500);
  for (int u = 0; u < 500; ++u) {
    train[u] = {item(rng)};
    int t = item(rng);
    while (t == train[u][0]) t = item(rng);
    test[u] = {t};
  }
  const InteractionDataset ds(500, 200, train, InteractionDataset::Lists(500), test);
  const EvalReport r =
      Evaluate(InnerProductMetric(), RandomTable(500, 200, 8, 1), ds, Split::kTest, 20);
  EXPECT_EQ(r.users.size(), 500u);
  EXPECT_NEAR(r.recall, 0.1, 0.03);
}

TEST(Evaluate, PlantedScoresRecoverEveryPositive) {
  SyntheticSpec spec;
  spec.num_users = 100;
  spec.num_items = 80;
  spec.interactions_per_user = 10;
  spec.noise = 0.0;
  spec.metric = "cos(u,v)";
  const SyntheticData data = GenerateSynthetic(spec);
  const EmbeddingTable planted{data.user_embeddings, data.item_embeddings};
  for (int u = 0; u < spec.num_users; ++u) {
    Ids all(data.dataset.positives(u).begin(), data.dataset.positives(u).end());
    ASSERT_EQ(all.size(), 10u);
    const Ids ranked = RankItems(data.metric, planted, u);
    const TopKMetrics m = MetricsAtK(ranked, all, 10);
    ASSERT_EQ(m.recall, 1.0) << "user " << u;
    ASSERT_NEAR(m.ndcg, 1.0, 1e-15);
  }
}

TEST(Evaluate, AggregateIsMeanOfUsersAndDeterministic) {
  SyntheticSpec spec;
  spec.num_users = 60;
  spec.num_items = 50;
  spec.interactions_per_user = 8;
  const SyntheticData data = GenerateSynthetic(spec);
  const EmbeddingTable emb = RandomTable(60, 50, 16, 2);
  const EvalReport a = Evaluate(InnerProductMetric(), emb, data.dataset, Split::kValid, 5);
  const EvalReport b = Evaluate(InnerProductMetric(), emb, data.dataset, Split::kValid, 5);
  EXPECT_EQ(a.users, b.users);
  EXPECT_EQ(a.user_ndcg, b.user_ndcg);
  EXPECT_EQ(a.recall, b.recall);
  double sum = 0.0;
  for (double x : a.user_recall) sum += x;
  EXPECT_NEAR(a.recall, sum / static_cast<double>(a.users.size()), 1e-15);
  for (size_t i = 0; i < a.users.size(); ++i) {
    // Rebuild the user's ranking with train items masked.
    const int u = a.users[i];
    const Ids ranked = RankItems(InnerProductMetric(), emb, u, data.dataset.items(Split::kTrain, u));
    const Ids rel(data.dataset.items(Split::kValid, u).begin(),
                  data.dataset.items(Split::kValid, u).end());
    EXPECT_EQ(MetricsAtK(ranked, rel, 5).ndcg, a.user_ndcg[i]);
  }
}

TEST(EvalReport, Serializations) {
  EvalReport r;
  r.k = 20;
  r.split = Split::kTest;
  r.recall = 0.25;
  r.ndcg = 0.125;
  r.users = {0, 1};
  const std::string kv = r.ToKeyValue();
  EXPECT_NE(kv.find("split=test\n"), std::string::npos);
  EXPECT_NE(kv.find("recall@20=0.250000\n"), std::string::npos);
  EXPECT_NE(kv.find("ndcg@20=0.125000\n"), std::string::npos);
  EXPECT_NE(kv.find("users=2\n"), std::string::npos);
  const nlohmann::json j = nlohmann::json::parse(r.ToJson());
  EXPECT_EQ(j["split"], "test");
  EXPECT_EQ(j["recall"], 0.25);
  EXPECT_EQ(j["ndcg"], 0.125);
  EXPECT_EQ(j["k"], 20);
}

}  // namespace
}  // namespace metricgen
