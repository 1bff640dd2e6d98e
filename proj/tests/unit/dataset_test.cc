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

#include "metricgen/dataset.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "metricgen/errors.h"
#include "metricgen/evaluator.h"
#include "support/oracles.h"

namespace metricgen {
namespace {

using Lists = InteractionDataset::Lists;
using testing::TempDir;

void WriteFile(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

void ExpectInvariants(const InteractionDataset& ds) {
  for (int u = 0; u < ds.num_users(); ++u) {
    std::set<int> seen;
    for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
      auto items = ds.items(s, u);
      ASSERT_TRUE(std::is_sorted(items.begin(), items.end()));
      for (int i : items) {
        ASSERT_GE(i, 0);
        ASSERT_LT(i, ds.num_items());
        ASSERT_TRUE(seen.insert(i).second) << "user " << u << " item " << i << " in two splits";
      }
      if (s != Split::kTrain && !items.empty()) ASSERT_FALSE(ds.items(Split::kTrain, u).empty());
    }
  }
}

TEST(LoadAdjacency, ParsesLines) {
  TempDir dir("load");
  WriteFile(dir.path() / "train.txt", "0 1 2 3\n1 0\n\n5\n");
  WriteFile(dir.path() / "test.txt", "0 4\n");
  const InteractionDataset ds = LoadAdjacency(dir.path() / "train.txt", dir.path() / "test.txt");
  EXPECT_EQ(ds.num_users(), 6);
  EXPECT_EQ(ds.num_items(), 5);
  EXPECT_EQ(std::vector<int>(ds.items(Split::kTrain, 0).begin(), ds.items(Split::kTrain, 0).end()),
            (std::vector<int>{1, 2, 3}));
  EXPECT_TRUE(ds.items(Split::kTrain, 5).empty());
  EXPECT_EQ(ds.num_interactions(Split::kTrain), 4u);
  EXPECT_EQ(ds.num_interactions(Split::kTest), 1u);
  EXPECT_TRUE(ds.IsPositive(0, 4));
  ExpectInvariants(ds);
}

TEST(LoadAdjacency, BadTokenReportsLine) {
  TempDir dir("badtoken");
  WriteFile(dir.path() / "train.txt", "0 1\n1 2\n2 x\n");
  try {
    LoadAdjacency(dir.path() / "train.txt");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  WriteFile(dir.path() / "neg.txt", "0 -1\n");
  EXPECT_THROW(LoadAdjacency(dir.path() / "neg.txt"), FormatError);
}

TEST(LoadAdjacency, MissingFileAndEmptyData) {
  TempDir dir("missing");
  EXPECT_THROW(LoadAdjacency(dir.path() / "absent.txt"), FormatError);
  WriteFile(dir.path() / "train.txt", "0\n1\n");
  EXPECT_THROW(LoadAdjacency(dir.path() / "train.txt"), EmptyDatasetError);
}

TEST(LoadAdjacency, WriteRoundTrip) {
  TempDir dir("roundtrip");
  SyntheticSpec spec;
  spec.num_users = 40;
  spec.num_items = 30;
  spec.interactions_per_user = 10;
  const InteractionDataset ds = GenerateSynthetic(spec).dataset;
  WriteAdjacency(ds, dir.path());
  const InteractionDataset back = LoadAdjacency(dir.path() / "train.txt", dir.path() / "test.txt",
                                                dir.path() / "valid.txt");
  EXPECT_EQ(back, ds);
}

TEST(InteractionDataset, EnforcesSplitInvariants) {
  Lists train = {{3, 1, 1}, {}};
  Lists valid = {{1, 2}, {0}};
  Lists test = {{2, 4}, {1}};
  const InteractionDataset ds(2, 5, train, valid, test);
  EXPECT_EQ(std::vector<int>(ds.items(Split::kTrain, 0).begin(), ds.items(Split::kTrain, 0).end()),
            (std::vector<int>{1, 3}));
  EXPECT_EQ(ds.items(Split::kValid, 0).size(), 1u);
  EXPECT_EQ(ds.items(Split::kTest, 0).size(), 1u);
  EXPECT_EQ(ds.items(Split::kTest, 0)[0], 4);
  // User 1 has no train items, so it is excluded from evaluation.
  EXPECT_TRUE(ds.items(Split::kValid, 1).empty());
  EXPECT_TRUE(ds.items(Split::kTest, 1).empty());
  ExpectInvariants(ds);
  EXPECT_THROW(InteractionDataset(1, 2, Lists{{2}}, {}, {}), FormatError);
}

TEST(SplitValidation, CeilingPerUser) {
  Lists train(3);
  train[0].resize(10);
  std::iota(train[0].begin(), train[0].end(), 0);
  train[1] = {4};
  train[2] = {1, 2, 3};
  const InteractionDataset ds(3, 10, train, {}, {});
  const InteractionDataset split = SplitValidation(ds, 0.1, 9);
  EXPECT_EQ(split.items(Split::kValid, 0).size(), 1u);
  EXPECT_EQ(split.items(Split::kTrain, 0).size(), 9u);
  EXPECT_EQ(split.items(Split::kValid, 1).size(), 0u);
  EXPECT_EQ(split.items(Split::kTrain, 1).size(), 1u);
  EXPECT_EQ(split.items(Split::kValid, 2).size(), 1u);
  ExpectInvariants(split);
  EXPECT_EQ(SplitValidation(ds, 0.1, 9), split);
  EXPECT_THROW(SplitValidation(ds, 0.0, 9), ConfigError);
  EXPECT_THROW(SplitValidation(ds, 1.0, 9), ConfigError);
}

TEST(SplitValidation, DifferentSeedsDiffer) {
  Lists train(20);
  for (auto& row : train) {
    row.resize(30);
    std::iota(row.begin(), row.end(), 0);
  }
  const InteractionDataset ds(20, 30, train, {}, {});
  EXPECT_NE(SplitValidation(ds, 0.2, 1), SplitValidation(ds, 0.2, 2));
}

TEST(TripletSampler, ForcedOutcome) {
  const InteractionDataset ds(1, 2, Lists{{0}}, {}, {});
  TripletSampler sampler(ds, 3);
  for (const Triplet& t : sampler.Sample(100)) EXPECT_EQ(t, (Triplet{0, 0, 1}));
}

TEST(TripletSampler, EdgeUniformUserFrequencies) {
  // Train degrees 1 and 3: users drawn in proportion 1:3.
  const InteractionDataset ds(2, 10, Lists{{0}, {1, 2, 3}}, {}, {});
  TripletSampler sampler(ds, 17);
  std::map<int, int> counts;
  std::map<std::pair<int, int>, int> edges;
  for (const Triplet& t : sampler.Sample(10000)) {
    ++counts[t.user];
    ++edges[{t.user, t.positive}];
    ASSERT_FALSE(ds.IsPositive(t.user, t.negative));
    ASSERT_TRUE(std::binary_search(ds.items(Split::kTrain, t.user).begin(),
                                   ds.items(Split::kTrain, t.user).end(), t.positive));
  }
  EXPECT_NEAR(counts[0] / 10000.0, 0.25, 0.05 * 0.25);
  EXPECT_NEAR(counts[1] / 10000.0, 0.75, 0.05 * 0.75);
  for (const auto& [edge, n] : edges) EXPECT_NEAR(n / 10000.0, 0.25, 0.05 * 0.25);
}

TEST(TripletSampler, NegativesAvoidEveryPositiveSplit) {
  const InteractionDataset ds(1, 4, Lists{{0}}, Lists{{1}}, Lists{{2}});
  TripletSampler sampler(ds, 5);
  for (const Triplet& t : sampler.Sample(200)) EXPECT_EQ(t.negative, 3);
}

TEST(TripletSampler, FullRowStalls) {
  const InteractionDataset ds(1, 3, Lists{{0, 1, 2}}, {}, {});
  TripletSampler sampler(ds, 1);
  EXPECT_THROW(sampler.Sample(), SamplerStall);
  const InteractionDataset empty(1, 3, Lists{{}}, {}, {});
  EXPECT_THROW(TripletSampler(empty, 1), EmptyDatasetError);
}

TEST(SyntheticSpec, Check) {
  SyntheticSpec spec;
  EXPECT_NO_THROW(spec.Check());
  spec.interactions_per_user = spec.num_items;
  EXPECT_THROW(spec.Check(), ConfigError);
  spec = {};
  spec.noise = 1.0;
  EXPECT_THROW(spec.Check(), ConfigError);
  spec = {};
  spec.metric = "add(u,v)";
  EXPECT_THROW(GenerateSynthetic(spec), ValidationError);
}

TEST(GenerateSynthetic, NoiselessPositivesArePlantedTopM) {
  SyntheticSpec spec;
  spec.num_users = 60;
  spec.num_items = 50;
  spec.interactions_per_user = 5;
  spec.noise = 0.0;
  spec.seed = 12;
  const SyntheticData data = GenerateSynthetic(spec);
  ExpectInvariants(data.dataset);
  EvalWorkspace ws(spec.dim);
  for (int u = 0; u < spec.num_users; ++u) {
    std::vector<std::pair<double, int>> scored;
    for (int i = 0; i < spec.num_items; ++i) {
      scored.push_back({-Forward(data.metric, data.user_embeddings.row(u),
                                 data.item_embeddings.row(i), ws),
                        i});
    }
    std::sort(scored.begin(), scored.end());
    std::vector<int> top;
    for (int k = 0; k < 5; ++k) top.push_back(scored[k].second);
    std::sort(top.begin(), top.end());
    const auto pos = data.dataset.positives(u);
    EXPECT_EQ(std::vector<int>(pos.begin(), pos.end()), top) << "user " << u;
  }
}

TEST(GenerateSynthetic, SplitSizes) {
  SyntheticSpec spec;
  spec.num_users = 10;
  const SyntheticData data = GenerateSynthetic(spec);
  for (int u = 0; u < 10; ++u) {
    EXPECT_EQ(data.dataset.items(Split::kTrain, u).size(), 16u);
    EXPECT_EQ(data.dataset.items(Split::kValid, u).size(), 2u);
    EXPECT_EQ(data.dataset.items(Split::kTest, u).size(), 2u);
  }
}

TEST(GenerateSynthetic, DeterministicPerSeed) {
  SyntheticSpec spec;
  spec.num_users = 50;
  spec.noise = 0.0;
  EXPECT_EQ(GenerateSynthetic(spec).dataset, GenerateSynthetic(spec).dataset);
  spec.noise = 0.3;
  EXPECT_EQ(GenerateSynthetic(spec).dataset, GenerateSynthetic(spec).dataset);
  SyntheticSpec other = spec;
  other.seed = 1;
  EXPECT_NE(GenerateSynthetic(spec).dataset, GenerateSynthetic(other).dataset);
}

TEST(GenerateSynthetic, NearFullRows) {
  SyntheticSpec spec;
  spec.num_users = 20;
  spec.num_items = 30;
  spec.interactions_per_user = 29;
  const SyntheticData data = GenerateSynthetic(spec);
  ExpectInvariants(data.dataset);
  for (int u = 0; u < 20; ++u) EXPECT_EQ(data.dataset.positives(u).size(), 29u);
  TripletSampler sampler(data.dataset, 1);
  for (const Triplet& t : sampler.Sample(100)) EXPECT_FALSE(data.dataset.IsPositive(t.user, t.negative));
}

TEST(WriteSyntheticSidecar, RecordsPlantedTruth) {
  TempDir dir("sidecar");
  SyntheticSpec spec;
  spec.metric = "cos(u,v)";
  spec.seed = 99;
  WriteSyntheticSidecar(spec, dir.path());
  std::ifstream in(dir.path() / "planted.cfg");
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_NE(text.find("metric = cos(u,v)"), std::string::npos);
  EXPECT_NE(text.find("seed = 99"), std::string::npos);
}

}  // namespace
}  // namespace metricgen
