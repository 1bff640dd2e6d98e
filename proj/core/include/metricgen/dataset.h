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

#ifndef METRICGEN_DATASET_H_
#define METRICGEN_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "metricgen/matrix.h"
#include "metricgen/metric_graph.h"
#include "metricgen/random.h"

namespace metricgen {

enum class Split { kTrain, kValid, kTest };

const char* SplitName(Split split);

struct Triplet {
  int user = 0;
  int positive = 0;
  int negative = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// Implicit-feedback interactions with disjoint train/valid/test splits.
// Each split is a per-user sorted, duplicate-free item list.
class InteractionDataset {
 public:
  using Lists = std::vector<std::vector<int>>;

  // Sorts and deduplicates the lists, drops valid/test edges that also
  // appear in train (or valid, for test) and drops valid/test rows of users
  // without train items. Throws FormatError on out of range ids.
  InteractionDataset(int num_users, int num_items, Lists train, Lists valid, Lists test);

  int num_users() const { return num_users_; }
  int num_items() const { return num_items_; }

  const Lists& split(Split s) const;
  std::span<const int> items(Split s, int user) const { return split(s)[static_cast<size_t>(user)]; }
  std::size_t num_interactions(Split s) const;

  // True if the user interacted with the item in any split.
  bool IsPositive(int user, int item) const;
  std::span<const int> positives(int user) const { return all_[static_cast<size_t>(user)]; }

  // Flattened train edges in (user, item) order.
  const std::vector<std::pair<int, int>>& train_edges() const { return train_edges_; }

  friend bool operator==(const InteractionDataset& a, const InteractionDataset& b) {
    return a.num_users_ == b.num_users_ && a.num_items_ == b.num_items_ &&
           a.train_ == b.train_ && a.valid_ == b.valid_ && a.test_ == b.test_;
  }

 private:
  int num_users_;
  int num_items_;
  Lists train_;
  Lists valid_;
  Lists test_;
  Lists all_;
  std::vector<std::pair<int, int>> train_edges_;
};

// One file in the "user item item ..." format. Returns per-user item lists
// indexed by user id; *max_item receives the largest item id seen (-1 if
// none). Throws FormatError with the 1-based line number.
InteractionDataset::Lists ReadAdjacencyFile(const std::filesystem::path& path, int* max_item);

// Loads train/test files (and an optional validation file). Counts are the
// largest ids seen plus one. Throws FormatError or EmptyDatasetError.
InteractionDataset LoadAdjacency(const std::filesystem::path& train_path,
                                 const std::filesystem::path& test_path = {},
                                 const std::filesystem::path& valid_path = {});

// Writes train.txt, valid.txt and test.txt into `dir`.
void WriteAdjacency(const InteractionDataset& ds, const std::filesystem::path& dir);

// Moves ceil(fraction * |train_u|) random train items of every user to the
// validation split, always leaving at least one train item.
InteractionDataset SplitValidation(const InteractionDataset& ds, double fraction,
                                   std::uint64_t seed);

// Edge-uniform BPR triplet sampler with rejection-sampled negatives.
class TripletSampler {
 public:
  static constexpr int kMaxRejections = 1000;

  TripletSampler(const InteractionDataset& ds, std::uint64_t seed);

  // Throws SamplerStall when a user has no unobserved item in reach.
  Triplet Sample();
  std::vector<Triplet> Sample(std::size_t batch_size);

 private:
  const InteractionDataset* ds_;
  Rng rng_;
};

struct SyntheticSpec {
  int num_users = 1000;
  int num_items = 200;
  int dim = 16;
  std::string metric = "dot(u,v)";
  int interactions_per_user = 20;
  double noise = 0.1;
  std::uint64_t seed = 0;

  void Check() const;
};

struct SyntheticData {
  InteractionDataset dataset;
  Matrix user_embeddings;
  Matrix item_embeddings;
  MetricGraph metric;
};

// Planted embeddings ~ N(0, 1); each user's positives are the top-m items
// under the planted metric (ties by id), each replaced by a uniform random
// item with probability `noise`; rows are split 80/10/10.
SyntheticData GenerateSynthetic(const SyntheticSpec& spec);

// Sidecar written next to synthetic adjacency files.
void WriteSyntheticSidecar(const SyntheticSpec& spec, const std::filesystem::path& dir);

}  // namespace metricgen

#endif  // METRICGEN_DATASET_H_
