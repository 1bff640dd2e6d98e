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

#ifndef METRICGEN_RANKING_H_
#define METRICGEN_RANKING_H_

#include <span>
#include <string>
#include <vector>

#include "metricgen/dataset.h"
#include "metricgen/matrix.h"
#include "metricgen/metric_graph.h"

namespace metricgen {

struct EmbeddingTable;

// Item ids sorted by descending score, ties by ascending id, with the
// (sorted) masked ids removed. Non-finite scores sort last.
std::vector<int> RankItems(std::span<const double> scores, std::span<const int> mask = {});

std::vector<int> RankItems(const MetricGraph& metric, const EmbeddingTable& emb, int user,
                           std::span<const int> mask = {});

struct TopKMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
};

// Binary-relevance Recall@K and NDCG@K with log2(rank + 1) discounts.
// Throws EmptyRelevant.
TopKMetrics MetricsAtK(std::span<const int> ranked, std::span<const int> relevant, int k);

struct EvalReport {
  int k = 20;
  Split split = Split::kValid;
  double recall = 0.0;
  double ndcg = 0.0;
  std::vector<int> users;
  std::vector<double> user_recall;
  std::vector<double> user_ndcg;
  double wall_seconds = 0.0;

  // "key=value" lines: split, k, users, recall, ndcg, wall_seconds.
  std::string ToKeyValue() const;
  std::string ToJson() const;
};

// Full-catalog ranking of every user with at least one item in `split`,
// train positives masked. Aggregates are arithmetic means over users.
EvalReport Evaluate(const MetricGraph& metric, const EmbeddingTable& emb,
                    const InteractionDataset& ds, Split split, int k = 20);

}  // namespace metricgen

#endif  // METRICGEN_RANKING_H_
