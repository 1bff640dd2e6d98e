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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include "json.hpp"

#include "metricgen/errors.h"
#include "metricgen/evaluator.h"
#include "metricgen/trainer.h"

namespace metricgen {

namespace {

// Descending score, ascending id; non-finite scores last.
struct ScoreOrder {
  std::span<const double> scores;
  bool operator()(int a, int b) const {
    double sa = scores[static_cast<size_t>(a)];
    double sb = scores[static_cast<size_t>(b)];
    if (!std::isfinite(sa)) sa = -std::numeric_limits<double>::infinity();
    if (!std::isfinite(sb)) sb = -std::numeric_limits<double>::infinity();
    if (sa != sb) return sa > sb;
    return a < b;
  }
};

std::vector<int> Unmasked(size_t n, std::span<const int> mask) {
  std::vector<int> ids;
  ids.reserve(n);
  size_t m = 0;
  for (int i = 0; i < static_cast<int>(n); ++i) {
    while (m < mask.size() && mask[m] < i) ++m;
    if (m < mask.size() && mask[m] == i) continue;
    ids.push_back(i);
  }
  return ids;
}

}  // namespace

std::vector<int> RankItems(std::span<const double> scores, std::span<const int> mask) {
  std::vector<int> ids = Unmasked(scores.size(), mask);
  std::sort(ids.begin(), ids.end(), ScoreOrder{scores});
  return ids;
}

std::vector<int> RankItems(const MetricGraph& metric, const EmbeddingTable& emb, int user,
                           std::span<const int> mask) {
  std::vector<double> scores(emb.items.rows());
  EvalWorkspace ws(emb.dim());
  GraphEvaluator(metric).ScoreItems(emb.users.row(static_cast<size_t>(user)), emb.items, ws,
                                    scores);
  return RankItems(scores, mask);
}

TopKMetrics MetricsAtK(std::span<const int> ranked, std::span<const int> relevant, int k) {
  if (relevant.empty()) throw EmptyRelevant("relevant set is empty");
  std::vector<int> rel(relevant.begin(), relevant.end());
  std::sort(rel.begin(), rel.end());
  const size_t depth = std::min(ranked.size(), static_cast<size_t>(std::max(k, 0)));
  double dcg = 0.0;
  size_t hits = 0;
  for (size_t r = 0; r < depth; ++r) {
    if (std::binary_search(rel.begin(), rel.end(), ranked[r])) {
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
      ++hits;
    }
  }
  double idcg = 0.0;
  const size_t ideal = std::min(rel.size(), static_cast<size_t>(std::max(k, 0)));
  for (size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  TopKMetrics out;
  out.recall = static_cast<double>(hits) / static_cast<double>(rel.size());
  out.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
  return out;
}

EvalReport Evaluate(const MetricGraph& metric, const EmbeddingTable& emb,
                    const InteractionDataset& ds, Split split, int k) {
  const auto start = std::chrono::steady_clock::now();
  EvalReport report;
  report.k = k;
  report.split = split;
  GraphEvaluator eval(metric);
  EvalWorkspace ws(emb.dim());
  const size_t n_items = emb.items.rows();
  std::vector<double> scores(n_items);
  std::vector<int> ids;
  for (int u = 0; u < ds.num_users(); ++u) {
    std::span<const int> relevant = ds.items(split, u);
    if (relevant.empty()) continue;
    eval.ScoreItems(emb.users.row(static_cast<size_t>(u)), emb.items, ws, scores);
    ids = Unmasked(n_items, ds.items(Split::kTrain, u));
    const size_t top = std::min(ids.size(), static_cast<size_t>(k));
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(top), ids.end(),
                      ScoreOrder{scores});
    ids.resize(top);
    const TopKMetrics m = MetricsAtK(ids, relevant, k);
    report.users.push_back(u);
    report.user_recall.push_back(m.recall);
    report.user_ndcg.push_back(m.ndcg);
  }
  if (!report.users.empty()) {
    const double n = static_cast<double>(report.users.size());
    report.recall = std::accumulate(report.user_recall.begin(), report.user_recall.end(), 0.0) / n;
    report.ndcg = std::accumulate(report.user_ndcg.begin(), report.user_ndcg.end(), 0.0) / n;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string EvalReport::ToKeyValue() const {
  return fmt::format("split={}\nk={}\nusers={}\nrecall@{}={:.6f}\nndcg@{}={:.6f}\nwall_seconds={:.3f}\n",
                     SplitName(split), k, users.size(), k, recall, k, ndcg, wall_seconds);
}

std::string EvalReport::ToJson() const {
  nlohmann::json j;
  j["split"] = SplitName(split);
  j["k"] = k;
  j["users"] = users.size();
  j["recall"] = recall;
  j["ndcg"] = ndcg;
  j["wall_seconds"] = wall_seconds;
  return j.dump(2);
}

}  // namespace metricgen
