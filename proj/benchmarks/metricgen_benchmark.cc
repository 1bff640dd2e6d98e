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

#include <benchmark/benchmark.h>

#include <random>

#include "metricgen/dataset.h"
#include "metricgen/equivalence.h"
#include "metricgen/evaluator.h"
#include "metricgen/metric_graph.h"
#include "metricgen/surrogate.h"
#include "metricgen/trainer.h"

namespace metricgen {
namespace {

constexpr const char* kDeep = "l2d(smul(2,sub(norm(u),proj(v,u))),add(had(u,v),norm(v)))";

std::vector<double> Random(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::vector<double> x(static_cast<size_t>(d));
  for (double& v : x) v = n(rng);
  return x;
}

void BM_Forward(benchmark::State& state, const char* expr) {
  const MetricGraph g = ParseExpr(expr);
  const GraphEvaluator eval(g);
  const int d = static_cast<int>(state.range(0));
  const auto u = Random(d, 1), v = Random(d, 2);
  EvalWorkspace ws(d);
  double score = 0.0;
  for (auto _ : state) {
    eval.Forward(u, v, ws, &score);
    benchmark::DoNotOptimize(score);
  }
}
BENCHMARK_CAPTURE(BM_Forward, dot, "dot(u,v)")->Arg(32)->Arg(64);
BENCHMARK_CAPTURE(BM_Forward, deep, kDeep)->Arg(32)->Arg(64);

void BM_ForwardBackward(benchmark::State& state, const char* expr) {
  const MetricGraph g = ParseExpr(expr);
  const GraphEvaluator eval(g);
  const int d = static_cast<int>(state.range(0));
  const auto u = Random(d, 1), v = Random(d, 2);
  std::vector<double> gu(static_cast<size_t>(d)), gv(static_cast<size_t>(d));
  EvalWorkspace ws(d);
  double score = 0.0;
  for (auto _ : state) {
    eval.Forward(u, v, ws, &score);
    eval.Backward(u, v, ws, 1.0, gu, gv);
    benchmark::DoNotOptimize(gu.data());
  }
}
BENCHMARK_CAPTURE(BM_ForwardBackward, dot, "dot(u,v)")->Arg(32);
BENCHMARK_CAPTURE(BM_ForwardBackward, deep, kDeep)->Arg(32);

void BM_ScoreItems(benchmark::State& state, const char* expr) {
  const MetricGraph g = ParseExpr(expr);
  const GraphEvaluator eval(g);
  TrainConfig c;
  c.dim = 32;
  const EmbeddingTable emb = InitEmbeddings(1, static_cast<int>(state.range(0)), c);
  std::vector<double> scores(emb.items.rows());
  EvalWorkspace ws(32);
  for (auto _ : state) {
    eval.ScoreItems(emb.users.row(0), emb.items, ws, scores);
    benchmark::DoNotOptimize(scores.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_ScoreItems, dot, "dot(u,v)")->Arg(200)->Arg(2000);
BENCHMARK_CAPTURE(BM_ScoreItems, deep, kDeep)->Arg(200);

void BM_TrainEpoch(benchmark::State& state) {
  SyntheticSpec spec;
  spec.num_users = 1000;
  spec.num_items = 200;
  const InteractionDataset ds = GenerateSynthetic(spec).dataset;
  TrainConfig c;
  c.dim = static_cast<int>(state.range(0));
  c.learning_rate = 0.01;
  c.batch_size = 256;
  for (auto _ : state) {
    TrainResult r = Train(InnerProductMetric(), ds, c, 1);
    benchmark::DoNotOptimize(r.epoch_loss.data());
  }
}
BENCHMARK(BM_TrainEpoch)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ScoreVector(benchmark::State& state) {
  const MetricGraph g = ParseExpr(kDeep);
  const ProbeSet probes(64, 16, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ComputeScoreVector(g, probes));
}
BENCHMARK(BM_ScoreVector);

void BM_SurrogatePredict(benchmark::State& state) {
  const SurrogateModel model(TokenVocabulary(), 16, 32, 1);
  const MetricGraph g = ParseExpr(kDeep);
  const std::vector<int> seq = GraphToSequence(g, model.vocabulary());
  for (auto _ : state) benchmark::DoNotOptimize(model.Predict(seq));
}
BENCHMARK(BM_SurrogatePredict);

}  // namespace
}  // namespace metricgen

BENCHMARK_MAIN();
