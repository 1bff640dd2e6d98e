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

#ifndef METRICGEN_EVALUATOR_H_
#define METRICGEN_EVALUATOR_H_

#include <span>
#include <vector>

#include "metricgen/matrix.h"
#include "metricgen/metric_graph.h"

namespace metricgen {

inline constexpr double kDefaultEpsilon = 1e-12;

// Per-caller scratch space for forward values and adjoints. A workspace is
// tied to one embedding dimension and may be reused across graphs.
class EvalWorkspace {
 public:
  explicit EvalWorkspace(int dim, double epsilon = kDefaultEpsilon);

  int dim() const { return dim_; }
  double epsilon() const { return epsilon_; }

 private:
  friend class GraphEvaluator;

  void Reserve(int num_nodes);

  int dim_;
  double epsilon_;
  std::vector<double> ones_;
  std::vector<double> vectors_;      // num_nodes x dim forward values
  std::vector<double> scalars_;      // num_nodes scalar values
  std::vector<double> aux_;          // num_nodes x 2 cached norms
  std::vector<const double*> src_;   // where each vector node's value lives
  std::vector<double> adj_vectors_;  // num_nodes x dim
  std::vector<double> adj_scalars_;
};

// Forward value of the metric at (u, v). Every norm denominator is guarded
// as max(norm, epsilon). Throws DimensionMismatch or NonFiniteError.
double Forward(const MetricGraph& graph, std::span<const double> u,
               std::span<const double> v, EvalWorkspace& ws);

struct Gradients {
  std::vector<double> user;
  std::vector<double> item;
};

// Reverse-mode gradient of the metric output with respect to u and v.
// Requires a preceding Forward() on the same inputs and workspace.
Gradients Backward(const MetricGraph& graph, std::span<const double> u,
                   std::span<const double> v, EvalWorkspace& ws);

// Row-wise Forward(). Throws DimensionMismatch if the row counts differ.
std::vector<double> ForwardBatch(const MetricGraph& graph, const Matrix& users,
                                 const Matrix& items, double epsilon = kDefaultEpsilon);

// Lower level entry points used by the trainer and the ranker. These never
// throw on non-finite values; they report them through the return flag.
class GraphEvaluator {
 public:
  // Keeps a pointer to `graph`, which must outlive the evaluator.
  explicit GraphEvaluator(const MetricGraph& graph);
  explicit GraphEvaluator(MetricGraph&&) = delete;

  const MetricGraph& graph() const { return *graph_; }

  // Returns false if any intermediate value is non-finite. The score is
  // written to *score either way.
  bool Forward(std::span<const double> u, std::span<const double> v, EvalWorkspace& ws,
               double* score) const;

  // Accumulates scale * dSM/du into grad_u and scale * dSM/dv into grad_v.
  // Reuses the activations in `ws`, so Forward(u, v, ws) must run first.
  // Returns false if a gradient entry is non-finite.
  bool Backward(std::span<const double> u, std::span<const double> v, EvalWorkspace& ws,
                double scale, std::span<double> grad_u, std::span<double> grad_v) const;

  // Scores one user against every row of `items`. Subtrees that do not
  // depend on the item are evaluated once. Returns false on non-finite.
  bool ScoreItems(std::span<const double> u, const Matrix& items, EvalWorkspace& ws,
                  std::span<double> scores) const;

 private:
  bool Run(std::span<const double> u, std::span<const double> v, EvalWorkspace& ws,
           bool item_dependent_only) const;

  const MetricGraph* graph_;
  std::vector<char> depends_on_item_;
};

}  // namespace metricgen

#endif  // METRICGEN_EVALUATOR_H_
