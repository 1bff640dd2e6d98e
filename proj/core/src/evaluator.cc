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

#include "metricgen/evaluator.h"

#include <cmath>
#include <string>

#include "metricgen/errors.h"

namespace metricgen {

namespace {

double Dot(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

double Sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void CheckDims(std::span<const double> u, std::span<const double> v, const EvalWorkspace& ws) {
  if (u.size() != v.size() || static_cast<int>(u.size()) != ws.dim()) {
    throw DimensionMismatch("embedding dimensions differ: |u|=" + std::to_string(u.size()) +
                            " |v|=" + std::to_string(v.size()) +
                            " workspace=" + std::to_string(ws.dim()));
  }
}

}  // namespace

EvalWorkspace::EvalWorkspace(int dim, double epsilon)
    : dim_(dim), epsilon_(epsilon), ones_(static_cast<size_t>(dim), 1.0) {
  if (dim < 1) throw DimensionMismatch("workspace dimension must be >= 1");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

void EvalWorkspace::Reserve(int num_nodes) {
  const size_t n = static_cast<size_t>(num_nodes);
  if (scalars_.size() >= n) return;
  vectors_.resize(n * static_cast<size_t>(dim_));
  adj_vectors_.resize(n * static_cast<size_t>(dim_));
  scalars_.resize(n);
  adj_scalars_.resize(n);
  aux_.resize(2 * n);
  src_.resize(n);
}

GraphEvaluator::GraphEvaluator(const MetricGraph& graph)
    : graph_(&graph), depends_on_item_(static_cast<size_t>(graph.size()), 0) {
  for (int id = graph.size() - 1; id >= 0; --id) {
    const Node& n = graph.node(id);
    char dep = n.symbol == Symbol::kItem;
    for (int k = 0; k < n.num_children; ++k) dep |= depends_on_item_[static_cast<size_t>(n.children[k])];
    depends_on_item_[static_cast<size_t>(id)] = dep;
  }
}

bool GraphEvaluator::Run(std::span<const double> u, std::span<const double> v,
                         EvalWorkspace& ws, bool item_dependent_only) const {
  const MetricGraph& g = *graph_;
  const int d = ws.dim_;
  const double eps = ws.epsilon_;
  ws.Reserve(g.size());
  double* vecs = ws.vectors_.data();
  double* scal = ws.scalars_.data();
  double* aux = ws.aux_.data();
  const double** src = ws.src_.data();

  double poison = 0.0;  // accumulates x - x, NaN iff some x is not finite
  for (int id = g.size() - 1; id >= 0; --id) {
    if (item_dependent_only && !depends_on_item_[static_cast<size_t>(id)]) continue;
    const Node& n = g.node(id);
    double* out = vecs + static_cast<size_t>(id) * d;
    const double* a = n.num_children > 0 ? src[n.children[0]] : nullptr;
    const double* b = n.num_children > 1 ? src[n.children[1]] : nullptr;
    switch (n.symbol) {
      case Symbol::kUser:
        src[id] = u.data();
        continue;
      case Symbol::kItem:
        src[id] = v.data();
        continue;
      case Symbol::kOnes:
        src[id] = ws.ones_.data();
        continue;
      case Symbol::kAdd:
        for (int k = 0; k < d; ++k) out[k] = a[k] + b[k];
        break;
      case Symbol::kSub:
        for (int k = 0; k < d; ++k) out[k] = a[k] - b[k];
        break;
      case Symbol::kHadamard:
        for (int k = 0; k < d; ++k) out[k] = a[k] * b[k];
        break;
      case Symbol::kProject: {
        const double ra = std::sqrt(Dot(a, a, d));
        const double na = std::max(ra, eps);
        const double p = Dot(a, b, d);
        aux[2 * id] = ra;
        aux[2 * id + 1] = p;
        const double coef = p / na;
        for (int k = 0; k < d; ++k) out[k] = coef * a[k];
        break;
      }
      case Symbol::kNormalize: {
        const double ra = std::sqrt(Dot(a, a, d));
        aux[2 * id] = ra;
        const double inv = 1.0 / std::max(ra, eps);
        for (int k = 0; k < d; ++k) out[k] = a[k] * inv;
        break;
      }
      case Symbol::kScale:
        for (int k = 0; k < d; ++k) out[k] = n.constant * a[k];
        break;
      case Symbol::kNegate:
        for (int k = 0; k < d; ++k) out[k] = -a[k];
        break;
      case Symbol::kDot:
        scal[id] = Dot(a, b, d);
        poison += scal[id] - scal[id];
        continue;
      case Symbol::kCos: {
        const double ra = std::sqrt(Dot(a, a, d));
        const double rb = std::sqrt(Dot(b, b, d));
        aux[2 * id] = ra;
        aux[2 * id + 1] = rb;
        scal[id] = Dot(a, b, d) / (std::max(ra, eps) * std::max(rb, eps));
        poison += scal[id] - scal[id];
        continue;
      }
      case Symbol::kL1Distance: {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += std::abs(a[k] - b[k]);
        scal[id] = s;
        poison += s - s;
        continue;
      }
      case Symbol::kL2Distance: {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
        scal[id] = std::sqrt(s);
        poison += scal[id] - scal[id];
        continue;
      }
      case Symbol::kL1Norm: {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += std::abs(a[k]);
        scal[id] = s;
        poison += s - s;
        continue;
      }
      case Symbol::kL2Norm:
        scal[id] = std::sqrt(Dot(a, a, d));
        poison += scal[id] - scal[id];
        continue;
      case Symbol::kSum: {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += a[k];
        scal[id] = s;
        poison += s - s;
        continue;
      }
    }
    // Vector-valued operator.
    src[id] = out;
    for (int k = 0; k < d; ++k) poison += out[k] - out[k];
  }
  return poison == 0.0;
}

bool GraphEvaluator::Forward(std::span<const double> u, std::span<const double> v,
                             EvalWorkspace& ws, double* score) const {
  CheckDims(u, v, ws);
  if (OutputKind(graph_->node(0).symbol) != ValueKind::kScalar) {
    throw ValidationError("metric root must produce a scalar");
  }
  const bool finite = Run(u, v, ws, false);
  *score = ws.scalars_[0];
  return finite;
}

bool GraphEvaluator::ScoreItems(std::span<const double> u, const Matrix& items,
                                EvalWorkspace& ws, std::span<double> scores) const {
  if (static_cast<int>(items.cols()) != ws.dim() || static_cast<int>(u.size()) != ws.dim()) {
    throw DimensionMismatch("item matrix and user embedding dimensions differ");
  }
  if (OutputKind(graph_->node(0).symbol) != ValueKind::kScalar) {
    throw ValidationError("metric root must produce a scalar");
  }
  bool finite = true;
  for (size_t i = 0; i < items.rows(); ++i) {
    finite &= Run(u, items.row(i), ws, i > 0);
    scores[i] = ws.scalars_[0];
  }
  return finite;
}

bool GraphEvaluator::Backward(std::span<const double> /*u*/, std::span<const double> /*v*/,
                              EvalWorkspace& ws, double scale, std::span<double> grad_u,
                              std::span<double> grad_v) const {
  const MetricGraph& g = *graph_;
  const int d = ws.dim_;
  const double eps = ws.epsilon_;
  const size_t nd = static_cast<size_t>(g.size()) * static_cast<size_t>(d);
  std::fill(ws.adj_vectors_.begin(), ws.adj_vectors_.begin() + static_cast<std::ptrdiff_t>(nd), 0.0);
  std::fill(ws.adj_scalars_.begin(), ws.adj_scalars_.begin() + g.size(), 0.0);
  double* adjv = ws.adj_vectors_.data();
  double* adjs = ws.adj_scalars_.data();
  const double* aux = ws.aux_.data();
  const double* scal = ws.scalars_.data();
  const double* const* src = ws.src_.data();
  adjs[0] = scale;

  double poison = 0.0;
  // Parents precede children in pre-order, so a forward sweep sees every
  // node's complete adjoint before propagating it.
  for (int id = 0; id < g.size(); ++id) {
    const Node& n = g.node(id);
    const double* gv = adjv + static_cast<size_t>(id) * d;
    const double gs = adjs[id];
    const int ca = n.num_children > 0 ? n.children[0] : -1;
    const int cb = n.num_children > 1 ? n.children[1] : -1;
    const double* a = ca >= 0 ? src[ca] : nullptr;
    const double* b = cb >= 0 ? src[cb] : nullptr;
    double* ga = ca >= 0 ? adjv + static_cast<size_t>(ca) * d : nullptr;
    double* gb = cb >= 0 ? adjv + static_cast<size_t>(cb) * d : nullptr;
    switch (n.symbol) {
      case Symbol::kUser:
        for (int k = 0; k < d; ++k) {
          grad_u[k] += gv[k];
          poison += gv[k] - gv[k];
        }
        break;
      case Symbol::kItem:
        for (int k = 0; k < d; ++k) {
          grad_v[k] += gv[k];
          poison += gv[k] - gv[k];
        }
        break;
      case Symbol::kOnes:
        break;
      case Symbol::kAdd:
        for (int k = 0; k < d; ++k) {
          ga[k] += gv[k];
          gb[k] += gv[k];
        }
        break;
      case Symbol::kSub:
        for (int k = 0; k < d; ++k) {
          ga[k] += gv[k];
          gb[k] -= gv[k];
        }
        break;
      case Symbol::kHadamard:
        for (int k = 0; k < d; ++k) {
          ga[k] += gv[k] * b[k];
          gb[k] += gv[k] * a[k];
        }
        break;
      case Symbol::kProject: {
        // out = (a.b / na) a
        const double ra = aux[2 * id];
        const double p = aux[2 * id + 1];
        const double na = std::max(ra, eps);
        const double q = Dot(gv, a, d);
        const double radial = ra > eps ? p * q / (na * na * ra) : 0.0;
        for (int k = 0; k < d; ++k) {
          ga[k] += (q / na) * b[k] + (p / na) * gv[k] - radial * a[k];
          gb[k] += (q / na) * a[k];
        }
        break;
      }
      case Symbol::kNormalize: {
        const double ra = aux[2 * id];
        const double na = std::max(ra, eps);
        const double radial = ra > eps ? Dot(gv, a, d) / (na * na * ra) : 0.0;
        for (int k = 0; k < d; ++k) ga[k] += gv[k] / na - radial * a[k];
        break;
      }
      case Symbol::kScale:
        for (int k = 0; k < d; ++k) ga[k] += n.constant * gv[k];
        break;
      case Symbol::kNegate:
        for (int k = 0; k < d; ++k) ga[k] -= gv[k];
        break;
      case Symbol::kDot:
        for (int k = 0; k < d; ++k) {
          ga[k] += gs * b[k];
          gb[k] += gs * a[k];
        }
        break;
      case Symbol::kCos: {
        const double ra = aux[2 * id];
        const double rb = aux[2 * id + 1];
        const double na = std::max(ra, eps);
        const double nb = std::max(rb, eps);
        const double s = scal[id];
        const double ka = ra > eps ? s / (na * ra) : 0.0;
        const double kb = rb > eps ? s / (nb * rb) : 0.0;
        const double inv = 1.0 / (na * nb);
        for (int k = 0; k < d; ++k) {
          ga[k] += gs * (b[k] * inv - ka * a[k]);
          gb[k] += gs * (a[k] * inv - kb * b[k]);
        }
        break;
      }
      case Symbol::kL1Distance:
        for (int k = 0; k < d; ++k) {
          const double sg = gs * Sign(a[k] - b[k]);
          ga[k] += sg;
          gb[k] -= sg;
        }
        break;
      case Symbol::kL2Distance: {
        const double inv = gs / std::max(scal[id], eps);
        for (int k = 0; k < d; ++k) {
          const double t = inv * (a[k] - b[k]);
          ga[k] += t;
          gb[k] -= t;
        }
        break;
      }
      case Symbol::kL1Norm:
        for (int k = 0; k < d; ++k) ga[k] += gs * Sign(a[k]);
        break;
      case Symbol::kL2Norm: {
        const double inv = gs / std::max(scal[id], eps);
        for (int k = 0; k < d; ++k) ga[k] += inv * a[k];
        break;
      }
      case Symbol::kSum:
        for (int k = 0; k < d; ++k) ga[k] += gs;
        break;
    }
  }
  return poison == 0.0;
}

double Forward(const MetricGraph& graph, std::span<const double> u, std::span<const double> v,
               EvalWorkspace& ws) {
  GraphEvaluator eval(graph);
  double score = 0.0;
  if (!eval.Forward(u, v, ws, &score)) {
    throw NonFiniteError("non-finite value while evaluating " + PrintExpr(graph));
  }
  return score;
}

Gradients Backward(const MetricGraph& graph, std::span<const double> u,
                   std::span<const double> v, EvalWorkspace& ws) {
  CheckDims(u, v, ws);
  GraphEvaluator eval(graph);
  Gradients grads{std::vector<double>(u.size(), 0.0), std::vector<double>(v.size(), 0.0)};
  if (!eval.Backward(u, v, ws, 1.0, grads.user, grads.item)) {
    throw NonFiniteError("non-finite gradient while differentiating " + PrintExpr(graph));
  }
  return grads;
}

std::vector<double> ForwardBatch(const MetricGraph& graph, const Matrix& users,
                                 const Matrix& items, double epsilon) {
  if (users.rows() != items.rows()) {
    throw DimensionMismatch("batch row counts differ: " + std::to_string(users.rows()) +
                            " vs " + std::to_string(items.rows()));
  }
  std::vector<double> out(users.rows());
  if (users.rows() == 0) return out;
  EvalWorkspace ws(static_cast<int>(users.cols()), epsilon);
  GraphEvaluator eval(graph);
  for (size_t r = 0; r < users.rows(); ++r) {
    if (!eval.Forward(users.row(r), items.row(r), ws, &out[r])) {
      throw NonFiniteError("non-finite value while evaluating " + PrintExpr(graph));
    }
  }
  return out;
}

}  // namespace metricgen
