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

#include "metricgen/metric_graph.h"

#include <algorithm>
#include <cmath>

#include "metricgen/errors.h"

namespace metricgen {

namespace {

struct SymbolInfo {
  std::string_view name;
  int arity;
  ValueKind output;
};

constexpr std::array<SymbolInfo, kNumSymbols> kInfo = {{
    {"add", 2, ValueKind::kVector},
    {"sub", 2, ValueKind::kVector},
    {"dot", 2, ValueKind::kScalar},
    {"cos", 2, ValueKind::kScalar},
    {"had", 2, ValueKind::kVector},
    {"l1d", 2, ValueKind::kScalar},
    {"l2d", 2, ValueKind::kScalar},
    {"proj", 2, ValueKind::kVector},
    {"l1n", 1, ValueKind::kScalar},
    {"l2n", 1, ValueKind::kScalar},
    {"norm", 1, ValueKind::kVector},
    {"smul", 1, ValueKind::kVector},
    {"neg", 1, ValueKind::kVector},
    {"sum", 1, ValueKind::kScalar},
    {"u", 0, ValueKind::kVector},
    {"v", 0, ValueKind::kVector},
    {"ones", 0, ValueKind::kVector},
}};

constexpr std::array<Symbol, 7> kScalarOps = {
    Symbol::kDot,     Symbol::kCos,    Symbol::kL1Distance, Symbol::kL2Distance,
    Symbol::kL1Norm,  Symbol::kL2Norm, Symbol::kSum};

constexpr std::array<Symbol, 7> kVectorOps = {
    Symbol::kAdd,       Symbol::kSub,   Symbol::kHadamard, Symbol::kProject,
    Symbol::kNormalize, Symbol::kScale, Symbol::kNegate};

const SymbolInfo& Info(Symbol s) { return kInfo[static_cast<size_t>(s)]; }

template <typename Container>
auto PickUniform(const Container& c, Rng& rng) {
  std::uniform_int_distribution<size_t> pick(0, std::size(c) - 1);
  return c[pick(rng)];
}

// Leaf sampling pool. Draws without replacement from {u, v, 1} and refills
// only after both u and v have come out.
class LeafPool {
 public:
  Symbol Draw(Rng& rng) {
    std::uniform_int_distribution<size_t> pick(0, pool_.size() - 1);
    const size_t i = pick(rng);
    const Symbol s = pool_[i];
    pool_.erase(pool_.begin() + static_cast<std::ptrdiff_t>(i));
    if (s == Symbol::kUser) drew_user_ = true;
    if (s == Symbol::kItem) drew_item_ = true;
    if (drew_user_ && drew_item_) {
      pool_.assign(kLeaves.begin(), kLeaves.end());
      drew_user_ = drew_item_ = false;
    }
    return s;
  }

 private:
  std::vector<Symbol> pool_{kLeaves.begin(), kLeaves.end()};
  bool drew_user_ = false;
  bool drew_item_ = false;
};

class Generator {
 public:
  Generator(const GenerationConfig& config, Rng& rng)
      : config_(config), rng_(rng) {}

  Expr Root() {
    const Symbol op = PickUniform(kScalarOps, rng_);
    return Operator(op, 0);
  }

 private:
  Expr Operator(Symbol op, int depth) {
    Expr e;
    e.symbol = op;
    if (op == Symbol::kScale) e.constant = PickUniform(config_.constant_pool, rng_);
    for (int k = 0; k < Info(op).arity; ++k) e.children.push_back(VectorSlot(depth + 1));
    return e;
  }

  Expr VectorSlot(int depth) {
    std::bernoulli_distribution early_leaf(config_.leaf_probability);
    if (depth >= config_.max_depth || early_leaf(rng_)) {
      return Expr::Leaf(leaves_.Draw(rng_));
    }
    return Operator(PickUniform(kVectorOps, rng_), depth);
  }

  const GenerationConfig& config_;
  Rng& rng_;
  LeafPool leaves_;
};

}  // namespace

int Arity(Symbol s) { return Info(s).arity; }
ValueKind OutputKind(Symbol s) { return Info(s).output; }
std::string_view SymbolName(Symbol s) { return Info(s).name; }

std::optional<Symbol> SymbolFromName(std::string_view name) {
  for (size_t i = 0; i < kInfo.size(); ++i) {
    if (kInfo[i].name == name) return static_cast<Symbol>(i);
  }
  return std::nullopt;
}

std::span<const Symbol> OperatorsWithOutput(ValueKind kind) {
  if (kind == ValueKind::kScalar) return kScalarOps;
  return kVectorOps;
}

Expr Expr::Unary(Symbol s, Expr a) {
  Expr e{s, 0.0, {}};
  e.children.push_back(std::move(a));
  return e;
}

Expr Expr::Binary(Symbol s, Expr a, Expr b) {
  Expr e{s, 0.0, {}};
  e.children.push_back(std::move(a));
  e.children.push_back(std::move(b));
  return e;
}

Expr Expr::Scale(double c, Expr a) {
  Expr e = Unary(Symbol::kScale, std::move(a));
  e.constant = c;
  return e;
}

int Expr::Depth() const {
  int d = 0;
  for (const Expr& c : children) d = std::max(d, 1 + c.Depth());
  return d;
}

int Expr::Size() const {
  int n = 1;
  for (const Expr& c : children) n += c.Size();
  return n;
}

MetricGraph::MetricGraph(const Expr& root, int max_depth) : max_depth_(max_depth) {
  nodes_.reserve(static_cast<size_t>(root.Size()));
  Flatten(root, -1, 0);
}

int MetricGraph::Flatten(const Expr& e, int parent, int depth) {
  if (e.children.size() > 2) {
    throw ValidationError("node '" + std::string(SymbolName(e.symbol)) +
                          "' has more than two children");
  }
  const int id = size();
  Node n;
  n.symbol = e.symbol;
  n.constant = e.symbol == Symbol::kScale ? e.constant : 0.0;
  n.depth = depth;
  n.parent = parent;
  n.num_children = static_cast<int>(e.children.size());
  nodes_.push_back(n);
  for (int k = 0; k < n.num_children; ++k) {
    const int child = Flatten(e.children[static_cast<size_t>(k)], id, depth + 1);
    nodes_[static_cast<size_t>(id)].children[static_cast<size_t>(k)] = child;
  }
  return id;
}

int MetricGraph::depth() const {
  int d = 0;
  for (const Node& n : nodes_) d = std::max(d, n.depth);
  return d;
}

Expr MetricGraph::SubExpr(int id) const {
  const Node& n = node(id);
  Expr e{n.symbol, n.constant, {}};
  for (int k = 0; k < n.num_children; ++k) e.children.push_back(SubExpr(n.children[static_cast<size_t>(k)]));
  return e;
}

ValidationReport Validate(const MetricGraph& graph) {
  auto fail = [](std::string invariant, int node, std::string message) {
    return ValidationReport{false, std::move(invariant), node, std::move(message)};
  };
  if (OutputKind(graph.node(0).symbol) != ValueKind::kScalar) {
    return fail("scalar-root", 0, "root '" + std::string(SymbolName(graph.node(0).symbol)) +
                                      "' produces a vector");
  }
  bool has_user = false;
  bool has_item = false;
  for (int id = 0; id < graph.size(); ++id) {
    const Node& n = graph.node(id);
    if (n.num_children != Arity(n.symbol)) {
      return fail("arity", id,
                  "'" + std::string(SymbolName(n.symbol)) + "' expects " +
                      std::to_string(Arity(n.symbol)) + " children, has " +
                      std::to_string(n.num_children));
    }
    for (int k = 0; k < n.num_children; ++k) {
      const int child = n.children[static_cast<size_t>(k)];
      if (OutputKind(graph.node(child).symbol) != ValueKind::kVector) {
        return fail("vector-input", child,
                    "scalar '" + std::string(SymbolName(graph.node(child).symbol)) +
                        "' feeds '" + std::string(SymbolName(n.symbol)) + "'");
      }
    }
    if (n.depth > graph.max_depth()) {
      return fail("max-depth", id,
                  "depth " + std::to_string(n.depth) + " exceeds limit " +
                      std::to_string(graph.max_depth()));
    }
    if (n.symbol == Symbol::kScale && !std::isfinite(n.constant)) {
      return fail("finite-constant", id, "smul constant is not finite");
    }
    has_user |= n.symbol == Symbol::kUser;
    has_item |= n.symbol == Symbol::kItem;
  }
  if (!has_user) return fail("leaf-coverage", 0, "no user embedding leaf 'u'");
  if (!has_item) return fail("leaf-coverage", 0, "no item embedding leaf 'v'");
  return {};
}

void GenerationConfig::Check() const {
  if (max_depth < 1 || max_depth > kMaxDepthLimit) {
    throw ConfigError("max_depth must be in [1, " + std::to_string(kMaxDepthLimit) +
                      "], got " + std::to_string(max_depth));
  }
  if (constant_pool.empty()) throw ConfigError("constant_pool is empty");
  for (double c : constant_pool) {
    if (c == 0.0 || !std::isfinite(c)) {
      throw ConfigError("constant_pool entries must be finite and non-zero");
    }
  }
  if (!(leaf_probability >= 0.0 && leaf_probability < 1.0)) {
    throw ConfigError("leaf_probability must be in [0, 1)");
  }
}

MetricGraph RandomGenerate(const GenerationConfig& config, Rng& rng) {
  config.Check();
  // Rejection on leaf coverage: a tree with fewer than three leaves may
  // miss u or v even under the pool rule.
  for (;;) {
    Generator gen(config, rng);
    MetricGraph g(gen.Root(), config.max_depth);
    if (Validate(g)) return g;
  }
}

MetricGraph InnerProductMetric() {
  return MetricGraph(Expr::Binary(Symbol::kDot, Expr::Leaf(Symbol::kUser), Expr::Leaf(Symbol::kItem)));
}

bool IsCommutative(Symbol s) {
  switch (s) {
    case Symbol::kAdd:
    case Symbol::kDot:
    case Symbol::kCos:
    case Symbol::kHadamard:
    case Symbol::kL1Distance:
    case Symbol::kL2Distance:
      return true;
    default:
      return false;
  }
}

Expr CanonicalForm(Expr expr) {
  for (Expr& c : expr.children) c = CanonicalForm(std::move(c));
  if (IsCommutative(expr.symbol) && PrintExpr(expr.children[1]) < PrintExpr(expr.children[0])) {
    std::swap(expr.children[0], expr.children[1]);
  }
  return expr;
}

MetricGraph CanonicalForm(const MetricGraph& graph) {
  return MetricGraph(CanonicalForm(graph.ToExpr()), graph.max_depth());
}

Expr RandomLeaf(Rng& rng) { return Expr::Leaf(PickUniform(kLeaves, rng)); }

}  // namespace metricgen
