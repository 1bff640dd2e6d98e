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

// Typed expression trees over user/item embeddings. A metric graph is a
// tree of vector operators whose root produces a scalar similarity score
// and whose leaves are the user embedding (u), the item embedding (v) and
// the all-ones vector.

#ifndef METRICGEN_METRIC_GRAPH_H_
#define METRICGEN_METRIC_GRAPH_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metricgen/random.h"

namespace metricgen {

enum class ValueKind : std::uint8_t { kScalar, kVector };

enum class Symbol : std::uint8_t {
  // Inter-vector operators, arity 2.
  kAdd,
  kSub,
  kDot,
  kCos,
  kHadamard,
  kL1Distance,
  kL2Distance,
  kProject,
  // Intra-vector operators, arity 1.
  kL1Norm,
  kL2Norm,
  kNormalize,
  kScale,
  kNegate,
  kSum,
  // Leaves.
  kUser,
  kItem,
  kOnes,
};

inline constexpr int kNumSymbols = 17;

inline constexpr std::array<Symbol, 14> kOperators = {
    Symbol::kAdd,      Symbol::kSub,        Symbol::kDot,
    Symbol::kCos,      Symbol::kHadamard,   Symbol::kL1Distance,
    Symbol::kL2Distance, Symbol::kProject,  Symbol::kL1Norm,
    Symbol::kL2Norm,   Symbol::kNormalize,  Symbol::kScale,
    Symbol::kNegate,   Symbol::kSum};

inline constexpr std::array<Symbol, 3> kLeaves = {Symbol::kUser, Symbol::kItem,
                                                  Symbol::kOnes};

// 0 for leaves.
int Arity(Symbol s);
ValueKind OutputKind(Symbol s);
inline bool IsLeaf(Symbol s) { return s >= Symbol::kUser; }
inline bool IsOperator(Symbol s) { return !IsLeaf(s); }

// Name used by the expression grammar ("dot", "smul", "u", "ones", ...).
std::string_view SymbolName(Symbol s);
std::optional<Symbol> SymbolFromName(std::string_view name);

// Operators with the given output kind, in enum order.
std::span<const Symbol> OperatorsWithOutput(ValueKind kind);

// Editable tree form. Graphs are built from, and mutated through, Exprs.
struct Expr {
  Symbol symbol = Symbol::kUser;
  double constant = 0.0;  // only meaningful for kScale
  std::vector<Expr> children;

  static Expr Leaf(Symbol s) { return Expr{s, 0.0, {}}; }
  static Expr Unary(Symbol s, Expr a);
  static Expr Binary(Symbol s, Expr a, Expr b);
  static Expr Scale(double c, Expr a);

  int Depth() const;
  int Size() const;

  friend bool operator==(const Expr&, const Expr&) = default;
};

struct Node {
  Symbol symbol = Symbol::kUser;
  double constant = 0.0;
  int depth = 0;
  int parent = -1;
  int num_children = 0;
  std::array<int, 2> children = {-1, -1};

  friend bool operator==(const Node&, const Node&) = default;
};

inline constexpr int kMaxDepthLimit = 6;
inline constexpr int kDefaultMaxDepth = 3;

// Immutable pre-order array of nodes. Node 0 is the root and every child
// has a larger id than its parent. Construction only checks that the tree
// is representable (at most two children per node); the metric invariants
// are checked by Validate().
class MetricGraph {
 public:
  explicit MetricGraph(const Expr& root, int max_depth = kMaxDepthLimit);

  std::span<const Node> nodes() const { return nodes_; }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int max_depth() const { return max_depth_; }
  int depth() const;

  Expr ToExpr() const { return SubExpr(0); }
  Expr SubExpr(int id) const;

  // Node-for-node structural equality; the depth limit is not compared.
  friend bool operator==(const MetricGraph& a, const MetricGraph& b) {
    return a.nodes_ == b.nodes_;
  }

 private:
  int Flatten(const Expr& e, int parent, int depth);

  std::vector<Node> nodes_;
  int max_depth_;
};

// dot(u,v), the minimal valid metric.
MetricGraph InnerProductMetric();

// True for add, dot, cos, had, l1d and l2d.
bool IsCommutative(Symbol s);

// Orders the operands of every commutative operator by their printed form,
// bottom-up. The result computes exactly the same scores, and two graphs
// that differ only by operand order share one canonical form.
Expr CanonicalForm(Expr expr);
MetricGraph CanonicalForm(const MetricGraph& graph);

struct ValidationReport {
  bool ok = true;
  std::string invariant;  // short name of the first violated invariant
  int node = -1;          // offending node id
  std::string message;

  explicit operator bool() const { return ok; }
};

ValidationReport Validate(const MetricGraph& graph);

struct GenerationConfig {
  int max_depth = kDefaultMaxDepth;
  std::vector<double> constant_pool = {-1.0, 0.5, 2.0};
  std::uint64_t seed = 0;
  // Chance that a non-root slot above the depth limit becomes a leaf
  // instead of an operator. 0 grows full trees down to max_depth.
  double leaf_probability = 0.5;

  // Throws ConfigError.
  void Check() const;
};

// Draws a graph that satisfies every metric invariant. Leaves are drawn in
// pre-order from the pool {u, v, 1} without replacement; the pool is
// refilled once both u and v have been drawn.
MetricGraph RandomGenerate(const GenerationConfig& config, Rng& rng);

// Uniform leaf from {u, v, 1}.
Expr RandomLeaf(Rng& rng);

// Grammar: dot(u,v), smul(2,norm(u)), ... Shortest round-trip decimals for
// constants, no whitespace.
std::string PrintExpr(const MetricGraph& graph);
std::string PrintExpr(const Expr& expr);

// Parses without checking metric invariants. Throws ParseError.
Expr ParseExprTree(std::string_view text);

// Parses and validates. Throws ParseError or ValidationError.
MetricGraph ParseExpr(std::string_view text, int max_depth = kMaxDepthLimit);

}  // namespace metricgen

#endif  // METRICGEN_METRIC_GRAPH_H_
