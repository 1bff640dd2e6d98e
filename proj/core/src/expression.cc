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

#include <cctype>
#include <charconv>
#include <string>
#include <system_error>

#include "metricgen/errors.h"
#include "metricgen/metric_graph.h"

namespace metricgen {

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected,
                       const std::string& message)
    : Error(message), offset_(offset), expected_(std::move(expected)) {}

namespace {

void AppendConstant(std::string& out, double c) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), c);
  out.append(buf, end);
}

void Print(const Expr& e, std::string& out) {
  out += SymbolName(e.symbol);
  if (e.children.empty() && IsLeaf(e.symbol)) return;
  out += '(';
  if (e.symbol == Symbol::kScale) {
    AppendConstant(out, e.constant);
    out += ',';
  }
  for (size_t k = 0; k < e.children.size(); ++k) {
    if (k > 0) out += ',';
    Print(e.children[k], out);
  }
  out += ')';
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr ParseAll() {
    Expr e = ParseNode();
    SkipSpace();
    if (pos_ != text_.size()) Fail({"end of input"});
    return e;
  }

 private:
  [[noreturn]] void Fail(std::vector<std::string> expected) {
    std::string msg = "parse error at offset " + std::to_string(pos_) + ": expected ";
    for (size_t i = 0; i < expected.size(); ++i) {
      if (i > 0) msg += " or ";
      msg += expected[i];
    }
    if (pos_ < text_.size()) {
      msg += ", found '";
      msg += text_[pos_];
      msg += "'";
    } else {
      msg += ", found end of input";
    }
    throw ParseError(pos_, std::move(expected), msg);
  }

  void SkipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void Expect(char c) {
    SkipSpace();
    if (pos_ >= text_.size() || text_[pos_] != c) Fail({std::string("'") + c + "'"});
    ++pos_;
  }

  std::string_view Identifier() {
    SkipSpace();
    const size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  double Number() {
    SkipSpace();
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    // from_chars rejects a leading '+'.
    if (first != last && *first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc()) Fail({"number"});
    pos_ = static_cast<size_t>(ptr - text_.data());
    return value;
  }

  Expr ParseNode() {
    const size_t start = pos_;
    std::string_view name = Identifier();
    if (name.empty()) Fail({"operator", "leaf"});
    std::optional<Symbol> symbol = SymbolFromName(name);
    if (!symbol) {
      pos_ = start;
      SkipSpace();
      Fail({"operator", "leaf"});
    }
    Expr e = Expr::Leaf(*symbol);
    if (IsLeaf(*symbol)) return e;
    Expect('(');
    if (*symbol == Symbol::kScale) {
      e.constant = Number();
      Expect(',');
    }
    for (int k = 0; k < Arity(*symbol); ++k) {
      if (k > 0) Expect(',');
      e.children.push_back(ParseNode());
    }
    Expect(')');
    return e;
  }

  std::string_view text_;
  size_t pos_ = 0;
};

}  // namespace

std::string PrintExpr(const Expr& expr) {
  std::string out;
  Print(expr, out);
  return out;
}

std::string PrintExpr(const MetricGraph& graph) { return PrintExpr(graph.ToExpr()); }

Expr ParseExprTree(std::string_view text) { return Parser(text).ParseAll(); }

MetricGraph ParseExpr(std::string_view text, int max_depth) {
  MetricGraph g(ParseExprTree(text), max_depth);
  ValidationReport report = Validate(g);
  if (!report) {
    throw ValidationError("invalid metric '" + std::string(text) + "': " + report.invariant +
                          " violated at node " + std::to_string(report.node) + " (" +
                          report.message + ")");
  }
  return g;
}

}  // namespace metricgen
