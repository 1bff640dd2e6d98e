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

#include "metricgen/surrogate.h"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>

#include "metricgen/errors.h"
#include "metricgen/random.h"

namespace metricgen {

namespace {

constexpr char kMagic[8] = {'M', 'G', 'S', 'U', 'R', 'R', '0', '1'};
constexpr char kEnsembleMagic[8] = {'M', 'G', 'S', 'U', 'R', 'E', '0', '1'};

std::string FormatDouble(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void WriteU64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t ReadU64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError(0, "truncated surrogate checkpoint");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

void WriteF64(std::ostream& out, double x) { WriteU64(out, std::bit_cast<std::uint64_t>(x)); }
double ReadF64(std::istream& in) { return std::bit_cast<double>(ReadU64(in)); }

}  // namespace

TokenVocabulary::TokenVocabulary(std::vector<double> constant_pool)
    : constants_(std::move(constant_pool)) {
  entries_.push_back({Symbol::kUser, 0.0});  // START placeholder
  entries_.push_back({Symbol::kUser, 0.0});  // END placeholder
  for (Symbol s : kOperators) {
    if (s == Symbol::kScale) {
      for (double c : constants_) entries_.push_back({s, c});
    } else {
      entries_.push_back({s, 0.0});
    }
  }
  for (Symbol s : kLeaves) entries_.push_back({s, 0.0});
}

int TokenVocabulary::Encode(Symbol symbol, double constant) const {
  for (size_t t = 2; t < entries_.size(); ++t) {
    if (entries_[t].symbol != symbol) continue;
    if (symbol != Symbol::kScale || entries_[t].constant == constant) return static_cast<int>(t);
  }
  throw UnknownToken("no token for " + std::string(SymbolName(symbol)) +
                     (symbol == Symbol::kScale ? " with constant " + FormatDouble(constant) : ""));
}

Symbol TokenVocabulary::SymbolOf(int token) const {
  if (token < 2 || token >= size()) throw UnknownToken("token " + std::to_string(token) + " is not a node");
  return entries_[static_cast<size_t>(token)].symbol;
}

double TokenVocabulary::ConstantOf(int token) const {
  if (token < 2 || token >= size()) throw UnknownToken("token " + std::to_string(token) + " is not a node");
  return entries_[static_cast<size_t>(token)].constant;
}

std::string TokenVocabulary::Name(int token) const {
  if (token == kStart) return "START";
  if (token == kEnd) return "END";
  const Symbol s = SymbolOf(token);
  std::string name(SymbolName(s));
  if (s == Symbol::kScale) name += ":" + FormatDouble(ConstantOf(token));
  return name;
}

std::vector<int> GraphToSequence(const MetricGraph& graph, const TokenVocabulary& vocab) {
  std::vector<int> seq;
  seq.reserve(static_cast<size_t>(graph.size()) + 2);
  seq.push_back(TokenVocabulary::kStart);
  // Node ids are already in pre-order.
  for (const Node& n : graph.nodes()) seq.push_back(vocab.Encode(n.symbol, n.constant));
  seq.push_back(TokenVocabulary::kEnd);
  return seq;
}

namespace {

Expr DecodeNode(std::span<const int> tokens, size_t& pos, const TokenVocabulary& vocab) {
  if (pos >= tokens.size()) throw UnknownToken("token sequence ends inside a node");
  const int t = tokens[pos++];
  const Symbol s = vocab.SymbolOf(t);
  Expr e = Expr::Leaf(s);
  e.constant = vocab.ConstantOf(t);
  for (int k = 0; k < Arity(s); ++k) e.children.push_back(DecodeNode(tokens, pos, vocab));
  return e;
}

}  // namespace

MetricGraph SequenceToGraph(std::span<const int> tokens, const TokenVocabulary& vocab,
                            int max_depth) {
  if (tokens.size() < 3 || tokens.front() != TokenVocabulary::kStart ||
      tokens.back() != TokenVocabulary::kEnd) {
    throw UnknownToken("sequence must be wrapped in START/END");
  }
  size_t pos = 1;
  Expr root = DecodeNode(tokens.first(tokens.size() - 1), pos, vocab);
  if (pos != tokens.size() - 1) throw UnknownToken("trailing tokens after the root node");
  return MetricGraph(root, max_depth);
}

void SurrogateDataset::Add(const MetricGraph& graph, double fitness, const TokenVocabulary& vocab) {
  if (!std::isfinite(fitness)) return;
  sequences.push_back(GraphToSequence(CanonicalForm(graph), vocab));
  targets.push_back(fitness);
  expressions.push_back(PrintExpr(graph));
}

void SurrogateDataset::WriteLog(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError(0, "cannot write " + path.string());
  for (size_t z = 0; z < size(); ++z) out << expressions[z] << '\t' << FormatDouble(targets[z]) << '\n';
}

void SurrogateConfig::Check() const {
  if (embed_dim < 1 || hidden < 1) throw ConfigError("surrogate sizes must be >= 1");
  if (epochs < 0) throw ConfigError("surrogate epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("surrogate learning rate must be positive");
  if (warmup < 2) throw ConfigError("surrogate warmup must be >= 2");
  if (ensemble < 1) throw ConfigError("surrogate ensemble must be >= 1");
}

// Offsets of each parameter block inside params_.
struct SurrogateModel::Layout {
  size_t vocab, e, h;
  size_t emb, wz, wr, wn, uz, ur, un, bz, br, bn, bnh, head_w, head_b, total;

  Layout(size_t v, size_t e_, size_t h_) : vocab(v), e(e_), h(h_) {
    size_t off = 0;
    auto take = [&off](size_t n) {
      const size_t at = off;
      off += n;
      return at;
    };
    emb = take(v * e);
    wz = take(h * e);
    wr = take(h * e);
    wn = take(h * e);
    uz = take(h * h);
    ur = take(h * h);
    un = take(h * h);
    bz = take(h);
    br = take(h);
    bn = take(h);
    bnh = take(h);
    head_w = take(h);
    head_b = take(1);
    total = off;
  }
};

SurrogateModel::SurrogateModel(TokenVocabulary vocab, int embed_dim, int hidden,
                               std::uint64_t seed)
    : vocab_(std::move(vocab)), embed_dim_(embed_dim), hidden_(hidden) {
  if (embed_dim < 1 || hidden < 1) throw ConfigError("surrogate sizes must be >= 1");
  const Layout L(static_cast<size_t>(vocab_.size()), static_cast<size_t>(embed_dim),
                 static_cast<size_t>(hidden));
  params_.assign(L.total, 0.0);
  Rng rng = MakeRng(seed, {0x5e9});
  std::normal_distribution<double> emb_init(0.0, 0.5);
  for (size_t k = L.emb; k < L.wz; ++k) params_[k] = emb_init(rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> gru_init(-bound, bound);
  for (size_t k = L.wz; k < L.bz; ++k) params_[k] = gru_init(rng);
  // Biases and the output head start at zero.
}

void SurrogateModel::SetTargetStats(double mean, double scale) {
  target_mean_ = mean;
  target_scale_ = scale;
}

double SurrogateModel::Net(std::span<const int> tokens) const {
  std::vector<double> grad;
  return NetAndGradient(tokens, 0.0, grad);
}

double SurrogateModel::NetAndGradient(std::span<const int> tokens, double dloss_dout,
                                      std::span<double> grad) const {
  const Layout L(static_cast<size_t>(vocab_.size()), static_cast<size_t>(embed_dim_),
                 static_cast<size_t>(hidden_));
  const size_t e = L.e;
  const size_t h = L.h;
  const size_t T = tokens.size();
  const double* P = params_.data();
  for (int t : tokens) {
    if (t < 0 || t >= vocab_.size()) throw UnknownToken("token id " + std::to_string(t) + " out of range");
  }

  // Forward, keeping every step's gates for backpropagation through time.
  std::vector<double> hs((T + 1) * h, 0.0), zs(T * h), rs(T * h), ns(T * h), nh(T * h);
  std::vector<double> ax(h);
  for (size_t t = 0; t < T; ++t) {
    const double* x = P + L.emb + static_cast<size_t>(tokens[t]) * e;
    const double* hp = hs.data() + t * h;
    for (size_t i = 0; i < h; ++i) {
      double az = P[L.bz + i], ar = P[L.br + i], an = P[L.bn + i], ah = P[L.bnh + i];
      for (size_t k = 0; k < e; ++k) {
        az += P[L.wz + i * e + k] * x[k];
        ar += P[L.wr + i * e + k] * x[k];
        an += P[L.wn + i * e + k] * x[k];
      }
      for (size_t k = 0; k < h; ++k) {
        az += P[L.uz + i * h + k] * hp[k];
        ar += P[L.ur + i * h + k] * hp[k];
        ah += P[L.un + i * h + k] * hp[k];
      }
      zs[t * h + i] = Sigmoid(az);
      rs[t * h + i] = Sigmoid(ar);
      nh[t * h + i] = ah;
      ax[i] = an;
    }
    for (size_t i = 0; i < h; ++i) {
      const double n = std::tanh(ax[i] + rs[t * h + i] * nh[t * h + i]);
      ns[t * h + i] = n;
      const double z = zs[t * h + i];
      hs[(t + 1) * h + i] = (1.0 - z) * n + z * hp[i];
    }
  }
  const double* hT = hs.data() + T * h;
  double out = P[L.head_b];
  for (size_t i = 0; i < h; ++i) out += P[L.head_w + i] * hT[i];
  if (grad.empty()) return out;

  double* G = grad.data();
  G[L.head_b] += dloss_dout;
  std::vector<double> dh(h), dh_prev(h), da_z(h), da_r(h), da_n(h), dnh(h);
  for (size_t i = 0; i < h; ++i) {
    G[L.head_w + i] += dloss_dout * hT[i];
    dh[i] = dloss_dout * P[L.head_w + i];
  }
  for (size_t t = T; t-- > 0;) {
    const double* x = P + L.emb + static_cast<size_t>(tokens[t]) * e;
    double* gx = G + L.emb + static_cast<size_t>(tokens[t]) * e;
    const double* hp = hs.data() + t * h;
    for (size_t i = 0; i < h; ++i) {
      const double z = zs[t * h + i], r = rs[t * h + i], n = ns[t * h + i];
      const double dn = dh[i] * (1.0 - z);
      const double dz = dh[i] * (hp[i] - n);
      dh_prev[i] = dh[i] * z;
      da_n[i] = dn * (1.0 - n * n);
      dnh[i] = da_n[i] * r;
      da_r[i] = da_n[i] * nh[t * h + i] * r * (1.0 - r);
      da_z[i] = dz * z * (1.0 - z);
    }
    for (size_t i = 0; i < h; ++i) {
      G[L.bz + i] += da_z[i];
      G[L.br + i] += da_r[i];
      G[L.bn + i] += da_n[i];
      G[L.bnh + i] += dnh[i];
      for (size_t k = 0; k < e; ++k) {
        G[L.wz + i * e + k] += da_z[i] * x[k];
        G[L.wr + i * e + k] += da_r[i] * x[k];
        G[L.wn + i * e + k] += da_n[i] * x[k];
        gx[k] += P[L.wz + i * e + k] * da_z[i] + P[L.wr + i * e + k] * da_r[i] +
                 P[L.wn + i * e + k] * da_n[i];
      }
      for (size_t k = 0; k < h; ++k) {
        G[L.uz + i * h + k] += da_z[i] * hp[k];
        G[L.ur + i * h + k] += da_r[i] * hp[k];
        G[L.un + i * h + k] += dnh[i] * hp[k];
        dh_prev[k] += P[L.uz + i * h + k] * da_z[i] + P[L.ur + i * h + k] * da_r[i] +
                      P[L.un + i * h + k] * dnh[i];
      }
    }
    dh.swap(dh_prev);
  }
  return out;
}

double SurrogateModel::Predict(std::span<const int> tokens) const {
  return target_mean_ + target_scale_ * Net(tokens);
}

double SurrogateModel::Predict(const MetricGraph& graph) const {
  return Predict(GraphToSequence(CanonicalForm(graph), vocab_));
}

double SurrogateModel::Mse(const SurrogateDataset& data) const {
  if (data.size() == 0) return 0.0;
  double s = 0.0;
  for (size_t z = 0; z < data.size(); ++z) {
    const double r = Predict(data.sequences[z]) - data.targets[z];
    s += r * r;
  }
  return s / static_cast<double>(data.size());
}

double SurrogateModel::StandardizedLossAndGradient(const SurrogateDataset& data,
                                                   std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  const double inv_z = 1.0 / static_cast<double>(data.size());
  double loss = 0.0;
  for (size_t z = 0; z < data.size(); ++z) {
    const double target = (data.targets[z] - target_mean_) / target_scale_;
    const double out = Net(data.sequences[z]);
    const double r = out - target;
    loss += r * r * inv_z;
    NetAndGradient(data.sequences[z], 2.0 * r * inv_z, grad);
  }
  return loss;
}

std::vector<double> TrainSurrogate(SurrogateModel& model, const SurrogateDataset& data,
                                   int epochs, double learning_rate, OptimizerKind optimizer) {
  if (data.size() < 2) throw ConfigError("surrogate training needs at least two (metric, fitness) pairs");
  double mean = 0.0;
  for (double y : data.targets) mean += y;
  mean /= static_cast<double>(data.size());
  double var = 0.0;
  for (double y : data.targets) var += (y - mean) * (y - mean);
  const double sd = std::sqrt(var / static_cast<double>(data.size()));
  model.SetTargetStats(mean, sd > 1e-12 ? sd : 1.0);

  std::span<double> params = model.parameters();
  std::vector<double> grad(params.size()), m(params.size(), 0.0), v(params.size(), 0.0);
  const double scale2 = model.target_scale() * model.target_scale();
  std::vector<double> trace;
  trace.reserve(static_cast<size_t>(epochs));
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const double loss = model.StandardizedLossAndGradient(data, grad);
    trace.push_back(loss * scale2);
    if (optimizer == OptimizerKind::kSgd) {
      for (size_t k = 0; k < params.size(); ++k) params[k] -= learning_rate * grad[k];
      continue;
    }
    const double c1 = 1.0 - std::pow(kBeta1, epoch);
    const double c2 = 1.0 - std::pow(kBeta2, epoch);
    for (size_t k = 0; k < params.size(); ++k) {
      m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * grad[k];
      v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * grad[k] * grad[k];
      params[k] -= learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + kEps);
    }
  }
  return trace;
}

void SurrogateModel::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(0, "cannot write " + path.string());
  Save(out);
}

void SurrogateModel::Save(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  WriteU64(out, vocab_.constants().size());
  for (double c : vocab_.constants()) WriteF64(out, c);
  WriteU64(out, static_cast<std::uint64_t>(vocab_.size()));
  for (int t = 0; t < vocab_.size(); ++t) {
    const std::string name = vocab_.Name(t);
    WriteU64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  WriteU64(out, static_cast<std::uint64_t>(embed_dim_));
  WriteU64(out, static_cast<std::uint64_t>(hidden_));
  WriteF64(out, target_mean_);
  WriteF64(out, target_scale_);
  WriteU64(out, params_.size());
  for (double p : params_) WriteF64(out, p);
}

SurrogateModel SurrogateModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(0, "cannot open " + path.string());
  return Load(in, path.string());
}

SurrogateModel SurrogateModel::Load(std::istream& in, const std::string& source) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw FormatError(0, source + " is not a surrogate checkpoint");
  }
  std::vector<double> constants(ReadU64(in));
  for (double& c : constants) c = ReadF64(in);
  TokenVocabulary vocab(constants);
  const std::uint64_t vocab_size = ReadU64(in);
  if (vocab_size != static_cast<std::uint64_t>(vocab.size())) {
    throw FormatError(0, "surrogate checkpoint vocabulary size mismatch");
  }
  for (int t = 0; t < vocab.size(); ++t) {
    std::string name(ReadU64(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    if (name != vocab.Name(t)) throw FormatError(0, "surrogate checkpoint token '" + name + "' mismatch");
  }
  const int e = static_cast<int>(ReadU64(in));
  const int h = static_cast<int>(ReadU64(in));
  SurrogateModel model(std::move(vocab), e, h, 0);
  const double mean = ReadF64(in);
  const double scale = ReadF64(in);
  model.SetTargetStats(mean, scale);
  if (ReadU64(in) != model.params_.size()) throw FormatError(0, "surrogate parameter count mismatch");
  for (double& p : model.params_) p = ReadF64(in);
  return model;
}

SurrogateEnsemble::SurrogateEnsemble(const TokenVocabulary& vocab, int embed_dim, int hidden,
                                     int members, std::uint64_t seed) {
  if (members < 1) throw ConfigError("surrogate ensemble needs at least one member");
  members_.reserve(static_cast<size_t>(members));
  for (int k = 0; k < members; ++k) {
    members_.emplace_back(vocab, embed_dim, hidden, DeriveSeed(seed, {static_cast<std::uint64_t>(k)}));
  }
}

double SurrogateEnsemble::Predict(std::span<const int> tokens) const {
  double sum = 0.0;
  for (const SurrogateModel& m : members_) sum += m.Predict(tokens);
  return sum / static_cast<double>(members_.size());
}

double SurrogateEnsemble::Predict(const MetricGraph& graph) const {
  return Predict(GraphToSequence(CanonicalForm(graph), members_.front().vocabulary()));
}

std::vector<double> SurrogateEnsemble::Fit(const SurrogateDataset& data, int epochs, double learning_rate,
                                           OptimizerKind optimizer) {
  std::vector<double> mean(static_cast<size_t>(epochs), 0.0);
  for (SurrogateModel& m : members_) {
    const std::vector<double> trace = TrainSurrogate(m, data, epochs, learning_rate, optimizer);
    for (size_t t = 0; t < trace.size(); ++t) mean[t] += trace[t] / static_cast<double>(members_.size());
  }
  return mean;
}

void SurrogateEnsemble::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(0, "cannot write " + path.string());
  out.write(kEnsembleMagic, sizeof(kEnsembleMagic));
  WriteU64(out, members_.size());
  for (const SurrogateModel& m : members_) m.Save(out);
}

SurrogateEnsemble SurrogateEnsemble::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(0, "cannot open " + path.string());
  char magic[sizeof(kEnsembleMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + sizeof(magic), kEnsembleMagic)) {
    throw FormatError(0, path.string() + " is not a surrogate ensemble checkpoint");
  }
  const std::uint64_t n = ReadU64(in);
  if (n == 0 || n > 1024) throw FormatError(0, "surrogate ensemble member count out of range");
  SurrogateEnsemble ensemble;
  for (std::uint64_t k = 0; k < n; ++k) ensemble.members_.push_back(SurrogateModel::Load(in, path.string()));
  return ensemble;
}

}  // namespace metricgen
