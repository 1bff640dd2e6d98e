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

#include "metricgen/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "metricgen/errors.h"
#include "metricgen/evaluator.h"

namespace metricgen {

namespace {

void SortUnique(std::vector<int>& items) {
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
}

// Removes from `items` everything present in the sorted list `other`.
void RemoveAll(std::vector<int>& items, const std::vector<int>& other) {
  std::vector<int> kept;
  std::set_difference(items.begin(), items.end(), other.begin(), other.end(),
                      std::back_inserter(kept));
  items = std::move(kept);
}

void Resize(InteractionDataset::Lists& lists, int num_users) {
  lists.resize(static_cast<size_t>(num_users));
}

}  // namespace

const char* SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
  }
  return "?";
}

InteractionDataset::InteractionDataset(int num_users, int num_items, Lists train, Lists valid,
                                       Lists test)
    : num_users_(num_users),
      num_items_(num_items),
      train_(std::move(train)),
      valid_(std::move(valid)),
      test_(std::move(test)) {
  if (num_users < 0 || num_items < 0) throw FormatError(0, "negative user or item count");
  for (Lists* lists : {&train_, &valid_, &test_}) {
    if (lists->size() > static_cast<size_t>(num_users)) {
      throw FormatError(0, "split has rows for more than " + std::to_string(num_users) + " users");
    }
    Resize(*lists, num_users);
    for (auto& row : *lists) {
      for (int i : row) {
        if (i < 0 || i >= num_items) {
          throw FormatError(0, "item id " + std::to_string(i) + " out of range [0, " +
                                   std::to_string(num_items) + ")");
        }
      }
      SortUnique(row);
    }
  }
  all_.resize(static_cast<size_t>(num_users));
  for (size_t u = 0; u < static_cast<size_t>(num_users); ++u) {
    RemoveAll(valid_[u], train_[u]);
    RemoveAll(test_[u], train_[u]);
    RemoveAll(test_[u], valid_[u]);
    if (train_[u].empty()) {
      valid_[u].clear();
      test_[u].clear();
    }
    std::vector<int>& all = all_[u];
    all = train_[u];
    all.insert(all.end(), valid_[u].begin(), valid_[u].end());
    all.insert(all.end(), test_[u].begin(), test_[u].end());
    std::sort(all.begin(), all.end());
    for (int i : train_[u]) train_edges_.emplace_back(static_cast<int>(u), i);
  }
}

const InteractionDataset::Lists& InteractionDataset::split(Split s) const {
  switch (s) {
    case Split::kTrain:
      return train_;
    case Split::kValid:
      return valid_;
    case Split::kTest:
      return test_;
  }
  return train_;
}

std::size_t InteractionDataset::num_interactions(Split s) const {
  std::size_t n = 0;
  for (const auto& row : split(s)) n += row.size();
  return n;
}

bool InteractionDataset::IsPositive(int user, int item) const {
  const auto& all = all_[static_cast<size_t>(user)];
  return std::binary_search(all.begin(), all.end(), item);
}

InteractionDataset::Lists ReadAdjacencyFile(const std::filesystem::path& path, int* max_item) {
  std::ifstream in(path);
  if (!in) throw FormatError(0, "cannot open " + path.string());
  InteractionDataset::Lists lists;
  *max_item = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string token;
    int user = -1;
    std::vector<int> items;
    while (tokens >> token) {
      int value = 0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc() || ptr != token.data() + token.size() || value < 0) {
        throw FormatError(line_no, path.string() + ":" + std::to_string(line_no) +
                                       ": invalid id '" + token + "'");
      }
      if (user < 0) {
        user = value;
      } else {
        items.push_back(value);
        *max_item = std::max(*max_item, value);
      }
    }
    if (user < 0) continue;  // blank line
    if (lists.size() <= static_cast<size_t>(user)) lists.resize(static_cast<size_t>(user) + 1);
    auto& row = lists[static_cast<size_t>(user)];
    row.insert(row.end(), items.begin(), items.end());
  }
  return lists;
}

InteractionDataset LoadAdjacency(const std::filesystem::path& train_path,
                                 const std::filesystem::path& test_path,
                                 const std::filesystem::path& valid_path) {
  int max_item = -1;
  InteractionDataset::Lists train = ReadAdjacencyFile(train_path, &max_item);
  InteractionDataset::Lists valid;
  InteractionDataset::Lists test;
  if (!test_path.empty()) {
    int m = -1;
    test = ReadAdjacencyFile(test_path, &m);
    max_item = std::max(max_item, m);
  }
  if (!valid_path.empty()) {
    int m = -1;
    valid = ReadAdjacencyFile(valid_path, &m);
    max_item = std::max(max_item, m);
  }
  const size_t users = std::max({train.size(), valid.size(), test.size()});
  InteractionDataset ds(static_cast<int>(users), max_item + 1, std::move(train), std::move(valid),
                        std::move(test));
  if (ds.num_interactions(Split::kTrain) == 0) {
    throw EmptyDatasetError("no train interactions in " + train_path.string());
  }
  return ds;
}

void WriteAdjacency(const InteractionDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
    std::ofstream out(dir / (std::string(SplitName(s)) + ".txt"));
    if (!out) throw FormatError(0, "cannot write into " + dir.string());
    for (int u = 0; u < ds.num_users(); ++u) {
      auto items = ds.items(s, u);
      if (items.empty() && s != Split::kTrain) continue;
      out << u;
      for (int i : items) out << ' ' << i;
      out << '\n';
    }
  }
}

InteractionDataset SplitValidation(const InteractionDataset& ds, double fraction,
                                   std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must be in (0, 1)");
  InteractionDataset::Lists train = ds.split(Split::kTrain);
  InteractionDataset::Lists valid = ds.split(Split::kValid);
  for (size_t u = 0; u < train.size(); ++u) {
    std::vector<int>& row = train[u];
    const size_t n = row.size();
    if (n == 0) continue;
    const size_t want = static_cast<size_t>(std::ceil(fraction * static_cast<double>(n)));
    const size_t move = std::min(want, n - 1);
    if (move == 0) continue;
    Rng rng = MakeRng(seed, {u});
    std::shuffle(row.begin(), row.end(), rng);
    valid[u].insert(valid[u].end(), row.end() - static_cast<std::ptrdiff_t>(move), row.end());
    row.resize(n - move);
  }
  return InteractionDataset(ds.num_users(), ds.num_items(), std::move(train), std::move(valid),
                            ds.split(Split::kTest));
}

TripletSampler::TripletSampler(const InteractionDataset& ds, std::uint64_t seed)
    : ds_(&ds), rng_(seed) {
  if (ds.train_edges().empty()) throw EmptyDatasetError("train split is empty");
}

Triplet TripletSampler::Sample() {
  const auto& edges = ds_->train_edges();
  std::uniform_int_distribution<size_t> pick_edge(0, edges.size() - 1);
  std::uniform_int_distribution<int> pick_item(0, ds_->num_items() - 1);
  const auto [user, item] = edges[pick_edge(rng_)];
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    const int j = pick_item(rng_);
    if (!ds_->IsPositive(user, j)) return Triplet{user, item, j};
  }
  throw SamplerStall("no negative item found for user " + std::to_string(user) + " after " +
                     std::to_string(kMaxRejections) + " draws");
}

std::vector<Triplet> TripletSampler::Sample(std::size_t batch_size) {
  std::vector<Triplet> out;
  out.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) out.push_back(Sample());
  return out;
}

void SyntheticSpec::Check() const {
  if (num_users < 1 || num_items < 2) throw ConfigError("synthetic data needs >= 1 user and >= 2 items");
  if (dim < 1) throw ConfigError("planted dimension must be >= 1");
  if (interactions_per_user < 1 || interactions_per_user >= num_items) {
    throw ConfigError("interactions per user m must satisfy 1 <= m < n_items (m=" +
                      std::to_string(interactions_per_user) +
                      ", n_items=" + std::to_string(num_items) + ")");
  }
  if (!(noise >= 0.0 && noise < 1.0)) throw ConfigError("noise must be in [0, 1)");
}

SyntheticData GenerateSynthetic(const SyntheticSpec& spec) {
  spec.Check();
  MetricGraph metric = ParseExpr(spec.metric);
  const size_t nu = static_cast<size_t>(spec.num_users);
  const size_t ni = static_cast<size_t>(spec.num_items);
  const size_t d = static_cast<size_t>(spec.dim);
  Matrix users(nu, d);
  Matrix items(ni, d);
  {
    Rng rng = MakeRng(spec.seed, {0});
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& x : users.data()) x = normal(rng);
    for (double& x : items.data()) x = normal(rng);
  }

  const size_t m = static_cast<size_t>(spec.interactions_per_user);
  const size_t held = m >= 3 ? std::max<size_t>(1, static_cast<size_t>(std::lround(0.1 * static_cast<double>(m)))) : 0;

  InteractionDataset::Lists train(nu), valid(nu), test(nu);
  GraphEvaluator eval(metric);
  EvalWorkspace ws(spec.dim);
  std::vector<double> scores(ni);
  std::vector<int> order(ni);
  for (size_t u = 0; u < nu; ++u) {
    if (!eval.ScoreItems(users.row(u), items, ws, scores)) {
      throw NonFiniteError("planted metric produced non-finite scores");
    }
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                      [&](int a, int b) {
                        if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)]) {
                          return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
                        }
                        return a < b;
                      });
    std::vector<int> positives(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));

    Rng rng = MakeRng(spec.seed, {1, u});
    std::bernoulli_distribution flip(spec.noise);
    std::uniform_int_distribution<int> any_item(0, spec.num_items - 1);
    for (size_t k = 0; k < m; ++k) {
      if (!flip(rng)) continue;
      int replacement = any_item(rng);
      while (std::find(positives.begin(), positives.end(), replacement) != positives.end()) {
        replacement = any_item(rng);
      }
      positives[k] = replacement;
    }
    std::shuffle(positives.begin(), positives.end(), rng);
    test[u].assign(positives.begin(), positives.begin() + static_cast<std::ptrdiff_t>(held));
    valid[u].assign(positives.begin() + static_cast<std::ptrdiff_t>(held),
                    positives.begin() + static_cast<std::ptrdiff_t>(2 * held));
    train[u].assign(positives.begin() + static_cast<std::ptrdiff_t>(2 * held), positives.end());
  }
  InteractionDataset ds(spec.num_users, spec.num_items, std::move(train), std::move(valid),
                        std::move(test));
  return SyntheticData{std::move(ds), std::move(users), std::move(items), std::move(metric)};
}

void WriteSyntheticSidecar(const SyntheticSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "planted.cfg");
  if (!out) throw FormatError(0, "cannot write into " + dir.string());
  out << "# planted-metric synthetic dataset\n";
  out << "metric = " << spec.metric << '\n';
  out << "seed = " << spec.seed << '\n';
  out << "users = " << spec.num_users << '\n';
  out << "items = " << spec.num_items << '\n';
  out << "dim = " << spec.dim << '\n';
  out << "m = " << spec.interactions_per_user << '\n';
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), spec.noise);
  out << "noise = " << std::string(buf, end) << '\n';
}

}  // namespace metricgen
