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

#include "metricgen/run_directory.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

namespace metricgen {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

json Number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string FormatFitness(const json& j) {
  return j.is_number() ? fmt::format("{:.6f}", j.get<double>()) : std::string("-inf");
}

json ReportJson(const EvalReport& r) {
  return {{"k", r.k}, {"users", r.users.size()}, {"recall", r.recall}, {"ndcg", r.ndcg}};
}

json ReadSummary(const fs::path& dir) {
  const fs::path path = dir / kSummaryFile;
  if (!fs::exists(path)) {
    std::string what = fmt::format("{} has no {}: partial run (search did not finish)",
                                   dir.string(), kSummaryFile);
    if (!fs::exists(dir / kConfigFile)) what = fmt::format("{} is not a run directory", dir.string());
    throw IncompleteRun(what);
  }
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IncompleteRun(fmt::format("{} is unreadable: {}", path.string(), e.what()));
  }
}

}  // namespace

void BeginRunDirectory(const fs::path& dir, const RunConfig& config) {
  fs::create_directories(dir);
  fs::remove(dir / kSummaryFile);
  WriteText(dir / kConfigFile, EchoRunConfig(config));
}

std::string BestFitnessText(const SearchResult& result) {
  return fmt::format(
      "expression={}\nfitness={}\nfitness_kind={}\nfull_fitness={}\n"
      "valid_recall={}\nvalid_ndcg={}\ntest_recall={}\ntest_ndcg={}\nk={}\n",
      PrintExpr(result.best.graph), result.best.fitness, FitnessKindName(result.best.fitness_kind),
      result.best_full_fitness, result.best_valid.recall, result.best_valid.ndcg,
      result.best_test.recall, result.best_test.ndcg, result.best_test.k);
}

void FinishRunDirectory(const fs::path& dir, const RunConfig& config, const SearchResult& result) {
  fs::create_directories(dir);
  WriteText(dir / kConfigFile, EchoRunConfig(config));

  std::string population =
      "generation\trank\tid\tparent\tmutation\tfitness_kind\tfitness\texpression\n";
  for (const GenerationLog& log : result.history) {
    for (size_t rank = 0; rank < log.population.size(); ++rank) {
      const CandidateRecord& r = log.population[rank];
      population += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", log.generation, rank, r.id,
                                r.parent, MutationKindName(r.mutation),
                                FitnessKindName(r.fitness_kind), r.fitness, PrintExpr(r.graph));
    }
  }
  WriteText(dir / kPopulationFile, population);
  WriteText(dir / kBestMetricFile, PrintExpr(result.best.graph) + "\n");
  WriteText(dir / kBestFitnessFile, BestFitnessText(result));

  const SearchStats& s = result.stats;
  WriteText(dir / kTimingFile,
            fmt::format("wall_seconds={}\ncandidates_evaluated={}\nfull_trainings={}\n"
                        "surrogate_predictions={}\nepochs_consumed={}\nmutation_noops={}\n"
                        "mec_replacements={}\n",
                        s.wall_seconds, s.candidates_evaluated, s.full_trainings,
                        s.surrogate_predictions, s.epochs_consumed, s.mutation_noops,
                        s.mec_replacements));
  if (result.surrogate) result.surrogate->Save(dir / kSurrogateFile);
  if (result.surrogate_data.size() > 0) result.surrogate_data.WriteLog(dir / kSurrogateLogFile);

  json history = json::array();
  for (const GenerationLog& log : result.history) {
    history.push_back({{"generation", log.generation}, {"best_fitness", Number(log.best_fitness)}});
  }
  json top = json::array();
  if (!result.history.empty()) {
    const auto& final_pop = result.history.back().population;
    for (size_t i = 0; i < std::min<size_t>(3, final_pop.size()); ++i) {
      top.push_back({{"expression", PrintExpr(final_pop[i].graph)},
                     {"fitness", Number(final_pop[i].fitness)},
                     {"fitness_kind", FitnessKindName(final_pop[i].fitness_kind)}});
    }
  }
  json summary = {
      {"method", result.method},
      {"strategy", config.strategy},
      {"seed", config.seed},
      {"population", config.evolution.population},
      {"generations", config.evolution.generations},
      {"best",
       {{"expression", PrintExpr(result.best.graph)},
        {"fitness", Number(result.best.fitness)},
        {"fitness_kind", FitnessKindName(result.best.fitness_kind)},
        {"full_fitness", Number(result.best_full_fitness)}}},
      {"valid", ReportJson(result.best_valid)},
      {"test", ReportJson(result.best_test)},
      {"history", history},
      {"top", top},
      {"stats",
       {{"candidates_evaluated", s.candidates_evaluated},
        {"full_trainings", s.full_trainings},
        {"surrogate_predictions", s.surrogate_predictions},
        {"epochs_consumed", s.epochs_consumed},
        {"mutation_noops", s.mutation_noops},
        {"mec_replacements", s.mec_replacements},
        {"wall_seconds", s.wall_seconds}}},
  };
  WriteText(dir / kSummaryFile, summary.dump(2) + "\n");
}

std::string RenderReport(const fs::path& dir) {
  const json s = ReadSummary(dir);
  std::string out = fmt::format("run {}\nmethod {}  strategy {}  seed {}\n\n", dir.string(),
                                s["method"].get<std::string>(), s["strategy"].get<std::string>(),
                                s["seed"].get<std::uint64_t>());
  out += "generation  best_fitness\n";
  for (const json& h : s["history"]) {
    out += fmt::format("{:>10}  {}\n", h["generation"].get<int>(), FormatFitness(h["best_fitness"]));
  }
  out += "\ntop metrics\n";
  int rank = 1;
  for (const json& t : s["top"]) {
    out += fmt::format("{}  {}  {}\n", rank++, FormatFitness(t["fitness"]),
                       t["expression"].get<std::string>());
  }
  const json& best = s["best"];
  const int k = s["test"]["k"].get<int>();
  out += fmt::format("\nbest {}\n", best["expression"].get<std::string>());
  out += fmt::format("  search fitness {} ({})\n", FormatFitness(best["fitness"]),
                     best["fitness_kind"].get<std::string>());
  out += fmt::format("  fully trained valid NDCG@{} {}  test Recall@{} {:.6f}  test NDCG@{} {:.6f}\n",
                     k, FormatFitness(best["full_fitness"]), k,
                     s["test"]["recall"].get<double>(), k, s["test"]["ndcg"].get<double>());
  const json& st = s["stats"];
  out += fmt::format(
      "\ncandidates evaluated {}\nfull trainings {}\nsurrogate predictions {}\n"
      "epochs consumed {}\nwall seconds {:.2f}\n",
      st["candidates_evaluated"].get<int>(), st["full_trainings"].get<int>(),
      st["surrogate_predictions"].get<int>(), st["epochs_consumed"].get<long long>(),
      st["wall_seconds"].get<double>());
  return out;
}

std::string RenderComparison(const fs::path& a, const fs::path& b) {
  const json sa = ReadSummary(a);
  const json sb = ReadSummary(b);
  auto label = [](const json& s) {
    return fmt::format("{}/{}", s["method"].get<std::string>(), s["strategy"].get<std::string>());
  };
  std::string out = fmt::format("{:<24}{:>18}{:>18}\n", "", label(sa), label(sb));
  auto row = [&](const char* name, const std::string& x, const std::string& y) {
    out += fmt::format("{:<24}{:>18}{:>18}\n", name, x, y);
  };
  auto stat = [](const json& s, const char* key) { return s["stats"][key].dump(); };
  row("candidates evaluated", stat(sa, "candidates_evaluated"), stat(sb, "candidates_evaluated"));
  row("full trainings", stat(sa, "full_trainings"), stat(sb, "full_trainings"));
  row("epochs consumed", stat(sa, "epochs_consumed"), stat(sb, "epochs_consumed"));
  const double wa = sa["stats"]["wall_seconds"].get<double>();
  const double wb = sb["stats"]["wall_seconds"].get<double>();
  row("wall seconds", fmt::format("{:.2f}", wa), fmt::format("{:.2f}", wb));
  row("speed-up", "1.00x", wb > 0 ? fmt::format("{:.2f}x", wa / wb) : std::string("n/a"));
  row("search fitness", FormatFitness(sa["best"]["fitness"]), FormatFitness(sb["best"]["fitness"]));
  row("full valid NDCG", FormatFitness(sa["best"]["full_fitness"]),
      FormatFitness(sb["best"]["full_fitness"]));
  row("test NDCG", fmt::format("{:.6f}", sa["test"]["ndcg"].get<double>()),
      fmt::format("{:.6f}", sb["test"]["ndcg"].get<double>()));
  out += fmt::format("\nbest a: {}\nbest b: {}\n", sa["best"]["expression"].get<std::string>(),
                     sb["best"]["expression"].get<std::string>());
  return out;
}

}  // namespace metricgen
