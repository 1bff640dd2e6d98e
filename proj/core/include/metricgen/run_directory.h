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

#ifndef METRICGEN_RUN_DIRECTORY_H_
#define METRICGEN_RUN_DIRECTORY_H_

#include <filesystem>
#include <string>

#include "metricgen/errors.h"
#include "metricgen/evolution.h"
#include "metricgen/run_config.h"

namespace metricgen {

// A run directory without the summary written at the end of a search.
class IncompleteRun : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kConfigFile = "config.cfg";
inline constexpr const char* kPopulationFile = "population.tsv";
inline constexpr const char* kBestMetricFile = "best.sm";
inline constexpr const char* kBestFitnessFile = "best_fitness.txt";
inline constexpr const char* kTimingFile = "timing.txt";
inline constexpr const char* kSurrogateFile = "surrogate.bin";
inline constexpr const char* kSurrogateLogFile = "surrogate_log.tsv";
inline constexpr const char* kSummaryFile = "summary.json";

// Creates `dir` and writes the config echo. Call before the search starts.
void BeginRunDirectory(const std::filesystem::path& dir, const RunConfig& config);

// Writes every result file; summary.json goes last and marks completion.
void FinishRunDirectory(const std::filesystem::path& dir, const RunConfig& config,
                        const SearchResult& result);

// Contents of best_fitness.txt: only values that are a pure function of the
// configuration and seed.
std::string BestFitnessText(const SearchResult& result);

// Best-per-generation trace, top-3 metrics and speed accounting. Throws
// IncompleteRun when the summary is missing.
std::string RenderReport(const std::filesystem::path& dir);
std::string RenderComparison(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace metricgen

#endif  // METRICGEN_RUN_DIRECTORY_H_
