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

#ifndef METRICGEN_TOOLS_CLI_H_
#define METRICGEN_TOOLS_CLI_H_

#include <iosfwd>

namespace metricgen {

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitRuntime = 3 };

// Entry point of the metricgen command. Never throws.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace metricgen

#endif  // METRICGEN_TOOLS_CLI_H_
