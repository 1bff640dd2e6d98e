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

#ifndef METRICGEN_RANDOM_H_
#define METRICGEN_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace metricgen {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t MixBits(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed and a path of
// indices, e.g. (seed, generation, offspring index).
constexpr std::uint64_t DeriveSeed(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = MixBits(master);
  for (std::uint64_t p : path) h = MixBits(h ^ MixBits(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng MakeRng(std::uint64_t master,
                   std::initializer_list<std::uint64_t> path = {}) {
  return Rng(DeriveSeed(master, path));
}

}  // namespace metricgen

#endif  // METRICGEN_RANDOM_H_
