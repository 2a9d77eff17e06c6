// Copyright 2026 The iterqpe authors
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

#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace iterqpe {

enum class Scheme { repetitive, adaptive };

inline const char* to_string(Scheme s) { return s == Scheme::repetitive ? "repetitive" : "adaptive"; }

/// Exact or closed-form distribution over the scheme statistic grid:
/// {j/m} for repetitive f0, {j/2^m} for adaptive a.
struct DistributionTable {
  std::vector<double> grid;
  std::vector<double> probabilities;

  double total() const { return std::accumulate(probabilities.begin(), probabilities.end(), 0.0); }
};

/// Empirical counts on the same grids.
struct OutcomeHistogram {
  Scheme scheme = Scheme::repetitive;
  std::vector<double> grid;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
};

} // namespace iterqpe
