// Copyright 2026 The modsynth Authors. All Rights Reserved.
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

// Brute-force reference implementations of the exact Wilcoxon tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace modsynth::testing {

// Average ranks (1-based), computed pairwise in O(n^2).
inline std::vector<double> naive_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

struct BruteResult {
  double statistic;
  double p_value;
};

// Enumerates all 2^n sign flips of the non-zero differences.
inline BruteResult brute_signed_rank(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  }
  std::vector<double> mags;
  for (double v : d) mags.push_back(std::fabs(v));
  const auto ranks = naive_ranks(mags);
  double total = 0, plus = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total += ranks[i];
    if (d[i] > 0) plus += ranks[i];
  }
  const double observed = std::fabs(plus - total / 2.0);
  const std::uint64_t patterns = std::uint64_t{1} << d.size();
  std::uint64_t extreme = 0;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (mask >> i & 1) s += ranks[i];
    }
    if (std::fabs(s - total / 2.0) >= observed - 1e-9) ++extreme;
  }
  return {std::fmin(plus, total - plus), static_cast<double>(extreme) / patterns};
}

// Enumerates every assignment of m of the pooled observations to the first sample.
inline BruteResult brute_rank_sum(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pooled = x;
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = naive_ranks(pooled);
  const std::size_t m = x.size(), big_n = pooled.size();
  double rx = 0;
  for (std::size_t i = 0; i < m; ++i) rx += ranks[i];
  const double center = m * (big_n + 1) / 2.0;
  const double observed = std::fabs(rx - center);
  std::uint64_t extreme = 0, all = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << big_n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != m) continue;
    double s = 0;
    for (std::size_t i = 0; i < big_n; ++i) {
      if (mask >> i & 1) s += ranks[i];
    }
    ++all;
    if (std::fabs(s - center) >= observed - 1e-9) ++extreme;
  }
  return {rx - m * (m + 1) / 2.0, static_cast<double>(extreme) / all};
}

}  // namespace modsynth::testing
