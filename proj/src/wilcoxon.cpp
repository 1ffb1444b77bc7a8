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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "modsynth/error.hpp"
#include "modsynth/evalmetrics.hpp"

namespace modsynth {
namespace {

// sum over tie groups of (t^3 - t)
double tie_term(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double term = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double t = static_cast<double>(j - i);
    term += t * t * t - t;
    i = j;
  }
  return term;
}

double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

}  // namespace

std::vector<long> doubled_average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<long> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && values[idx[j]] == values[idx[i]]) ++j;
    // positions i..j-1 hold 1-based ranks i+1..j; twice their mean is i+1+j
    const long doubled = static_cast<long>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = doubled;
    i = j;
  }
  return ranks;
}

nlohmann::json TestResult::to_json() const {
  return {{"statistic", statistic},
          {"p_value", p_value},
          {"exact", exact},
          {"n_used", n_used},
          {"n_zero_dropped", n_zero_dropped}};
}

TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    fail(ErrorCode::kShape, "signed-rank test needs paired samples of equal length");
  }
  if (x.size() < 5) {
    fail(ErrorCode::kArgument, "signed-rank test needs at least 5 pairs");
  }
  std::vector<double> diffs;
  TestResult r;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (!std::isfinite(d)) fail(ErrorCode::kArgument, "signed-rank test got non-finite data");
    if (d == 0.0) {
      ++r.n_zero_dropped;
    } else {
      diffs.push_back(d);
    }
  }
  if (diffs.empty()) {
    fail(ErrorCode::kDegenerate, "all paired differences are zero");
  }
  const int n = static_cast<int>(diffs.size());
  r.n_used = n;

  std::vector<double> mags(n);
  for (int i = 0; i < n; ++i) mags[i] = std::abs(diffs[i]);
  const std::vector<long> ranks = doubled_average_ranks(mags);
  long total = 0;
  long plus = 0;
  for (int i = 0; i < n; ++i) {
    total += ranks[i];
    if (diffs[i] > 0) plus += ranks[i];
  }
  r.statistic = static_cast<double>(std::min(plus, total - plus)) / 2.0;

  if (n <= kSignedRankExactMax) {
    // counts[s]: sign patterns whose doubled positive-rank sum is s
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (long rank : ranks) {
      for (long s = reach; s >= 0; --s) {
        if (counts[s] != 0.0) counts[s + rank] += counts[s];
      }
      reach += rank;
    }
    const long observed = std::labs(2 * plus - total);
    double extreme = 0.0;
    for (long s = 0; s <= total; ++s) {
      if (std::labs(2 * s - total) >= observed) extreme += counts[s];
    }
    r.p_value = std::min(1.0, extreme / std::ldexp(1.0, n));
    r.exact = true;
  } else {
    const double nn = n;
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term(mags) / 48.0;
    r.p_value = var > 0.0 ? normal_two_sided((plus / 2.0 - mean) / std::sqrt(var)) : 1.0;
  }
  return r;
}

TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) fail(ErrorCode::kData, "rank-sum test got an empty sample");
  if (x.size() < 3 || y.size() < 3) {
    fail(ErrorCode::kArgument, "rank-sum test needs at least 3 observations per sample");
  }
  const int m = static_cast<int>(x.size());
  const int n = static_cast<int>(y.size());
  const int N = m + n;
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  for (double v : pooled) {
    if (!std::isfinite(v)) fail(ErrorCode::kArgument, "rank-sum test got non-finite data");
  }
  const std::vector<long> ranks = doubled_average_ranks(pooled);
  long sum_x = 0;
  for (int i = 0; i < m; ++i) sum_x += ranks[i];

  TestResult r;
  r.n_used = N;
  // U = R_x - m(m+1)/2, with R_x = sum_x / 2
  r.statistic = static_cast<double>(sum_x - static_cast<long>(m) * (m + 1)) / 2.0;
  const long center = static_cast<long>(m) * (N + 1);  // doubled E[R_x]

  if (N <= kRankSumExactMax) {
    // ways[k][s]: subsets of size k of the pooled ranks with doubled sum s
    const long total = std::accumulate(ranks.begin(), ranks.end(), 0L);
    std::vector<std::vector<double>> ways(m + 1, std::vector<double>(total + 1, 0.0));
    ways[0][0] = 1.0;
    for (long rank : ranks) {
      for (int k = m; k >= 1; --k) {
        for (long s = total - rank; s >= 0; --s) {
          if (ways[k - 1][s] != 0.0) ways[k][s + rank] += ways[k - 1][s];
        }
      }
    }
    const long observed = std::labs(sum_x - center);
    double extreme = 0.0;
    double all = 0.0;
    for (long s = 0; s <= total; ++s) {
      all += ways[m][s];
      if (std::labs(s - center) >= observed) extreme += ways[m][s];
    }
    r.p_value = std::min(1.0, extreme / all);
    r.exact = true;
  } else {
    const double mm = m, nn = n, NN = N;
    const double var =
        mm * nn / 12.0 * ((NN + 1.0) - tie_term(pooled) / (NN * (NN - 1.0)));
    const double mu = mm * nn / 2.0;
    r.p_value = var > 0.0 ? normal_two_sided((r.statistic - mu) / std::sqrt(var)) : 1.0;
  }
  return r;
}

}  // namespace modsynth
