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

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "modsynth/conditioning.hpp"
#include "modsynth/dataio.hpp"

namespace modsynth {

class Synthesizer;

// -- Image fidelity -------------------------------------------------------------
//
// Both metrics take images on the network's [-1, 1] scale and evaluate them
// after the affine map v -> (v + 1) / 2 onto [0, 1], with peak value 1.

/// 10 log10(1 / MSE); +infinity when the images are identical.
double psnr(std::span<const float> a, std::span<const float> b);
double psnr(const SliceStack& a, const SliceStack& b);

/// Mean absolute error on the [0, 1] scale.
double mae(std::span<const float> a, std::span<const float> b);
double mae(const SliceStack& a, const SliceStack& b);

// -- Condition sweep --------------------------------------------------------------

struct MetricRow {
  std::string condition;  // e.g. "t1+t2+flair"
  ConditionVector bits;
  double psnr = 0.0;      // mean over slices; +infinity if any slice is exact
  double mae = 0.0;
  int n_slices = 0;
  std::vector<double> slice_psnr;
  std::vector<double> slice_mae;
};

struct EvalReport {
  std::string target;
  std::vector<std::string> modalities;
  std::vector<MetricRow> rows;  // canonical subset order

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Synthesizes every test slice under each of the 2^n - 1 conditions.
EvalReport evaluate_conditions(const Synthesizer& synth, const CorpusManifest& test,
                               const std::string& target);
EvalReport evaluate_conditions(const std::filesystem::path& checkpoint,
                               const CorpusManifest& test, const std::string& target);

// -- Nonparametric tests ----------------------------------------------------------

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool exact = false;
  int n_used = 0;         // signed-rank: non-zero differences kept
  int n_zero_dropped = 0; // signed-rank only

  nlohmann::json to_json() const;
};

inline constexpr int kSignedRankExactMax = 25;
inline constexpr int kRankSumExactMax = 20;

/// Two-sided Wilcoxon signed-rank test on x - y. Zero differences are dropped
/// and counted; tied magnitudes get average ranks. statistic = min(W+, W-).
/// Exact null distribution for up to 25 non-zero pairs, normal approximation
/// with tie correction beyond that.
TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) test. statistic = U of x.
/// Exact null distribution when m + n <= 20, tie-corrected normal
/// approximation otherwise.
TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based) of `values`, doubled so they are integers.
std::vector<long> doubled_average_ranks(std::span<const double> values);

}  // namespace modsynth
