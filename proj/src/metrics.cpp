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

#include <cmath>
#include <limits>

#include "modsynth/error.hpp"
#include "modsynth/evalmetrics.hpp"

namespace modsynth {
namespace {

void require_same(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::kShape, "metric inputs differ in size (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) fail(ErrorCode::kShape, "metric inputs are empty");
}

void require_same(const SliceStack& a, const SliceStack& b) {
  if (a.channels != b.channels || a.height != b.height || a.width != b.width) {
    fail(ErrorCode::kShape, "metric inputs have different shapes");
  }
}

}  // namespace

double psnr(std::span<const float> a, std::span<const float> b) {
  require_same(a, b);
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    // ((a + 1) / 2 - (b + 1) / 2) = (a - b) / 2
    const double d = (static_cast<double>(a[i]) - b[i]) / 2.0;
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const SliceStack& a, const SliceStack& b) {
  require_same(a, b);
  return psnr(std::span<const float>(a.data), std::span<const float>(b.data));
}

double mae(std::span<const float> a, std::span<const float> b) {
  require_same(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += std::abs(static_cast<double>(a[i]) - b[i]) / 2.0;
  }
  return s / static_cast<double>(a.size());
}

double mae(const SliceStack& a, const SliceStack& b) {
  require_same(a, b);
  return mae(std::span<const float>(a.data), std::span<const float>(b.data));
}

}  // namespace modsynth
