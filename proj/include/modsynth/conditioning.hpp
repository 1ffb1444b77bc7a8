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

#include <string>
#include <vector>

#include "modsynth/dataio.hpp"
#include "modsynth/tensor.hpp"

namespace modsynth {

/// Value written into absent modality channels (the rescaled background).
inline constexpr double kMissingFill = -1.0;
inline constexpr int kMaxModalities = 16;

/// Availability condition: bits[i] == 1 when input modality i is present.
struct ConditionVector {
  std::vector<int> bits;

  int size() const { return static_cast<int>(bits.size()); }
  int count() const;
  bool any() const { return count() > 0; }
  /// e.g. "101"
  std::string to_string() const;
  bool operator==(const ConditionVector&) const = default;
};

/// All 2^n - 1 non-empty conditions in binary counting order with the first
/// modality as the most significant bit: n=3 gives 001, 010, ..., 111.
std::vector<ConditionVector> enumerate_subsets(int n);

/// 1×n×H×W tensor whose plane i is the constant bits[i].
Tensor replicate(const ConditionVector& c, int height, int width);
/// Same planes repeated for a batch of `batch` samples.
Tensor replicate_batch(const ConditionVector& c, int batch, int height, int width);

/// Replaces absent channels by kMissingFill.
SliceStack mask_stack(const SliceStack& stack, const ConditionVector& c);
Tensor mask_tensor(const Tensor& stack, const ConditionVector& c);

/// Builds c over `modalities` from the names that are present. Unknown names
/// are an argument error; an empty selection is a condition error.
ConditionVector condition_from_names(const std::vector<std::string>& modalities,
                                     const std::vector<std::string>& present);

/// "t1+flair" style label, modalities in canonical order.
std::string condition_label(const ConditionVector& c,
                            const std::vector<std::string>& modalities);

/// Rejects wrong lengths and the all-zero condition.
void require_usable(const ConditionVector& c, int n);

}  // namespace modsynth
