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

#include "modsynth/conditioning.hpp"

#include <algorithm>
#include <set>

#include "modsynth/error.hpp"

namespace modsynth {

int ConditionVector::count() const {
  return static_cast<int>(std::count_if(bits.begin(), bits.end(),
                                        [](int b) { return b != 0; }));
}

std::string ConditionVector::to_string() const {
  std::string s;
  for (int b : bits) s.push_back(b ? '1' : '0');
  return s;
}

std::vector<ConditionVector> enumerate_subsets(int n) {
  if (n < 1 || n > kMaxModalities) {
    fail(ErrorCode::kArgument, "modality count must be in [1, 16], got " +
                                   std::to_string(n));
  }
  std::vector<ConditionVector> out;
  out.reserve((1u << n) - 1);
  for (unsigned k = 1; k < (1u << n); ++k) {
    ConditionVector c;
    c.bits.resize(n);
    for (int i = 0; i < n; ++i) c.bits[i] = (k >> (n - 1 - i)) & 1u;
    out.push_back(std::move(c));
  }
  return out;
}

Tensor replicate(const ConditionVector& c, int height, int width) {
  return replicate_batch(c, 1, height, width);
}

Tensor replicate_batch(const ConditionVector& c, int batch, int height, int width) {
  if (height <= 0 || width <= 0 || batch <= 0) {
    fail(ErrorCode::kDimension, "condition planes need positive extents");
  }
  Tensor out({batch, c.size(), height, width});
  for (int n = 0; n < batch; ++n) {
    for (int i = 0; i < c.size(); ++i) {
      auto p = out.plane(n, i);
      std::fill(p.begin(), p.end(), c.bits[i] ? 1.0 : 0.0);
    }
  }
  return out;
}

SliceStack mask_stack(const SliceStack& stack, const ConditionVector& c) {
  if (stack.channels != c.size()) {
    fail(ErrorCode::kShape, "mask_stack: " + std::to_string(stack.channels) +
                                " channels vs condition of length " +
                                std::to_string(c.size()));
  }
  SliceStack out = stack;
  for (int i = 0; i < c.size(); ++i) {
    if (c.bits[i]) continue;
    std::fill_n(out.data.begin() + i * out.plane_size(), out.plane_size(),
                static_cast<float>(kMissingFill));
  }
  return out;
}

Tensor mask_tensor(const Tensor& stack, const ConditionVector& c) {
  if (stack.c() != c.size()) {
    fail(ErrorCode::kShape, "mask_tensor: " + std::to_string(stack.c()) +
                                " channels vs condition of length " +
                                std::to_string(c.size()));
  }
  Tensor out = stack;
  for (int n = 0; n < out.n(); ++n) {
    for (int i = 0; i < c.size(); ++i) {
      if (c.bits[i]) continue;
      auto p = out.plane(n, i);
      std::fill(p.begin(), p.end(), kMissingFill);
    }
  }
  return out;
}

ConditionVector condition_from_names(const std::vector<std::string>& modalities,
                                     const std::vector<std::string>& present) {
  ConditionVector c;
  c.bits.assign(modalities.size(), 0);
  for (const auto& name : present) {
    auto it = std::find(modalities.begin(), modalities.end(), name);
    if (it == modalities.end()) {
      fail(ErrorCode::kArgument, "unknown modality '" + name + "'");
    }
    c.bits[it - modalities.begin()] = 1;
  }
  if (!c.any()) fail(ErrorCode::kCondition, "at least one input modality is required");
  return c;
}

std::string condition_label(const ConditionVector& c,
                            const std::vector<std::string>& modalities) {
  std::string label;
  for (int i = 0; i < c.size(); ++i) {
    if (!c.bits[i]) continue;
    if (!label.empty()) label += "+";
    label += i < static_cast<int>(modalities.size()) ? modalities[i]
                                                     : std::to_string(i);
  }
  return label.empty() ? "none" : label;
}

void require_usable(const ConditionVector& c, int n) {
  if (c.size() != n) {
    fail(ErrorCode::kShape, "condition has length " + std::to_string(c.size()) +
                                ", expected " + std::to_string(n));
  }
  for (int b : c.bits) {
    if (b != 0 && b != 1) fail(ErrorCode::kArgument, "condition bits must be 0 or 1");
  }
  if (!c.any()) fail(ErrorCode::kCondition, "the empty condition is not allowed");
}

}  // namespace modsynth
