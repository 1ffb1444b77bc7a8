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

#include <set>

#include "modsynth/dataio.hpp"
#include "modsynth/error.hpp"

namespace modsynth {

SliceStack::SliceStack(int c, int h, int w, std::vector<std::string> names)
    : channels(c), height(h), width(w), modality_names(std::move(names)) {
  if (c <= 0 || h <= 0 || w <= 0) {
    fail(ErrorCode::kDimension, "slice stack dimensions must be positive, got " +
                                    std::to_string(c) + "x" + std::to_string(h) +
                                    "x" + std::to_string(w));
  }
  data.assign(static_cast<std::size_t>(c) * h * w, 0.0f);
}

void SliceStack::validate() const {
  if (channels <= 0 || height <= 0 || width <= 0) {
    fail(ErrorCode::kDimension, "slice stack has non-positive dimensions");
  }
  if (data.size() != static_cast<std::size_t>(channels) * height * width) {
    fail(ErrorCode::kLength, "slice stack data length " +
                                 std::to_string(data.size()) +
                                 " does not equal C*H*W");
  }
  if (!modality_names.empty()) {
    if (static_cast<int>(modality_names.size()) != channels) {
      fail(ErrorCode::kShape, "modality name count does not match channels");
    }
    std::set<std::string> seen(modality_names.begin(), modality_names.end());
    if (seen.size() != modality_names.size()) {
      fail(ErrorCode::kArgument, "modality names must be unique");
    }
  }
}

SliceStack SliceStack::channel(int c) const {
  if (c < 0 || c >= channels) {
    fail(ErrorCode::kArgument, "channel index " + std::to_string(c) +
                                   " out of range");
  }
  SliceStack out(1, height, width);
  if (!modality_names.empty()) out.modality_names = {modality_names[c]};
  std::copy_n(data.begin() + c * plane_size(), plane_size(), out.data.begin());
  return out;
}

Tensor SliceStack::to_tensor() const {
  validate();
  Tensor t({1, channels, height, width});
  for (std::size_t i = 0; i < data.size(); ++i) t[i] = data[i];
  return t;
}

SliceStack SliceStack::from_tensor(const Tensor& t, int sample,
                                   std::vector<std::string> names) {
  SliceStack out(t.c(), t.h(), t.w(), std::move(names));
  auto src = t.sample(sample);
  for (std::size_t i = 0; i < src.size(); ++i) {
    out.data[i] = static_cast<float>(src[i]);
  }
  return out;
}

}  // namespace modsynth
