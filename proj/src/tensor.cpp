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

#include "modsynth/tensor.hpp"

#include <algorithm>

#include "modsynth/error.hpp"

namespace modsynth {

std::string to_string(const Shape4& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" +
         std::to_string(s.h) + "x" + std::to_string(s.w);
}

Tensor::Tensor(Shape4 shape, double fill)
    : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape4 shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    fail(ErrorCode::kShape, "tensor data length " +
                                std::to_string(data_.size()) +
                                " does not match shape " + to_string(shape_));
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!(other.shape_ == shape_)) {
    fail(ErrorCode::kShape, "cannot add " + to_string(other.shape_) + " to " +
                                to_string(shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor Tensor::slice_sample(int n) const {
  Tensor out({1, shape_.c, shape_.h, shape_.w});
  auto src = sample(n);
  std::copy(src.begin(), src.end(), out.data_.begin());
  return out;
}

Tensor Tensor::stack(std::span<const Tensor> samples) {
  if (samples.empty()) fail(ErrorCode::kData, "cannot stack zero samples");
  Shape4 one = samples.front().shape();
  Tensor out({static_cast<int>(samples.size()), one.c, one.h, one.w});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Shape4& s = samples[i].shape();
    if (s.n != 1 || s.c != one.c || s.h != one.h || s.w != one.w) {
      fail(ErrorCode::kShape, "stack: sample " + std::to_string(i) +
                                  " has shape " + to_string(s));
    }
    std::copy(samples[i].data_.begin(), samples[i].data_.end(),
              out.data_.begin() + i * one.sample());
  }
  return out;
}

}  // namespace modsynth
