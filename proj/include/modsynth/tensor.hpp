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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace modsynth {

/// NCHW extent of a dense tensor.
struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample() const { return static_cast<std::size_t>(c) * h * w; }
  bool operator==(const Shape4&) const = default;
};

std::string to_string(const Shape4& s);

/// Dense row-major NCHW tensor of doubles. Value semantics.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape4 shape, double fill = 0.0);
  Tensor(Shape4 shape, std::vector<double> data);

  const Shape4& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double* raw() { return data_.data(); }
  const double* raw() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  double at(int n, int c, int h, int w) const {
    return data_[index(n, c, h, w)];
  }

  std::span<double> sample(int n) {
    return {data_.data() + n * shape_.sample(), shape_.sample()};
  }
  std::span<const double> sample(int n) const {
    return {data_.data() + n * shape_.sample(), shape_.sample()};
  }
  std::span<double> plane(int n, int c) {
    return {data_.data() + index(n, c, 0, 0), shape_.plane()};
  }
  std::span<const double> plane(int n, int c) const {
    return {data_.data() + index(n, c, 0, 0), shape_.plane()};
  }

  void fill(double v);
  Tensor& operator+=(const Tensor& other);

  /// Copies sample `n` out as a 1×C×H×W tensor.
  Tensor slice_sample(int n) const;
  /// Stacks equally-shaped 1×C×H×W tensors along N.
  static Tensor stack(std::span<const Tensor> samples);

 private:
  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) *
               shape_.w +
           w;
  }

  Shape4 shape_{};
  std::vector<double> data_;
};

}  // namespace modsynth
