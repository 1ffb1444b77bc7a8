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

#include <cstdint>
#include <random>
#include <vector>

#include "modsynth/tensor.hpp"

namespace modsynth {

/// Bounded history of generated images used to feed the discriminators.
/// While filling, every pushed image is stored and returned as-is. Once full,
/// each push returns the new image with probability 1/2, and otherwise swaps
/// it for a uniformly chosen stored image and returns that one instead.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, std::uint64_t seed);

  /// img must be 1×C×H×W and match the shape of earlier pushes.
  Tensor push_query(const Tensor& img);
  /// Applies push_query to every sample of an N×C×H×W batch, in order.
  Tensor push_query_batch(const Tensor& batch);

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(stored_.size()); }
  std::uint64_t queries() const { return queries_; }
  std::uint64_t historical_returns() const { return historical_; }

 private:
  int capacity_;
  std::vector<Tensor> stored_;
  std::mt19937_64 rng_;
  std::uint64_t queries_ = 0;
  std::uint64_t historical_ = 0;
};

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

}  // namespace modsynth
