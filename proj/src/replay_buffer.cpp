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

#include "modsynth/replay_buffer.hpp"

#include "modsynth/error.hpp"

namespace modsynth {

ReplayBuffer::ReplayBuffer(int capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  if (capacity <= 0) fail(ErrorCode::kArgument, "replay buffer capacity must be positive");
  stored_.reserve(capacity);
}

Tensor ReplayBuffer::push_query(const Tensor& img) {
  if (img.n() != 1) {
    fail(ErrorCode::kShape, "replay buffer takes one image at a time, got " +
                                to_string(img.shape()));
  }
  if (!stored_.empty() && !(stored_.front().shape() == img.shape())) {
    fail(ErrorCode::kShape, "replay buffer holds " +
                                to_string(stored_.front().shape()) + " images, got " +
                                to_string(img.shape()));
  }
  ++queries_;
  if (size() < capacity_) {
    stored_.push_back(img);
    return img;
  }
  if (std::bernoulli_distribution(0.5)(rng_)) return img;
  const int slot = std::uniform_int_distribution<int>(0, capacity_ - 1)(rng_);
  Tensor old = std::move(stored_[slot]);
  stored_[slot] = img;
  ++historical_;
  return old;
}

Tensor ReplayBuffer::push_query_batch(const Tensor& batch) {
  std::vector<Tensor> out;
  out.reserve(batch.n());
  for (int i = 0; i < batch.n(); ++i) out.push_back(push_query(batch.slice_sample(i)));
  return Tensor::stack(out);
}

}  // namespace modsynth
