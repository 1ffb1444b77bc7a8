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

// Minimal reverse-mode differentiation over NCHW tensors. A Var is a handle
// to a graph node; operations build the graph eagerly and `backward` walks it
// in reverse topological order, accumulating into each node's gradient.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "modsynth/tensor.hpp"

namespace modsynth::ag {

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& grad_buffer();
  void accumulate(const Tensor& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Tensor value);
  static Var parameter(Tensor value);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  const Shape4& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  void zero_grad() { node_->grad = Tensor(); }
  double item() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit operator bool() const { return node_ != nullptr; }

 private:
  std::shared_ptr<Node> node_;
};

/// While alive, operations on this thread record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Seeds d(root)/d(root) = 1 and propagates. `root` must hold one element.
void backward(const Var& root);

enum class PadMode { kZero, kReflect };

struct Padding {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;
};

// Weight layout: conv2d (Cout, Cin, k, k); conv_transpose2d (Cin, Cout, k, k).
// Bias layout: (1, Cout, 1, 1).
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride,
           int pad);
Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias,
                     int stride, int pad, int output_pad);
Var pad2d(const Var& x, Padding p, PadMode mode);
Var instance_norm(const Var& x, double eps = 1e-5);
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var tanh(const Var& x);
Var add(const Var& a, const Var& b);
Var concat_channels(const Var& a, const Var& b);

/// Channels with bits[i] == 0 are replaced by `fill`; the rest pass through.
Var mask_channels(const Var& x, std::span<const int> bits, double fill);

/// Mean |a - b| over the channels whose flag is set. Scalar result.
Var masked_mean_abs_diff(const Var& a, const Var& b,
                         std::span<const int> channel_on);
/// mean((x - target)^2). Scalar result.
Var mean_squared_to(const Var& x, double target);
/// sum_i weights[i] * terms[i] over scalar terms.
Var weighted_sum(std::span<const Var> terms, std::span<const double> weights);

}  // namespace modsynth::ag
