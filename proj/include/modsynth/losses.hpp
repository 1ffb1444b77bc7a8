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

#include <functional>
#include <string>

#include "modsynth/autograd.hpp"
#include "modsynth/conditioning.hpp"

namespace modsynth {

/// Per-step loss breakdown. total_g = adv_g + lambda_rec * (rec_forward +
/// rec_backward); total_d = adv_d.
struct LossReport {
  double rec_forward = 0.0;
  double rec_backward = 0.0;
  double adv_g = 0.0;
  double adv_d = 0.0;
  double total_g = 0.0;
  double total_d = 0.0;
  double lambda_rec = 0.0;

  bool finite() const;
  bool operator==(const LossReport&) const = default;
};

struct LossParts {
  double rec_forward = 0.0;
  double rec_backward = 0.0;
  double adv_g = 0.0;
  double adv_d = 0.0;
};

/// Composes the full objectives. lambda_rec must be non-negative.
LossReport total_objectives(const LossParts& parts, double lambda_rec);

/// A conditional image-to-image map, e.g. a bound Generator::forward.
using ImageMap = std::function<ag::Var(const ag::Var& images, const ag::Var& cond)>;

/// Intermediate images and both reconstruction terms of one cycle pass.
struct CycleOutputs {
  ag::Var fake_target;    // G1(X, c)
  ag::Var rec_inputs;     // G2(G1(X, c), c)
  ag::Var fake_inputs;    // G2(T, c), absent channels masked to the fill value
  ag::Var rec_target;     // G1(G2(T, c), c)
  ag::Var rec_forward;    // mean |X - rec_inputs| over available channels
  ag::Var rec_backward;   // mean |T - rec_target|
};

/// `inputs` is the N×n stack already masked with `c`; `target` is N×1.
CycleOutputs multimodal_cycle_loss(const ag::Var& inputs, const ag::Var& target,
                                   const ConditionVector& c, const ImageMap& g1,
                                   const ImageMap& g2);

/// mean((real - 1)^2) + mean(fake^2)
ag::Var lsgan_d_loss(const ag::Var& real_scores, const ag::Var& fake_scores);
double lsgan_d_loss(const Tensor& real_scores, const Tensor& fake_scores);

/// mean((fake - 1)^2)
ag::Var lsgan_g_loss(const ag::Var& fake_scores);
double lsgan_g_loss(const Tensor& fake_scores);

}  // namespace modsynth
