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

#include "modsynth/losses.hpp"

#include <cmath>
#include <vector>

#include "modsynth/error.hpp"

namespace modsynth {

bool LossReport::finite() const {
  for (double v : {rec_forward, rec_backward, adv_g, adv_d, total_g, total_d}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

LossReport total_objectives(const LossParts& parts, double lambda_rec) {
  if (!(lambda_rec >= 0.0)) {
    fail(ErrorCode::kArgument, "lambda_rec must be non-negative");
  }
  LossReport r;
  r.rec_forward = parts.rec_forward;
  r.rec_backward = parts.rec_backward;
  r.adv_g = parts.adv_g;
  r.adv_d = parts.adv_d;
  r.lambda_rec = lambda_rec;
  r.total_g = parts.adv_g + lambda_rec * (parts.rec_forward + parts.rec_backward);
  r.total_d = parts.adv_d;
  return r;
}

CycleOutputs multimodal_cycle_loss(const ag::Var& inputs, const ag::Var& target,
                                   const ConditionVector& c, const ImageMap& g1,
                                   const ImageMap& g2) {
  const Shape4 xs = inputs.shape();
  const Shape4 ts = target.shape();
  require_usable(c, xs.c);
  if (ts.c != 1 || ts.n != xs.n || ts.h != xs.h || ts.w != xs.w) {
    fail(ErrorCode::kShape, "cycle loss: inputs " + to_string(xs) +
                                " and target " + to_string(ts) + " disagree");
  }
  ag::Var cond = ag::Var::constant(replicate_batch(c, xs.n, xs.h, xs.w));
  const std::vector<int> target_on = {1};

  CycleOutputs out;
  out.fake_target = g1(inputs, cond);
  out.rec_inputs = g2(out.fake_target, cond);
  out.fake_inputs = ag::mask_channels(g2(target, cond), c.bits, kMissingFill);
  out.rec_target = g1(out.fake_inputs, cond);
  if (!(out.rec_inputs.shape() == xs) || !(out.rec_target.shape() == ts)) {
    fail(ErrorCode::kShape, "cycle loss: generator outputs have the wrong shape");
  }
  out.rec_forward = ag::masked_mean_abs_diff(inputs, out.rec_inputs, c.bits);
  out.rec_backward = ag::masked_mean_abs_diff(target, out.rec_target, target_on);
  return out;
}

ag::Var lsgan_d_loss(const ag::Var& real_scores, const ag::Var& fake_scores) {
  const ag::Var terms[] = {ag::mean_squared_to(real_scores, 1.0),
                           ag::mean_squared_to(fake_scores, 0.0)};
  const double weights[] = {1.0, 1.0};
  return ag::weighted_sum(terms, weights);
}

double lsgan_d_loss(const Tensor& real_scores, const Tensor& fake_scores) {
  return lsgan_d_loss(ag::Var::constant(real_scores), ag::Var::constant(fake_scores))
      .item();
}

ag::Var lsgan_g_loss(const ag::Var& fake_scores) {
  return ag::mean_squared_to(fake_scores, 1.0);
}

double lsgan_g_loss(const Tensor& fake_scores) {
  return lsgan_g_loss(ag::Var::constant(fake_scores)).item();
}

}  // namespace modsynth
