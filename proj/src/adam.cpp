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

#include "modsynth/adam.hpp"

#include <cmath>

#include "modsynth/error.hpp"

namespace modsynth {

Adam::Adam(Module& module, AdamConfig config) : module_(module), config_(config) {
  if (!(config_.learning_rate >= 0.0)) {
    fail(ErrorCode::kArgument, "learning rate must be non-negative");
  }
  for (const auto& p : module_.parameters()) {
    m_.emplace_back(p.var.shape());
    v_.emplace_back(p.var.shape());
  }
}

void Adam::step() {
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  auto& params = module_.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& g = params[i].var.grad();
    if (g.empty()) continue;
    Tensor& w = params[i].var.mutable_value();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      w[k] -= config_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.eps);
    }
  }
}

}  // namespace modsynth
