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
#include <vector>

#include "modsynth/nets.hpp"
#include "modsynth/replay_buffer.hpp"

namespace modsynth {

/// Adam over the parameters of one module. Parameters without a gradient in
/// a given step are left untouched.
class Adam {
 public:
  Adam(Module& module, AdamConfig config);

  void step();
  const AdamConfig& config() const { return config_; }
  std::int64_t steps() const { return steps_; }

  // Moment estimates, parallel to module.parameters(); exposed for checkpoints.
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  void set_steps(std::int64_t s) { steps_ = s; }

 private:
  Module& module_;
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t steps_ = 0;
};

}  // namespace modsynth
