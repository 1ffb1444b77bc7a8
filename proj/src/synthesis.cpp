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

#include "modsynth/synthesis.hpp"

#include <cmath>

#include "modsynth/error.hpp"
#include "modsynth/fsutil.hpp"
#include "modsynth/raster_image.hpp"

namespace modsynth {

Synthesizer::Synthesizer(const std::filesystem::path& checkpoint)
    : models_(load_checkpoint(checkpoint)) {}

Synthesizer::Synthesizer(ModelBundle models) : models_(std::move(models)) {}

TargetSlice Synthesizer::synthesize(const std::map<std::string, SliceStack>& inputs) const {
  if (inputs.empty()) fail(ErrorCode::kCondition, "no input modalities given");
  std::vector<std::string> present;
  for (const auto& [name, _] : inputs) present.push_back(name);
  const ConditionVector c = condition_from_names(modalities(), present);

  const int size = canonical_size();
  SliceStack stack(static_cast<int>(modalities().size()), size, size, modalities());
  std::fill(stack.data.begin(), stack.data.end(), static_cast<float>(kMissingFill));
  for (std::size_t i = 0; i < modalities().size(); ++i) {
    auto it = inputs.find(modalities()[i]);
    if (it == inputs.end()) continue;
    if (it->second.channels != 1) {
      fail(ErrorCode::kShape, "input " + it->first + " must be single-channel");
    }
    const SliceStack p = preprocess(it->second, size);
    std::copy(p.data.begin(), p.data.end(), stack.data.begin() + i * stack.plane_size());
  }
  return synthesize(stack, c);
}

TargetSlice Synthesizer::synthesize(const SliceStack& stack, const ConditionVector& c) const {
  require_usable(c, static_cast<int>(modalities().size()));
  if (stack.channels != c.size() || stack.height != canonical_size() ||
      stack.width != canonical_size()) {
    fail(ErrorCode::kShape, "synthesize: stack does not match the checkpoint geometry");
  }
  const Tensor x = mask_tensor(stack.to_tensor(), c);
  const Tensor cond = replicate(c, stack.height, stack.width);
  return SliceStack::from_tensor(models_.g1->infer(x, cond), 0, {target()});
}

TargetSlice synthesize(const std::filesystem::path& checkpoint,
                       const std::map<std::string, std::filesystem::path>& inputs,
                       const std::string& target) {
  if (inputs.empty()) fail(ErrorCode::kCondition, "no input modalities given");
  Synthesizer synth(checkpoint);
  if (target != synth.target()) {
    fail(ErrorCode::kArgument, "checkpoint synthesizes '" + synth.target() +
                                   "', not '" + target + "'");
  }
  std::map<std::string, SliceStack> slices;
  for (const auto& [name, path] : inputs) slices.emplace(name, read_slice_file(path));
  return synth.synthesize(slices);
}

SliceStack difference_raster(const TargetSlice& synthetic, const TargetSlice& real) {
  synthetic.validate();
  real.validate();
  if (synthetic.channels != 1 || real.channels != 1 || synthetic.height != real.height ||
      synthetic.width != real.width) {
    fail(ErrorCode::kShape, "difference map needs two equally sized single-channel slices");
  }
  SliceStack diff(1, real.height, real.width);
  for (std::size_t i = 0; i < diff.data.size(); ++i) {
    diff.data[i] = std::abs(synthetic.data[i] - real.data[i]);
  }
  return diff;
}

SliceStack difference_map(const TargetSlice& synthetic, const TargetSlice& real,
                          const std::filesystem::path& image_path,
                          const std::filesystem::path& raw_path) {
  SliceStack diff = difference_raster(synthetic, real);
  write_file_atomic(image_path, encode_heat_ppm(diff, kHeatFullScale));
  write_slice_file(raw_path, diff);
  return diff;
}

}  // namespace modsynth
