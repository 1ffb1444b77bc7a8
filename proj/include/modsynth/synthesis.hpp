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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "modsynth/conditioning.hpp"
#include "modsynth/dataio.hpp"
#include "modsynth/training.hpp"

namespace modsynth {

/// Inference front-end over a loaded checkpoint. Read-only after
/// construction, so concurrent calls are safe.
class Synthesizer {
 public:
  explicit Synthesizer(const std::filesystem::path& checkpoint);
  explicit Synthesizer(ModelBundle models);

  const std::vector<std::string>& modalities() const { return models_.config.modalities; }
  const std::string& target() const { return models_.config.target; }
  int canonical_size() const { return models_.config.canonical_size; }

  /// Inputs are single-channel slices keyed by modality name, in any order.
  /// Each is preprocessed to the canonical size; absent modalities are masked.
  TargetSlice synthesize(const std::map<std::string, SliceStack>& inputs) const;

  /// Full n-channel preprocessed stack; channels with c_i == 0 are ignored.
  TargetSlice synthesize(const SliceStack& stack, const ConditionVector& c) const;

 private:
  ModelBundle models_;
};

/// File-level convenience: reads every input, checks `target` against the
/// checkpoint and synthesizes.
TargetSlice synthesize(const std::filesystem::path& checkpoint,
                       const std::map<std::string, std::filesystem::path>& inputs,
                       const std::string& target);

/// Full-scale value of the difference heat map (half the [-1, 1] range).
inline constexpr double kHeatFullScale = 1.0;

/// |synthetic - real| as a raster.
SliceStack difference_raster(const TargetSlice& synthetic, const TargetSlice& real);

/// Writes the heat-map PPM to `image_path` and the raw raster as MSL to
/// `raw_path`; returns the raster.
SliceStack difference_map(const TargetSlice& synthetic, const TargetSlice& real,
                          const std::filesystem::path& image_path,
                          const std::filesystem::path& raw_path);

}  // namespace modsynth
