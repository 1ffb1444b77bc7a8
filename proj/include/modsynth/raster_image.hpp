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

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "modsynth/dataio.hpp"

namespace modsynth {

/// Binary PGM (P5) of one channel, [-1, 1] mapped linearly onto 0..255.
std::vector<std::uint8_t> encode_pgm(const SliceStack& stack, int channel = 0);
void write_pgm(const std::filesystem::path& path, const SliceStack& stack,
               int channel = 0);

/// 8-bit greyscale PNG of one channel, same intensity mapping as encode_pgm.
std::vector<std::uint8_t> encode_png(const SliceStack& stack, int channel = 0);
void write_png(const std::filesystem::path& path, const SliceStack& stack,
               int channel = 0);

/// Black -> red -> yellow -> white ramp over t in [0, 1]; t is clamped.
std::array<std::uint8_t, 3> heat_color(double t);

/// Binary PPM (P6) heat map of a non-negative single-channel raster.
/// `full_scale` is the value rendered as white.
std::vector<std::uint8_t> encode_heat_ppm(const SliceStack& raster, double full_scale);

}  // namespace modsynth
