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

#include "modsynth/raster_image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "modsynth/error.hpp"
#include "modsynth/fsutil.hpp"

namespace modsynth {
namespace {

std::vector<std::uint8_t> header(const char* magic, int w, int h) {
  const std::string s = std::string(magic) + "\n" + std::to_string(w) + " " +
                        std::to_string(h) + "\n255\n";
  return {s.begin(), s.end()};
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_chunk(std::vector<std::uint8_t>& out, const char* type,
               const std::vector<std::uint8_t>& payload) {
  put_be32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(const SliceStack& stack, int channel) {
  stack.validate();
  if (channel < 0 || channel >= stack.channels) {
    fail(ErrorCode::kArgument, "channel out of range for PGM export");
  }
  auto out = header("P5", stack.width, stack.height);
  const std::size_t off = channel * stack.plane_size();
  for (std::size_t i = 0; i < stack.plane_size(); ++i) {
    out.push_back(to_byte((stack.data[off + i] + 1.0) / 2.0));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const SliceStack& stack, int channel) {
  write_file_atomic(path, encode_pgm(stack, channel));
}

std::vector<std::uint8_t> encode_png(const SliceStack& stack, int channel) {
  stack.validate();
  if (channel < 0 || channel >= stack.channels) {
    fail(ErrorCode::kArgument, "channel out of range for PNG export");
  }
  // Scanlines with filter type 0.
  std::vector<std::uint8_t> raw;
  raw.reserve(stack.plane_size() + stack.height);
  const std::size_t off = channel * stack.plane_size();
  for (int y = 0; y < stack.height; ++y) {
    raw.push_back(0);
    for (int x = 0; x < stack.width; ++x) {
      raw.push_back(to_byte((stack.data[off + static_cast<std::size_t>(y) * stack.width + x] + 1.0) / 2.0));
    }
  }
  uLongf packed_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_len);
  if (compress2(packed.data(), &packed_len, raw.data(), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK) {
    fail(ErrorCode::kIo, "PNG compression failed");
  }
  packed.resize(packed_len);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(stack.width));
  put_be32(ihdr, static_cast<std::uint32_t>(stack.height));
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});  // 8-bit greyscale, no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

void write_png(const std::filesystem::path& path, const SliceStack& stack, int channel) {
  write_file_atomic(path, encode_png(stack, channel));
}

std::array<std::uint8_t, 3> heat_color(double t) {
  t = std::clamp(std::isfinite(t) ? t : 1.0, 0.0, 1.0) * 3.0;
  const double r = std::min(t, 1.0);
  const double g = std::clamp(t - 1.0, 0.0, 1.0);
  const double b = std::clamp(t - 2.0, 0.0, 1.0);
  return {to_byte(r), to_byte(g), to_byte(b)};
}

std::vector<std::uint8_t> encode_heat_ppm(const SliceStack& raster, double full_scale) {
  raster.validate();
  if (raster.channels != 1) fail(ErrorCode::kShape, "heat map needs a single channel");
  if (!(full_scale > 0.0)) fail(ErrorCode::kArgument, "heat map full scale must be positive");
  auto out = header("P6", raster.width, raster.height);
  for (float v : raster.data) {
    const auto rgb = heat_color(v / full_scale);
    out.insert(out.end(), rgb.begin(), rgb.end());
  }
  return out;
}

}  // namespace modsynth
