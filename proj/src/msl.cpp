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

#include <bit>
#include <cstring>

#include "modsynth/dataio.hpp"
#include "modsynth/error.hpp"
#include "modsynth/fsutil.hpp"

namespace modsynth {
namespace {

constexpr std::size_t kHeaderBytes = 20;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_msl(const SliceStack& stack) {
  stack.validate();
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + stack.data.size() * 4);
  out.insert(out.end(), std::begin(kMslMagic), std::end(kMslMagic));
  put_u32(out, kMslVersion);
  put_u32(out, static_cast<std::uint32_t>(stack.channels));
  put_u32(out, static_cast<std::uint32_t>(stack.height));
  put_u32(out, static_cast<std::uint32_t>(stack.width));
  for (float f : stack.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

SliceStack decode_msl(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMslMagic, 4) != 0) {
    fail(ErrorCode::kFormat, "not an MSL file (bad magic)");
  }
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kMslVersion) {
    fail(ErrorCode::kFormat, "unsupported MSL version " + std::to_string(version));
  }
  if (bytes.size() < kHeaderBytes) {
    fail(ErrorCode::kLength, "MSL header truncated");
  }
  const std::uint32_t c = get_u32(bytes.data() + 8);
  const std::uint32_t h = get_u32(bytes.data() + 12);
  const std::uint32_t w = get_u32(bytes.data() + 16);
  if (c == 0 || h == 0 || w == 0) {
    fail(ErrorCode::kDimension, "MSL header has a zero dimension");
  }
  const std::uint64_t count = static_cast<std::uint64_t>(c) * h * w;
  const std::uint64_t expected = kHeaderBytes + count * 4;
  if (bytes.size() < expected) {
    fail(ErrorCode::kLength, "MSL payload truncated: expected " +
                                 std::to_string(expected) + " bytes, got " +
                                 std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    fail(ErrorCode::kLength, "MSL file has trailing bytes");
  }
  SliceStack out(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i, p += 4) {
    out.data[i] = std::bit_cast<float>(get_u32(p));
  }
  return out;
}

void write_slice_file(const std::filesystem::path& path, const SliceStack& stack) {
  write_file_atomic(path, encode_msl(stack));
}

SliceStack read_slice_file(const std::filesystem::path& path) {
  return decode_msl(read_file_bytes(path));
}

}  // namespace modsynth
