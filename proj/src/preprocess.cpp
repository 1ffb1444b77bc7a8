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

#include <algorithm>
#include <cmath>

#include "modsynth/dataio.hpp"
#include "modsynth/error.hpp"

namespace modsynth {

SliceStack preprocess(const SliceStack& slice, int canonical_size) {
  if (canonical_size <= 0) {
    fail(ErrorCode::kDimension, "canonical size must be positive");
  }
  if (slice.channels <= 0 || slice.height <= 0 || slice.width <= 0 ||
      slice.data.empty()) {
    fail(ErrorCode::kDimension, "cannot preprocess an empty slice");
  }
  slice.validate();

  // Window of the source that survives cropping, and where it lands.
  auto place = [canonical_size](int extent, int& src0, int& dst0, int& len) {
    if (extent >= canonical_size) {
      src0 = (extent - canonical_size) / 2;
      dst0 = 0;
      len = canonical_size;
    } else {
      src0 = 0;
      dst0 = (canonical_size - extent) / 2;
      len = extent;
    }
  };
  int sy, dy, ly, sx, dx, lx;
  place(slice.height, sy, dy, ly);
  place(slice.width, sx, dx, lx);

  SliceStack out(slice.channels, canonical_size, canonical_size,
                 slice.modality_names);
  for (int c = 0; c < slice.channels; ++c) {
    double lo = INFINITY;
    double hi = -INFINITY;
    for (int y = 0; y < ly; ++y) {
      for (int x = 0; x < lx; ++x) {
        const double v = slice.at(c, sy + y, sx + x);
        if (!std::isfinite(v)) {
          fail(ErrorCode::kArgument, "slice contains non-finite intensities");
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const double range = hi - lo;
    if (range <= 0.0) {
      // Constant channels are background throughout, border included.
      std::fill_n(out.data.begin() + c * out.plane_size(), out.plane_size(), -1.0f);
      continue;
    }
    for (int y = 0; y < ly; ++y) {
      for (int x = 0; x < lx; ++x) {
        double v = 2.0 * (static_cast<double>(slice.at(c, sy + y, sx + x)) - lo) / range - 1.0;
        v = std::clamp(v, -1.0, 1.0);
        out.at(c, dy + y, dx + x) = static_cast<float>(v);
      }
    }
  }
  return out;
}

}  // namespace modsynth
