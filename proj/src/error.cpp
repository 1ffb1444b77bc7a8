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

#include "modsynth/error.hpp"

namespace modsynth {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kLength: return "length error";
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kArgument: return "argument error";
    case ErrorCode::kCondition: return "condition error";
    case ErrorCode::kData: return "data error";
    case ErrorCode::kDivergence: return "divergence error";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kCapacity: return "capacity error";
    case ErrorCode::kBind: return "bind error";
    case ErrorCode::kDegenerate: return "degenerate data error";
    case ErrorCode::kNotFound: return "not found";
    case ErrorCode::kConflict: return "conflict";
  }
  return "unknown error";
}

}  // namespace modsynth
