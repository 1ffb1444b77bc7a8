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

#include <stdexcept>
#include <string>

namespace modsynth {

/// Error categories surfaced by every module. The numeric values are
/// mirrored by the C API status codes in modsynth.h.
enum class ErrorCode : int {
  kFormat = 1,      // bad magic/version or unparsable document
  kLength = 2,      // truncated payload
  kDimension = 3,   // empty or non-positive dimensions
  kShape = 4,       // tensor/stack shape mismatch
  kArgument = 5,    // out-of-range or unknown argument
  kCondition = 6,   // empty availability condition
  kData = 7,        // empty dataset / sample
  kDivergence = 8,  // non-finite loss during training
  kIo = 9,          // filesystem failure
  kCapacity = 10,   // pool or buffer too small for the request
  kBind = 11,       // could not bind a listening socket
  kDegenerate = 12, // statistically degenerate input
  kNotFound = 13,
  kConflict = 14,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace modsynth
