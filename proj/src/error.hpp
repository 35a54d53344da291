/*
 *   Copyright 2026 MCBM Authors
 *
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace mcbm {

/// Error categories carried by mcbm::Error. Values are stable: the C API
/// exposes them verbatim as status codes (MCBM_E_*).
enum class ErrorCode : int {
  spec = 1,      ///< parameter outside its documented domain
  parse = 2,     ///< malformed input file
  shape = 3,     ///< dimension mismatch between inputs
  level = 4,     ///< nesting level not supported by the model
  capacity = 5,  ///< exact enumeration would exceed the supported size
  diverged = 6,  ///< training produced a non-finite loss
  io = 7,        ///< file could not be read or written
  fit = 8,       ///< not enough data to fit
  internal = 9,  ///< invariant broken inside the library
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::spec: return "spec_error";
    case ErrorCode::parse: return "parse_error";
    case ErrorCode::shape: return "shape_error";
    case ErrorCode::level: return "unsupported_level";
    case ErrorCode::capacity: return "capacity_error";
    case ErrorCode::diverged: return "training_diverged";
    case ErrorCode::io: return "io_error";
    case ErrorCode::fit: return "fit_error";
    case ErrorCode::internal: return "internal_error";
  }
  return "unknown_error";
}

}  // namespace mcbm
