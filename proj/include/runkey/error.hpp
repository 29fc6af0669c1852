// Copyright 2026 The runkey Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace runkey {

/// Base of every error thrown by the library. `kind()` is a stable
/// machine-readable tag used by the CLI.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept = 0;
};

#define RUNKEY_DEFINE_ERROR(Name, tag)                        \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& what) : Error(what) {}   \
    const char* kind() const noexcept override { return tag; } \
  };

RUNKEY_DEFINE_ERROR(InvalidArgument, "invalid_argument")
RUNKEY_DEFINE_ERROR(InvalidDistribution, "invalid_distribution")
RUNKEY_DEFINE_ERROR(NotErgodic, "not_ergodic")
RUNKEY_DEFINE_ERROR(SymbolRangeError, "symbol_range")
RUNKEY_DEFINE_ERROR(LengthMismatch, "length_mismatch")
RUNKEY_DEFINE_ERROR(CapExceeded, "cap_exceeded")
RUNKEY_DEFINE_ERROR(NumericError, "numeric_error")
RUNKEY_DEFINE_ERROR(FormatError, "format_error")

#undef RUNKEY_DEFINE_ERROR

}  // namespace runkey
