// Copyright 2026 The lateprot Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lateprot {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kZeroNormRow,
  kNonFinite,
  kEmptySet,
  kEmptyDatabase,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kDuplicateId,
  kParseError,
  kMissingLabel,
  kUnknownId,
  kIo,
  kTooShort,
  kSchemeMismatch,
  kNoRelevant,
  kTooFewGroups,
  kInsufficientPairs,
};

std::string_view to_string(ErrorCode code);

//! Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

//! Raised when a valid row normalizes to (near) zero length.
class ZeroNormRowError : public Error {
 public:
  ZeroNormRowError(std::size_t row, const std::string& where)
      : Error(ErrorCode::kZeroNormRow,
              where + ": row " + std::to_string(row) + " has zero norm"),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

//! Raised by the trainer when a step produces NaN/Inf.
class NonFiniteStepError : public Error {
 public:
  NonFiniteStepError(std::size_t step, const std::string& what)
      : Error(ErrorCode::kNonFinite,
              "step " + std::to_string(step) + ": " + what),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace lateprot
