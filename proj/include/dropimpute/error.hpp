/*
 * Copyright 2026 The dropimpute Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DROPIMPUTE_ERROR_HPP
#define DROPIMPUTE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace dropimpute {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  SingleClass,
  Unachievable,
  DegenerateInput,
  SingleCluster,
  EmptyTrainingSet,
  StratumTooSmall,
  EmptyArm,
  TruthUnavailable,
  ZeroControlMean,
  InsufficientSamples,
  InvalidData,
  Schema,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::SingleClass: return "SINGLE_CLASS";
    case ErrorCode::Unachievable: return "UNACHIEVABLE";
    case ErrorCode::DegenerateInput: return "DEGENERATE_INPUT";
    case ErrorCode::SingleCluster: return "SINGLE_CLUSTER";
    case ErrorCode::EmptyTrainingSet: return "EMPTY_TRAINING_SET";
    case ErrorCode::StratumTooSmall: return "STRATUM_TOO_SMALL";
    case ErrorCode::EmptyArm: return "EMPTY_ARM";
    case ErrorCode::TruthUnavailable: return "TRUTH_UNAVAILABLE";
    case ErrorCode::ZeroControlMean: return "ZERO_CONTROL_MEAN";
    case ErrorCode::InsufficientSamples: return "INSUFFICIENT_SAMPLES";
    case ErrorCode::InvalidData: return "INVALID_DATA";
    case ErrorCode::Schema: return "SCHEMA";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

/// Exception carrying a machine-readable code alongside the message.
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

}  // namespace dropimpute

#endif  // DROPIMPUTE_ERROR_HPP
