// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace augloop {

// Stable error classes shared by every module, the C API and the service
// envelopes. Numeric values are part of the public ABI; append only.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kIoError = 2,
  kImageUndecodable = 3,
  // call-parser
  kUnknownOperation = 10,
  kParamInvalid = 11,
  kSyntaxMalformed = 12,
  // augment-exec
  kOutOfBounds = 20,
  kDegenerateRegion = 21,
  kFactorOutOfRange = 22,
  kKernelInvalid = 23,
  kResolutionCapExceeded = 24,
  // agent-loop
  kBackendUnavailable = 30,
  // rewards / data-pipeline / eval
  kJudgeUnavailable = 40,
  kConfigInvalid = 41,
  kTemplateUnknown = 42,
  // grpo-signal
  kStructureInvalid = 50,
  kGroupTooSmall = 51,
  kLengthMismatch = 52,
  // service-api
  kBindFailure = 60,
  kUnauthorized = 61,
  kInternal = 99,
};

inline constexpr ErrorCode kAllErrorCodes[] = {
    ErrorCode::kOk,                 ErrorCode::kInvalidArgument,  ErrorCode::kIoError,
    ErrorCode::kImageUndecodable,   ErrorCode::kUnknownOperation, ErrorCode::kParamInvalid,
    ErrorCode::kSyntaxMalformed,    ErrorCode::kOutOfBounds,      ErrorCode::kDegenerateRegion,
    ErrorCode::kFactorOutOfRange,   ErrorCode::kKernelInvalid,    ErrorCode::kResolutionCapExceeded,
    ErrorCode::kBackendUnavailable, ErrorCode::kJudgeUnavailable, ErrorCode::kConfigInvalid,
    ErrorCode::kTemplateUnknown,    ErrorCode::kStructureInvalid, ErrorCode::kGroupTooSmall,
    ErrorCode::kLengthMismatch,     ErrorCode::kBindFailure,      ErrorCode::kUnauthorized,
    ErrorCode::kInternal};

std::string_view error_code_name(ErrorCode code) noexcept;
std::optional<ErrorCode> error_code_from_name(std::string_view name) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace augloop
