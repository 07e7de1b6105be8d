// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "errors.hpp"

namespace augloop {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kImageUndecodable: return "ImageUndecodable";
    case ErrorCode::kUnknownOperation: return "UnknownOperation";
    case ErrorCode::kParamInvalid: return "ParamInvalid";
    case ErrorCode::kSyntaxMalformed: return "SyntaxMalformed";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kDegenerateRegion: return "DegenerateRegion";
    case ErrorCode::kFactorOutOfRange: return "FactorOutOfRange";
    case ErrorCode::kKernelInvalid: return "KernelInvalid";
    case ErrorCode::kResolutionCapExceeded: return "ResolutionCapExceeded";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kJudgeUnavailable: return "JudgeUnavailable";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kTemplateUnknown: return "TemplateUnknown";
    case ErrorCode::kStructureInvalid: return "StructureInvalid";
    case ErrorCode::kGroupTooSmall: return "GroupTooSmall";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kBindFailure: return "BindFailure";
    case ErrorCode::kUnauthorized: return "Unauthorized";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

std::optional<ErrorCode> error_code_from_name(std::string_view name) noexcept {
  for (ErrorCode c : kAllErrorCodes) {
    if (error_code_name(c) == name) return c;
  }
  return std::nullopt;
}

}  // namespace augloop
