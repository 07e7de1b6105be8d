// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "errors.hpp"
#include "image.hpp"
#include "ops.hpp"

namespace augloop {

struct AugmentConfig {
  std::int64_t max_pixels = 4'194'304;
  Rational min_factor{1, 8};
  Rational max_factor{8, 1};
  int max_kernel_size = 31;
};

/// Model-visible execution failure. `text` is re-injected verbatim inside an
/// output block, so it is part of the frozen error table (docs/errors.md).
struct ExecError {
  ErrorCode code = ErrorCode::kInternal;
  std::string text;
  friend bool operator==(const ExecError&, const ExecError&) = default;
};

struct ExecOutcome {
  std::variant<ImageBuffer, ExecError> result;
  AugmentationOp provenance;
  int source_generation = 0;

  bool ok() const noexcept { return std::holds_alternative<ImageBuffer>(result); }
  const ImageBuffer& image() const { return std::get<ImageBuffer>(result); }
  const ExecError& error() const { return std::get<ExecError>(result); }
};

/// Applies one augmentation to `image`. `original` is the highest-resolution
/// image that `image` is a pure rescaling of (pass `image` itself when there
/// is none); resize_up requests that land at or below its resolution are
/// served from it instead of interpolating `image`. Never throws for bad
/// parameters: every invalid request becomes an ExecError.
ExecOutcome apply_op(const ImageBuffer& image, const AugmentationOp& op,
                     const ImageBuffer& original, const AugmentConfig& config = {},
                     int source_generation = 0);

/// Scales both sides by `rate`, raised where needed so the shorter side
/// stays at least 28 px; the aspect ratio is kept. Images with a side
/// already at or below 28 px are returned unchanged. Throws
/// Error(kInvalidArgument) when rate is outside (0, 1].
ImageBuffer downsample_for_compression(const ImageBuffer& image, double rate);

/// Bilinear resampling with half-pixel centers in 11-bit fixed point.
ImageBuffer resample_bilinear(const ImageBuffer& image, int width, int height);

inline constexpr int kMinCompressedSide = 28;

}  // namespace augloop
