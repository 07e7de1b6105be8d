// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace augloop {

enum class OpKind { kCrop, kResizeUp, kResizeDown, kRotate, kFlip, kDenoise, kEdge };

inline constexpr OpKind kAllOpKinds[] = {OpKind::kCrop,   OpKind::kResizeUp, OpKind::kResizeDown,
                                         OpKind::kRotate, OpKind::kFlip,     OpKind::kDenoise,
                                         OpKind::kEdge};

std::string_view op_kind_name(OpKind kind) noexcept;
std::optional<OpKind> op_kind_from_name(std::string_view name) noexcept;

/// Positive rational kept in lowest terms.
class Rational {
 public:
  Rational() = default;
  /// Throws Error(kParamInvalid) unless num > 0 and den > 0.
  Rational(std::int64_t num, std::int64_t den);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend bool operator<(const Rational& a, const Rational& b) noexcept;

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 1;
};

struct CropParams {
  std::int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  friend bool operator==(const CropParams&, const CropParams&) = default;
};

struct ResizeParams {
  Rational factor;
  friend bool operator==(const ResizeParams&, const ResizeParams&) = default;
};

struct RotateParams {
  int degrees = 90;  // counter-clockwise; one of 90, 180, 270
  friend bool operator==(const RotateParams&, const RotateParams&) = default;
};

enum class FlipAxis { kHorizontal, kVertical };

struct FlipParams {
  FlipAxis axis = FlipAxis::kHorizontal;
  friend bool operator==(const FlipParams&, const FlipParams&) = default;
};

enum class DenoiseMethod { kGaussian, kMedian, kBilateral };

struct DenoiseParams {
  DenoiseMethod method = DenoiseMethod::kMedian;
  int kernel_size = 3;
  friend bool operator==(const DenoiseParams&, const DenoiseParams&) = default;
};

struct EdgeParams {
  friend bool operator==(const EdgeParams&, const EdgeParams&) = default;
};

using OpParams =
    std::variant<CropParams, ResizeParams, RotateParams, FlipParams, DenoiseParams, EdgeParams>;

/// One augmentation request. Construct through the factories so kind and
/// params always agree.
struct AugmentationOp {
  OpKind kind = OpKind::kEdge;
  OpParams params = EdgeParams{};

  static AugmentationOp crop(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1);
  static AugmentationOp resize_up(Rational factor);
  static AugmentationOp resize_down(Rational factor);
  static AugmentationOp rotate(int degrees);
  static AugmentationOp flip(FlipAxis axis);
  static AugmentationOp denoise(DenoiseMethod method, int kernel_size);
  static AugmentationOp edge();

  friend bool operator==(const AugmentationOp&, const AugmentationOp&) = default;
};

std::string_view flip_axis_name(FlipAxis axis) noexcept;
std::string_view denoise_method_name(DenoiseMethod method) noexcept;

/// Renders in the call grammar accepted by extract_call, e.g.
/// `image_path = denoise(image_path, method="gaussian", kernel_size=3)`.
std::string render_call(const AugmentationOp& op, std::string_view image_ref = "image_path",
                        std::optional<std::string_view> assign_to = "image_path");

/// Compact human-readable form used in logs and reports, e.g. `rotate(90)`.
std::string describe_op(const AugmentationOp& op);

}  // namespace augloop
