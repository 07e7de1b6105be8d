// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "ops.hpp"

#include <numeric>

#include "errors.hpp"

namespace augloop {

std::string_view op_kind_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::kCrop: return "crop";
    case OpKind::kResizeUp: return "resize_up";
    case OpKind::kResizeDown: return "resize_down";
    case OpKind::kRotate: return "rotate";
    case OpKind::kFlip: return "flip";
    case OpKind::kDenoise: return "denoise";
    case OpKind::kEdge: return "edge";
  }
  return "?";
}

std::optional<OpKind> op_kind_from_name(std::string_view name) noexcept {
  for (OpKind k : kAllOpKinds) {
    if (op_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (num <= 0 || den <= 0) {
    throw Error(ErrorCode::kParamInvalid, "rational must be positive");
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

bool operator<(const Rational& a, const Rational& b) noexcept {
  return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
}

AugmentationOp AugmentationOp::crop(std::int64_t x0, std::int64_t y0, std::int64_t x1,
                                    std::int64_t y1) {
  return {OpKind::kCrop, CropParams{x0, y0, x1, y1}};
}
AugmentationOp AugmentationOp::resize_up(Rational factor) {
  return {OpKind::kResizeUp, ResizeParams{factor}};
}
AugmentationOp AugmentationOp::resize_down(Rational factor) {
  return {OpKind::kResizeDown, ResizeParams{factor}};
}
AugmentationOp AugmentationOp::rotate(int degrees) {
  return {OpKind::kRotate, RotateParams{degrees}};
}
AugmentationOp AugmentationOp::flip(FlipAxis axis) { return {OpKind::kFlip, FlipParams{axis}}; }
AugmentationOp AugmentationOp::denoise(DenoiseMethod method, int kernel_size) {
  return {OpKind::kDenoise, DenoiseParams{method, kernel_size}};
}
AugmentationOp AugmentationOp::edge() { return {OpKind::kEdge, EdgeParams{}}; }

std::string_view flip_axis_name(FlipAxis axis) noexcept {
  return axis == FlipAxis::kHorizontal ? "horizontal" : "vertical";
}

std::string_view denoise_method_name(DenoiseMethod method) noexcept {
  switch (method) {
    case DenoiseMethod::kGaussian: return "gaussian";
    case DenoiseMethod::kMedian: return "median";
    case DenoiseMethod::kBilateral: return "bilateral";
  }
  return "?";
}

namespace {

std::string rational_literal(const Rational& r) {
  if (r.den() == 1) return std::to_string(r.num());
  return std::to_string(r.num()) + "/" + std::to_string(r.den());
}

std::string argument_list(const AugmentationOp& op) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CropParams>) {
          return std::to_string(p.x0) + ", " + std::to_string(p.y0) + ", " +
                 std::to_string(p.x1) + ", " + std::to_string(p.y1);
        } else if constexpr (std::is_same_v<T, ResizeParams>) {
          return "factor=" + rational_literal(p.factor);
        } else if constexpr (std::is_same_v<T, RotateParams>) {
          return "degrees=" + std::to_string(p.degrees);
        } else if constexpr (std::is_same_v<T, FlipParams>) {
          return "axis=\"" + std::string(flip_axis_name(p.axis)) + "\"";
        } else if constexpr (std::is_same_v<T, DenoiseParams>) {
          return "method=\"" + std::string(denoise_method_name(p.method)) +
                 "\", kernel_size=" + std::to_string(p.kernel_size);
        } else {
          return {};
        }
      },
      op.params);
}

}  // namespace

std::string render_call(const AugmentationOp& op, std::string_view image_ref,
                        std::optional<std::string_view> assign_to) {
  std::string out;
  if (assign_to) {
    out.append(*assign_to);
    out.append(" = ");
  }
  out.append(op_kind_name(op.kind));
  out.push_back('(');
  out.append(image_ref);
  const std::string args = argument_list(op);
  if (!args.empty()) {
    out.append(", ");
    out.append(args);
  }
  out.push_back(')');
  return out;
}

std::string describe_op(const AugmentationOp& op) {
  std::string out(op_kind_name(op.kind));
  out.push_back('(');
  out.append(argument_list(op));
  out.push_back(')');
  return out;
}

}  // namespace augloop
