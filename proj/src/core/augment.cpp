// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace augloop {

namespace {

constexpr int kFixBits = 11;
constexpr std::int64_t kFixOne = 1 << kFixBits;

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

std::string geometry(std::int64_t w, std::int64_t h) {
  return std::to_string(w) + "x" + std::to_string(h);
}

ExecError exec_error(ErrorCode code, std::string detail) {
  return {code, "error[" + std::string(error_code_name(code)) + "]: " + std::move(detail)};
}

std::string rational_text(const Rational& r) {
  return r.den() == 1 ? std::to_string(r.num())
                      : std::to_string(r.num()) + "/" + std::to_string(r.den());
}

// round(side * factor), half away from zero, in exact integer arithmetic.
std::int64_t scaled_side(std::int64_t side, const Rational& f) {
  const __int128 num = static_cast<__int128>(side) * f.num() * 2 + f.den();
  const __int128 v = num / (static_cast<__int128>(f.den()) * 2);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::min<__int128>(v, INT64_MAX)));
}

// Source coordinate for destination index `d` in fixed point, clamped to >= 0.
std::int64_t source_coord(int d, int src, int dst) {
  const std::int64_t num = (2 * static_cast<std::int64_t>(d) + 1) * src - dst;
  if (num <= 0) return 0;
  return num * kFixOne / (2 * static_cast<std::int64_t>(dst));
}

ImageBuffer flip_image(const ImageBuffer& in, FlipAxis axis) {
  ImageBuffer out(in.width(), in.height(), in.channels());
  const int w = in.width(), h = in.height(), c = in.channels();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = axis == FlipAxis::kHorizontal ? w - 1 - x : x;
      const int sy = axis == FlipAxis::kVertical ? h - 1 - y : y;
      for (int ch = 0; ch < c; ++ch) out.at(x, y, ch) = in.at(sx, sy, ch);
    }
  }
  return out;
}

// Counter-clockwise rotation by a multiple of 90 degrees.
ImageBuffer rotate_image(const ImageBuffer& in, int degrees) {
  const int w = in.width(), h = in.height(), c = in.channels();
  const bool swap = degrees == 90 || degrees == 270;
  ImageBuffer out(swap ? h : w, swap ? w : h, c);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      int sx = x, sy = y;
      switch (degrees) {
        case 90: sx = w - 1 - y; sy = x; break;
        case 180: sx = w - 1 - x; sy = h - 1 - y; break;
        case 270: sx = y; sy = h - 1 - x; break;
        default: break;
      }
      for (int ch = 0; ch < c; ++ch) out.at(x, y, ch) = in.at(sx, sy, ch);
    }
  }
  return out;
}

ImageBuffer crop_image(const ImageBuffer& in, const CropParams& p) {
  const int x0 = static_cast<int>(p.x0), y0 = static_cast<int>(p.y0);
  const int w = static_cast<int>(p.x1 - p.x0), h = static_cast<int>(p.y1 - p.y0);
  const int c = in.channels();
  ImageBuffer out(w, h, c);
  for (int y = 0; y < h; ++y) {
    const auto* src = &in.pixels()[(static_cast<std::size_t>(y0 + y) * in.width() + x0) * c];
    std::copy(src, src + static_cast<std::size_t>(w) * c, &out.pixels()[static_cast<std::size_t>(y) * w * c]);
  }
  return out;
}

ImageBuffer median_filter(const ImageBuffer& in, int k) {
  const int r = k / 2, w = in.width(), h = in.height(), c = in.channels();
  ImageBuffer out(w, h, c);
  std::vector<std::uint8_t> window(static_cast<std::size_t>(k) * k);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        std::size_t n = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = clampi(y + dy, 0, h - 1);
          for (int dx = -r; dx <= r; ++dx) {
            window[n++] = in.at(clampi(x + dx, 0, w - 1), yy, ch);
          }
        }
        auto mid = window.begin() + static_cast<std::ptrdiff_t>(n / 2);
        std::nth_element(window.begin(), mid, window.begin() + static_cast<std::ptrdiff_t>(n));
        out.at(x, y, ch) = *mid;
      }
    }
  }
  return out;
}

// Integer weights summing exactly to 2^14.
std::vector<std::int64_t> gaussian_weights(int k) {
  constexpr std::int64_t kScale = 1 << 14;
  const int r = k / 2;
  const double sigma = k / 6.0;
  std::vector<double> raw(static_cast<std::size_t>(k));
  double sum = 0;
  for (int i = -r; i <= r; ++i) {
    raw[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2 * sigma * sigma));
    sum += raw[static_cast<std::size_t>(i + r)];
  }
  std::vector<std::int64_t> w(static_cast<std::size_t>(k));
  std::int64_t total = 0;
  for (int i = 0; i < k; ++i) {
    w[static_cast<std::size_t>(i)] = std::llround(raw[static_cast<std::size_t>(i)] / sum * kScale);
    total += w[static_cast<std::size_t>(i)];
  }
  w[static_cast<std::size_t>(r)] += kScale - total;
  return w;
}

ImageBuffer gaussian_filter(const ImageBuffer& in, int k) {
  const int r = k / 2, w = in.width(), h = in.height(), c = in.channels();
  const auto weights = gaussian_weights(k);
  std::vector<std::int64_t> tmp(static_cast<std::size_t>(w) * h * c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        std::int64_t acc = 0;
        for (int i = -r; i <= r; ++i) {
          acc += weights[static_cast<std::size_t>(i + r)] * in.at(clampi(x + i, 0, w - 1), y, ch);
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * c + ch] = acc;
      }
    }
  }
  ImageBuffer out(w, h, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        std::int64_t acc = 0;
        for (int i = -r; i <= r; ++i) {
          const int yy = clampi(y + i, 0, h - 1);
          acc += weights[static_cast<std::size_t>(i + r)] * tmp[(static_cast<std::size_t>(yy) * w + x) * c + ch];
        }
        out.at(x, y, ch) = static_cast<std::uint8_t>((acc + (std::int64_t{1} << 27)) >> 28);
      }
    }
  }
  return out;
}

// Per-channel bilateral filter, sigma_color = 25, sigma_space = k / 2.
ImageBuffer bilateral_filter(const ImageBuffer& in, int k) {
  constexpr double kSigmaColor = 25.0;
  constexpr double kScale = 4096.0;
  const int r = k / 2, w = in.width(), h = in.height(), c = in.channels();
  const double sigma_space = k / 2.0;
  std::vector<std::int64_t> spatial(static_cast<std::size_t>(k) * k);
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      spatial[static_cast<std::size_t>((dy + r) * k + dx + r)] =
          std::llround(kScale * std::exp(-(dx * dx + dy * dy) / (2 * sigma_space * sigma_space)));
    }
  }
  std::int64_t range[256];
  for (int d = 0; d < 256; ++d) {
    range[d] = std::llround(kScale * std::exp(-(d * d) / (2 * kSigmaColor * kSigmaColor)));
  }
  ImageBuffer out(w, h, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        const int center = in.at(x, y, ch);
        std::int64_t acc = 0, wsum = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = clampi(y + dy, 0, h - 1);
          for (int dx = -r; dx <= r; ++dx) {
            const int v = in.at(clampi(x + dx, 0, w - 1), yy, ch);
            const std::int64_t wt = spatial[static_cast<std::size_t>((dy + r) * k + dx + r)] *
                                    range[std::abs(v - center)];
            acc += wt * v;
            wsum += wt;
          }
        }
        out.at(x, y, ch) = static_cast<std::uint8_t>((acc + wsum / 2) / wsum);
      }
    }
  }
  return out;
}

std::int64_t isqrt(std::int64_t v) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

// 3x3 Sobel gradient magnitude on the luma plane, stretched so the strongest
// edge maps to 255.
ImageBuffer sobel_edges(const ImageBuffer& color) {
  const ImageBuffer in = to_grayscale(color);
  const int w = in.width(), h = in.height();
  std::vector<std::int64_t> mag(static_cast<std::size_t>(w) * h);
  std::int64_t peak = 0;
  auto px = [&](int x, int y) -> int { return in.at(clampi(x, 0, w - 1), clampi(y, 0, h - 1)); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                     (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const int gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                     (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      const std::int64_t m = isqrt(static_cast<std::int64_t>(gx) * gx + static_cast<std::int64_t>(gy) * gy);
      mag[static_cast<std::size_t>(y) * w + x] = m;
      peak = std::max(peak, m);
    }
  }
  ImageBuffer out(w, h, 1);
  if (peak == 0) return out;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    out.pixels()[i] = static_cast<std::uint8_t>((mag[i] * 255 + peak / 2) / peak);
  }
  return out;
}

bool within_one(std::int64_t a, std::int64_t b) { return std::llabs(a - b) <= 1; }

}  // namespace

ImageBuffer resample_bilinear(const ImageBuffer& in, int width, int height) {
  if (width == in.width() && height == in.height()) return in;
  const int sw = in.width(), sh = in.height(), c = in.channels();
  ImageBuffer out(width, height, c);
  std::vector<int> x0s(static_cast<std::size_t>(width)), x1s(x0s.size());
  std::vector<std::int64_t> fxs(x0s.size());
  for (int x = 0; x < width; ++x) {
    const std::int64_t p = source_coord(x, sw, width);
    const int x0 = std::min(static_cast<int>(p >> kFixBits), sw - 1);
    x0s[static_cast<std::size_t>(x)] = x0;
    x1s[static_cast<std::size_t>(x)] = std::min(x0 + 1, sw - 1);
    fxs[static_cast<std::size_t>(x)] = x0 == sw - 1 ? 0 : (p & (kFixOne - 1));
  }
  for (int y = 0; y < height; ++y) {
    const std::int64_t q = source_coord(y, sh, height);
    const int y0 = std::min(static_cast<int>(q >> kFixBits), sh - 1);
    const int y1 = std::min(y0 + 1, sh - 1);
    const std::int64_t fy = y0 == sh - 1 ? 0 : (q & (kFixOne - 1));
    for (int x = 0; x < width; ++x) {
      const auto xi = static_cast<std::size_t>(x);
      const std::int64_t fx = fxs[xi];
      for (int ch = 0; ch < c; ++ch) {
        const std::int64_t a = in.at(x0s[xi], y0, ch), b = in.at(x1s[xi], y0, ch);
        const std::int64_t d = in.at(x0s[xi], y1, ch), e = in.at(x1s[xi], y1, ch);
        const std::int64_t v = a * (kFixOne - fx) * (kFixOne - fy) + b * fx * (kFixOne - fy) +
                               d * (kFixOne - fx) * fy + e * fx * fy;
        out.at(x, y, ch) = static_cast<std::uint8_t>((v + (std::int64_t{1} << (2 * kFixBits - 1))) >> (2 * kFixBits));
      }
    }
  }
  return out;
}

ExecOutcome apply_op(const ImageBuffer& image, const AugmentationOp& op, const ImageBuffer& original,
                     const AugmentConfig& config, int source_generation) {
  ExecOutcome outcome{ExecError{}, op, source_generation};
  auto fail = [&](ErrorCode code, std::string detail) {
    outcome.result = exec_error(code, std::move(detail));
    return outcome;
  };
  auto check_budget = [&](std::int64_t w, std::int64_t h) {
    return w * h <= config.max_pixels;
  };
  if (image.empty()) return fail(ErrorCode::kInvalidArgument, "no image is available");
  const std::int64_t w = image.width(), h = image.height();

  switch (op.kind) {
    case OpKind::kCrop: {
      const auto* p = std::get_if<CropParams>(&op.params);
      if (!p) return fail(ErrorCode::kParamInvalid, "crop expects x0, y0, x1, y1");
      const std::string box = "(" + std::to_string(p->x0) + ", " + std::to_string(p->y0) + ", " +
                              std::to_string(p->x1) + ", " + std::to_string(p->y1) + ")";
      if (p->x0 < 0 || p->y0 < 0 || p->x1 < 0 || p->y1 < 0 || p->x0 > w || p->x1 > w ||
          p->y0 > h || p->y1 > h) {
        return fail(ErrorCode::kOutOfBounds,
                    "crop box " + box + " exceeds image bounds " + geometry(w, h));
      }
      if (p->x0 >= p->x1 || p->y0 >= p->y1) {
        return fail(ErrorCode::kDegenerateRegion, "crop box " + box + " has zero area");
      }
      outcome.result = crop_image(image, *p);
      return outcome;
    }
    case OpKind::kResizeUp:
    case OpKind::kResizeDown: {
      const auto* p = std::get_if<ResizeParams>(&op.params);
      if (!p) return fail(ErrorCode::kParamInvalid, "resize expects a factor");
      const bool up = op.kind == OpKind::kResizeUp;
      if (up ? p->factor < Rational(1, 1) : Rational(1, 1) < p->factor) {
        return fail(ErrorCode::kParamInvalid, std::string(op_kind_name(op.kind)) + " factor " +
                                                  rational_text(p->factor) + " must be " +
                                                  (up ? ">= 1" : "<= 1"));
      }
      if (p->factor < config.min_factor || config.max_factor < p->factor) {
        return fail(ErrorCode::kFactorOutOfRange,
                    "resize factor " + rational_text(p->factor) + " outside [" +
                        rational_text(config.min_factor) + ", " + rational_text(config.max_factor) + "]");
      }
      const std::int64_t tw = scaled_side(w, p->factor), th = scaled_side(h, p->factor);
      if (!check_budget(tw, th) || tw > 65535 || th > 65535) {
        return fail(ErrorCode::kResolutionCapExceeded,
                    "result " + geometry(tw, th) + " exceeds the pixel budget of " +
                        std::to_string(config.max_pixels));
      }
      const bool recall_source = up && !original.empty() && original.channels() == image.channels() &&
                                 (original.width() > w || original.height() > h);
      if (recall_source) {
        if (within_one(tw, original.width()) && within_one(th, original.height())) {
          outcome.result = original;
          return outcome;
        }
        if (tw <= original.width() && th <= original.height()) {
          outcome.result = resample_bilinear(original, static_cast<int>(tw), static_cast<int>(th));
          return outcome;
        }
      }
      outcome.result = resample_bilinear(image, static_cast<int>(tw), static_cast<int>(th));
      return outcome;
    }
    case OpKind::kRotate: {
      const auto* p = std::get_if<RotateParams>(&op.params);
      if (!p || (p->degrees != 90 && p->degrees != 180 && p->degrees != 270)) {
        return fail(ErrorCode::kParamInvalid, "rotate degrees must be one of 90, 180, 270");
      }
      outcome.result = rotate_image(image, p->degrees);
      return outcome;
    }
    case OpKind::kFlip: {
      const auto* p = std::get_if<FlipParams>(&op.params);
      if (!p) return fail(ErrorCode::kParamInvalid, "flip expects an axis");
      outcome.result = flip_image(image, p->axis);
      return outcome;
    }
    case OpKind::kDenoise: {
      const auto* p = std::get_if<DenoiseParams>(&op.params);
      if (!p) return fail(ErrorCode::kParamInvalid, "denoise expects method and kernel_size");
      if (p->kernel_size < 3 || p->kernel_size % 2 == 0 || p->kernel_size > config.max_kernel_size) {
        return fail(ErrorCode::kKernelInvalid,
                    "kernel_size " + std::to_string(p->kernel_size) + " must be an odd integer in [3, " +
                        std::to_string(config.max_kernel_size) + "]");
      }
      switch (p->method) {
        case DenoiseMethod::kMedian: outcome.result = median_filter(image, p->kernel_size); break;
        case DenoiseMethod::kGaussian: outcome.result = gaussian_filter(image, p->kernel_size); break;
        case DenoiseMethod::kBilateral: outcome.result = bilateral_filter(image, p->kernel_size); break;
      }
      return outcome;
    }
    case OpKind::kEdge:
      outcome.result = sobel_edges(image);
      return outcome;
  }
  return fail(ErrorCode::kInternal, "unhandled operation");
}

ImageBuffer downsample_for_compression(const ImageBuffer& image, double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "compression rate must be in (0, 1]");
  }
  if (image.width() <= kMinCompressedSide || image.height() <= kMinCompressedSide) return image;
  // One scale for both sides so the aspect ratio survives the size floor.
  const double floor_scale =
      static_cast<double>(kMinCompressedSide) / static_cast<double>(std::min(image.width(), image.height()));
  const double scale = std::max(rate, floor_scale);
  const int tw = std::max<int>(kMinCompressedSide, static_cast<int>(std::lround(image.width() * scale)));
  const int th = std::max<int>(kMinCompressedSide, static_cast<int>(std::lround(image.height() * scale)));
  return resample_bilinear(image, tw, th);
}

}  // namespace augloop
