// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace augloop {

/// 8-bit row-major image, 1 (gray) or 3 (RGB) interleaved channels.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  /// Zero-filled image. Throws Error(kInvalidArgument) on bad geometry.
  ImageBuffer(int width, int height, int channels);
  ImageBuffer(int width, int height, int channels, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::int64_t pixel_count() const noexcept {
    return static_cast<std::int64_t>(width_) * height_;
  }
  bool empty() const noexcept { return pixels_.empty(); }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  std::uint8_t at(int x, int y, int c = 0) const noexcept {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) noexcept {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Hex SHA-256 over a fixed header (geometry) plus the raw pixels. Independent
// of any file encoding, so it identifies image content.
std::string content_hash(const ImageBuffer& image);

// PNG encoding is deterministic: zlib level 6, default filters, no text or
// time chunks.
std::vector<std::uint8_t> encode_png(const ImageBuffer& image);
ImageBuffer decode_png(std::span<const std::uint8_t> bytes);
ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes);
/// Sniffs PNG/JPEG magic bytes. Throws Error(kImageUndecodable).
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);

ImageBuffer load_image(const std::filesystem::path& path);
void save_png(const ImageBuffer& image, const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

ImageBuffer to_grayscale(const ImageBuffer& image);

}  // namespace augloop
