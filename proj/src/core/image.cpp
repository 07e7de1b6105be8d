// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "image.hpp"

#include <openssl/evp.h>
#include <png.h>
// jpeglib.h needs stdio/size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <csetjmp>
#include <fstream>
#include <iterator>

#include "errors.hpp"

namespace augloop {

namespace {

void check_geometry(int width, int height, int channels) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be >= 1");
  }
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kInvalidArgument, "image channels must be 1 or 3");
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels)
    : width_(width), height_(height), channels_(channels) {
  check_geometry(width, height, channels);
  pixels_.assign(static_cast<std::size_t>(width) * height * channels, 0);
}

ImageBuffer::ImageBuffer(int width, int height, int channels,
                         std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
  check_geometry(width, height, channels);
  if (pixels_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorCode::kInvalidArgument, "pixel buffer length != width*height*channels");
  }
}

std::string content_hash(const ImageBuffer& image) {
  auto put_u32 = [](std::uint8_t* out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
  };
  std::uint8_t header[16] = {'a', 'u', 'g', '1'};
  put_u32(header + 4, static_cast<std::uint32_t>(image.width()));
  put_u32(header + 8, static_cast<std::uint32_t>(image.height()));
  put_u32(header + 12, static_cast<std::uint32_t>(image.channels()));

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, header, sizeof(header));
  EVP_DigestUpdate(ctx, image.pixels().data(), image.pixels().size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);

  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
  if (image.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot encode empty image");
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(image.width());
  desc.height = static_cast<png_uint_32>(image.height());
  desc.format = image.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(desc, size, 0, image.pixels().data(), 0, nullptr)) {
    std::string msg = desc.message;
    png_image_free(&desc);
    throw Error(ErrorCode::kIoError, "png size query failed: " + msg);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, image.pixels().data(), 0,
                                 nullptr)) {
    std::string msg = desc.message;
    png_image_free(&desc);
    throw Error(ErrorCode::kIoError, "png encode failed: " + msg);
  }
  out.resize(size);
  return out;
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::kImageUndecodable, std::string("png: ") + desc.message);
  }
  const bool color = (desc.format & PNG_FORMAT_FLAG_COLOR) != 0;
  desc.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  if (desc.width < 1 || desc.height < 1 || desc.width > 65535 || desc.height > 65535) {
    png_image_free(&desc);
    throw Error(ErrorCode::kImageUndecodable, "png: unsupported dimensions");
  }
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(desc));
  if (!png_image_finish_read(&desc, nullptr, pixels.data(), 0, nullptr)) {
    std::string msg = desc.message;
    png_image_free(&desc);
    throw Error(ErrorCode::kImageUndecodable, "png: " + msg);
  }
  return ImageBuffer(static_cast<int>(desc.width), static_cast<int>(desc.height), channels,
                     std::move(pixels));
}

namespace {

struct JpegErrorMgr {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

}  // namespace

ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorMgr err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> pixels;
  int width = 0, height = 0, channels = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::kImageUndecodable, std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  channels = cinfo.output_components;
  pixels.resize(static_cast<std::size_t>(width) * height * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return ImageBuffer(width, height, channels, std::move(pixels));
}

ImageBuffer decode_image(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::equal(kPng, kPng + 4, bytes.begin())) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return decode_jpeg(bytes);
  }
  throw Error(ErrorCode::kImageUndecodable, "unrecognized image format (expected PNG or JPEG)");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

ImageBuffer load_image(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kImageUndecodable, e.what());
  }
  return decode_image(bytes);
}

void save_png(const ImageBuffer& image, const std::filesystem::path& path) {
  write_file_bytes(path, encode_png(image));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw Error(ErrorCode::kInvalidArgument, "base64 length not a multiple of 4");
  std::vector<std::uint8_t> out(clean.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw Error(ErrorCode::kInvalidArgument, "invalid base64");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock counts '=' padding as zero bytes.
  if (!clean.empty() && clean.back() == '=') --len;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

ImageBuffer to_grayscale(const ImageBuffer& image) {
  if (image.channels() == 1) return image;
  ImageBuffer out(image.width(), image.height(), 1);
  auto src = image.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const unsigned r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
  }
  return out;
}

}  // namespace augloop
