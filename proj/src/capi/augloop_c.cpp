// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "augloop/augloop.h"

#include <cstring>
#include <new>
#include <string>

#include "api_ops.hpp"
#include "service.hpp"

using augloop::Error;
using augloop::ErrorCode;

struct augloop_runtime {
  augloop::RuntimeConfig config;
};
struct augloop_image {
  augloop::ImageBuffer buffer;
};
struct augloop_service {
  std::unique_ptr<augloop::Service> service;
};

static_assert(AUGLOOP_OUT_OF_BOUNDS == static_cast<int>(ErrorCode::kOutOfBounds));
static_assert(AUGLOOP_LENGTH_MISMATCH == static_cast<int>(ErrorCode::kLengthMismatch));
static_assert(AUGLOOP_UNAUTHORIZED == static_cast<int>(ErrorCode::kUnauthorized));
static_assert(AUGLOOP_INTERNAL == static_cast<int>(ErrorCode::kInternal));

namespace {

thread_local std::string g_last_error;

int fail(ErrorCode code, const std::string& msg) {
  g_last_error = msg;
  return static_cast<int>(code);
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return AUGLOOP_OK;
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(ErrorCode::kInvalidArgument, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ErrorCode::kInternal, "out of memory");
  } catch (const std::exception& e) {
    return fail(ErrorCode::kInternal, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void require(bool cond, const char* what) {
  if (!cond) throw Error(ErrorCode::kInvalidArgument, what);
}

}  // namespace

extern "C" {

const char* augloop_version(void) { return AUGLOOP_VERSION_STRING; }

const char* augloop_status_name(int status) {
  for (ErrorCode c : augloop::kAllErrorCodes) {
    // Names are string literals, so data() is NUL-terminated.
    if (static_cast<int>(c) == status) return augloop::error_code_name(c).data();
  }
  return "Unknown";
}

const char* augloop_last_error(void) { return g_last_error.c_str(); }

void augloop_string_free(char* s) { std::free(s); }

int augloop_runtime_new(const char* config_json, augloop_runtime** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = nullptr;
    augloop::Json j = nullptr;
    if (config_json && *config_json) {
      try {
        j = augloop::Json::parse(config_json);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kConfigInvalid, std::string("config is not JSON: ") + e.what());
      }
    }
    *out = new augloop_runtime{augloop::RuntimeConfig::from_json(j)};
  });
}

void augloop_runtime_free(augloop_runtime* rt) { delete rt; }

int augloop_runtime_config(const augloop_runtime* rt, char** out_json) {
  return guarded([&] {
    require(rt && out_json, "null argument");
    *out_json = dup_string(rt->config.to_json().dump(2));
  });
}

int augloop_call(augloop_runtime* rt, const char* op, const char* request_json, char** out_json) {
  return guarded([&] {
    require(rt && op && out_json, "null argument");
    *out_json = nullptr;
    const augloop::Json req =
        request_json && *request_json ? augloop::Json::parse(request_json) : augloop::Json::object();
    *out_json = dup_string(augloop::dump_compact(augloop::dispatch_op(rt->config, op, req)));
  });
}

int augloop_serve(augloop_runtime* rt) {
  return guarded([&] {
    require(rt != nullptr, "null runtime");
    augloop::Service svc(rt->config);
    svc.run();
  });
}

int augloop_service_start(augloop_runtime* rt, augloop_service** out, int* port) {
  return guarded([&] {
    require(rt && out, "null argument");
    auto svc = std::make_unique<augloop_service>();
    svc->service = std::make_unique<augloop::Service>(rt->config);
    const int p = svc->service->start_background();
    if (port) *port = p;
    *out = svc.release();
  });
}

void augloop_service_stop(augloop_service* svc) { delete svc; }

int augloop_image_load(const char* path, augloop_image** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new augloop_image{augloop::load_image(path)};
  });
}

int augloop_image_from_pixels(int width, int height, int channels, const uint8_t* pixels, augloop_image** out) {
  return guarded([&] {
    require(pixels && out, "null argument");
    augloop::ImageBuffer img(width, height, channels);
    std::memcpy(img.pixels().data(), pixels, img.pixels().size());
    *out = new augloop_image{std::move(img)};
  });
}

void augloop_image_free(augloop_image* img) { delete img; }

int augloop_image_info(const augloop_image* img, int* width, int* height, int* channels) {
  return guarded([&] {
    require(img != nullptr, "null image");
    if (width) *width = img->buffer.width();
    if (height) *height = img->buffer.height();
    if (channels) *channels = img->buffer.channels();
  });
}

const uint8_t* augloop_image_pixels(const augloop_image* img) {
  return img ? img->buffer.pixels().data() : nullptr;
}

int augloop_image_save_png(const augloop_image* img, const char* path) {
  return guarded([&] {
    require(img && path, "null argument");
    augloop::save_png(img->buffer, path);
  });
}

int augloop_image_sha256(const augloop_image* img, char out[65]) {
  return guarded([&] {
    require(img && out, "null argument");
    const std::string h = augloop::content_hash(img->buffer);
    std::memcpy(out, h.c_str(), 65);
  });
}

int augloop_image_apply(const augloop_runtime* rt, const augloop_image* img, const char* call_text,
                        const augloop_image* original, augloop_image** out) {
  return guarded([&] {
    require(rt && img && call_text && out, "null argument");
    *out = nullptr;
    const auto parsed = augloop::extract_call(call_text, rt->config.episode.vocabulary);
    if (const auto* err = std::get_if<augloop::CallError>(&parsed)) throw Error(err->code, err->text);
    const auto outcome = augloop::apply_op(img->buffer, std::get<augloop::ParsedCall>(parsed).op,
                                           original ? original->buffer : img->buffer, rt->config.episode.augment);
    if (!outcome.ok()) throw Error(outcome.error().code, outcome.error().text);
    *out = new augloop_image{outcome.image()};
  });
}

int augloop_reward_suc(double r_vqa, int k, int max_calls, int grace_calls, double* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = augloop::reward_suc(r_vqa, k, max_calls, grace_calls);
  });
}

}  // extern "C"
