// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

// Uses only the public header and the shared library.

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "augloop/augloop.h"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

using Json = nlohmann::ordered_json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  augloop_string_free(s);
  return out;
}

struct Runtime {
  explicit Runtime(const char* config = nullptr) { status = augloop_runtime_new(config, &rt); }
  ~Runtime() { augloop_runtime_free(rt); }
  augloop_runtime* rt = nullptr;
  int status = 0;
};

augloop_image* gradient(int w, int h, int c) {
  std::vector<uint8_t> px(static_cast<std::size_t>(w * h * c));
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<uint8_t>(i * 7 + 3);
  augloop_image* img = nullptr;
  REQUIRE(augloop_image_from_pixels(w, h, c, px.data(), &img) == AUGLOOP_OK);
  return img;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(augloop_version()).size() > 0);
  CHECK(std::string(augloop_status_name(AUGLOOP_OK)) == "Ok");
  CHECK(std::string(augloop_status_name(AUGLOOP_OUT_OF_BOUNDS)) == "OutOfBounds");
  CHECK(std::string(augloop_status_name(AUGLOOP_UNAUTHORIZED)) == "Unauthorized");
  CHECK(std::string(augloop_status_name(12345)) == "Unknown");
}

TEST_CASE("runtime config") {
  Runtime d;
  REQUIRE(d.status == AUGLOOP_OK);
  char* out = nullptr;
  REQUIRE(augloop_runtime_config(d.rt, &out) == AUGLOOP_OK);
  const Json cfg = Json::parse(take(out));
  CHECK(cfg["judge"] == "rule");
  CHECK(cfg["episode"]["max_calls"] == 8);

  Runtime bad(R"({"nonsense": true})");
  CHECK(bad.status == AUGLOOP_CONFIG_INVALID);
  CHECK(bad.rt == nullptr);
  CHECK(std::string(augloop_last_error()).find("nonsense") != std::string::npos);

  Runtime broken("{not json");
  CHECK(broken.status == AUGLOOP_CONFIG_INVALID);
  CHECK(augloop_runtime_new(nullptr, nullptr) == AUGLOOP_INVALID_ARGUMENT);
}

TEST_CASE("image handles") {
  Runtime r;
  augloop_image* img = gradient(5, 3, 3);
  int w = 0, h = 0, c = 0;
  REQUIRE(augloop_image_info(img, &w, &h, &c) == AUGLOOP_OK);
  CHECK(w == 5);
  CHECK(h == 3);
  CHECK(c == 3);

  augloop_image* once = nullptr;
  augloop_image* twice = nullptr;
  REQUIRE(augloop_image_apply(r.rt, img, "rotate(img, 90)", nullptr, &once) == AUGLOOP_OK);
  augloop_image_info(once, &w, &h, &c);
  CHECK(w == 3);
  CHECK(h == 5);
  REQUIRE(augloop_image_apply(r.rt, once, "rotate(img, degrees=270)", nullptr, &twice) == AUGLOOP_OK);
  CHECK(std::memcmp(augloop_image_pixels(img), augloop_image_pixels(twice), 45) == 0);
  char a[65], b[65];
  augloop_image_sha256(img, a);
  augloop_image_sha256(twice, b);
  CHECK(std::string(a) == std::string(b));
  CHECK(std::strlen(a) == 64);

  augloop_image* none = nullptr;
  CHECK(augloop_image_apply(r.rt, img, "crop(img, 0, 0, 9, 9)", nullptr, &none) == AUGLOOP_OUT_OF_BOUNDS);
  CHECK(none == nullptr);
  CHECK(std::string(augloop_last_error()).find("exceeds image bounds") != std::string::npos);
  CHECK(augloop_image_apply(r.rt, img, "brighten(img)", nullptr, &none) == AUGLOOP_UNKNOWN_OPERATION);
  CHECK(augloop_image_apply(r.rt, img, "crop(img, 1", nullptr, &none) == AUGLOOP_SYNTAX_MALFORMED);

  const auto dir = std::filesystem::temp_directory_path() / "augloop-test-capi";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "img.png").string();
  REQUIRE(augloop_image_save_png(img, path.c_str()) == AUGLOOP_OK);
  augloop_image* loaded = nullptr;
  REQUIRE(augloop_image_load(path.c_str(), &loaded) == AUGLOOP_OK);
  CHECK(std::memcmp(augloop_image_pixels(img), augloop_image_pixels(loaded), 45) == 0);
  CHECK(augloop_image_load((dir / "missing.png").string().c_str(), &none) == AUGLOOP_IMAGE_UNDECODABLE);

  uint8_t px[4] = {0, 0, 0, 0};
  CHECK(augloop_image_from_pixels(2, 2, 2, px, &none) == AUGLOOP_INVALID_ARGUMENT);
  CHECK(augloop_image_from_pixels(0, 2, 1, px, &none) == AUGLOOP_INVALID_ARGUMENT);

  augloop_image_free(loaded);
  augloop_image_free(twice);
  augloop_image_free(once);
  augloop_image_free(img);
  augloop_image_free(nullptr);
}

TEST_CASE("json operations") {
  Runtime r;
  char* out = nullptr;
  const Json req = {{"image", {{"width", 1}, {"height", 1}, {"channels", 1}, {"png_b64", ""}}}, {"call", "edge(img)"}};
  const int st = augloop_call(r.rt, "augment", req.dump().c_str(), &out);
  CHECK(st != AUGLOOP_OK);
  CHECK(out == nullptr);
  CHECK(augloop_call(r.rt, "no_such_op", "{}", &out) == AUGLOOP_INVALID_ARGUMENT);
  CHECK(augloop_call(r.rt, "rewards", "{", &out) == AUGLOOP_INVALID_ARGUMENT);

  const Json batch = {{"traces", Json::array()}};
  REQUIRE(augloop_call(r.rt, "grpo_batch", batch.dump().c_str(), &out) == AUGLOOP_OK);
  const Json result = Json::parse(take(out));
  REQUIRE(result["records"].size() == 1);
  CHECK(result["records"][0]["traces"] == 0);
}

TEST_CASE("success reward") {
  double v = -1;
  REQUIRE(augloop_reward_suc(0.9, 5, 8, 2, &v) == AUGLOOP_OK);
  CHECK(v == 0.5);
  CHECK(augloop_reward_suc(1, 0, 2, 2, &v) == AUGLOOP_CONFIG_INVALID);
}

TEST_CASE("service lifecycle") {
  Runtime r(R"({"service": {"host": "127.0.0.1", "port": 0, "threads": 2}})");
  REQUIRE(r.status == AUGLOOP_OK);
  augloop_service* svc = nullptr;
  int port = 0;
  REQUIRE(augloop_service_start(r.rt, &svc, &port) == AUGLOOP_OK);
  CHECK(port > 0);
  httplib::Client c("127.0.0.1", port);
  const auto res = c.Get("/v1/health");
  REQUIRE(res);
  CHECK(Json::parse(res->body)["status"] == "ok");
  augloop_service_stop(svc);
  augloop_service_stop(nullptr);
}
