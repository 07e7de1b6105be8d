// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "api_ops.hpp"
#include "doctest.h"
#include "httplib.h"
#include "service.hpp"
#include "test_support.hpp"

using namespace augloop;

namespace {

RuntimeConfig local_config(const std::string& token = "") {
  Json j = {{"service", {{"host", "127.0.0.1"}, {"port", 0}, {"threads", 2}, {"token", token}}}};
  return RuntimeConfig::from_json(j);
}

struct Running {
  explicit Running(RuntimeConfig rc) : service(std::move(rc)), port(service.start_background()) {}
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    return c;
  }
  Json post(const std::string& path, const Json& body, const std::string& token = "", int* status = nullptr) const {
    auto c = client();
    httplib::Headers h;
    if (!token.empty()) h.emplace("X-Augloop-Token", token);
    auto res = c.Post(path, h, body.dump(), "application/json");
    REQUIRE(res);
    if (status) *status = res->status;
    return Json::parse(res->body);
  }
  Service service;
  int port;
};

Json golden_trace(const std::string& name) {
  const auto bytes = read_file_bytes(testing::test_data("golden/" + name));
  return Json::parse(std::string(bytes.begin(), bytes.end()));
}

}  // namespace

TEST_CASE("runtime config") {
  const RuntimeConfig d = RuntimeConfig::from_json(nullptr);
  CHECK(d.judge == "rule");
  CHECK(d.episode.max_calls == 8);
  CHECK(d.batch.beta == 0.01);
  const RuntimeConfig rc = RuntimeConfig::from_json(Json::parse(R"({
    "workers": 3, "episode": {"max_calls": 4, "ops": ["crop", "resize"]},
    "rewards": {"weights": [1, 1, 1, 1, 1]}, "grpo": {"beta": 0.1, "normalization": "trajectory"}})"));
  CHECK(rc.workers == 3);
  CHECK(rc.batch.workers == 3);
  CHECK(rc.rewards.max_calls == 4);
  CHECK(rc.episode.vocabulary == OpVocabulary{OpKind::kCrop, OpKind::kResizeUp, OpKind::kResizeDown});
  CHECK(rc.rewards.vocabulary == rc.episode.vocabulary);
  CHECK(rc.batch.mode == NormMode::kTrajectory);
  CHECK(rc.rewards.weights.values[1] == 1.0);
  // Round trip through the printed form.
  CHECK(RuntimeConfig::from_json(rc.to_json()).to_json() == rc.to_json());

  for (const char* bad : {R"({"colour": 1})", R"({"episode": {"max_calls": "many"}})",
                          R"({"episode": {"ops": ["brighten"]}})", R"({"rewards": {"weights": [1, 2]}})",
                          R"({"grpo": {"normalization": "token"}})", R"({"service": {"port": 70000}})",
                          R"({"workers": 0})", R"({"episode": {"grace_calls": 9}})"}) {
    try {
      RuntimeConfig::from_json(Json::parse(bad));
      FAIL("accepted " << bad);
    } catch (const Error& e) {
      CHECK_MESSAGE(e.code() == ErrorCode::kConfigInvalid, bad);
    }
  }
  const Json masked = local_config("s3cret").to_json();
  CHECK(masked["service"]["token"] == "***");
}

TEST_CASE("health") {
  const ServiceReply r = handle_request(local_config(), "GET", "/v1/health", "", "");
  CHECK(r.status == 200);
  CHECK(r.body["status"] == "ok");
  CHECK(r.body["version"] == std::string(library_version()));
}

TEST_CASE("envelopes") {
  const RuntimeConfig rc = local_config("tok");
  const std::string body = R"({"id": "r1", "payload": {}})";
  ServiceReply r = handle_request(rc, "POST", "/v1/augment", body, "");
  CHECK(r.status == 401);
  CHECK(r.body["id"] == "r1");
  CHECK(r.body["ok"] == false);
  CHECK(r.body["error"]["code"] == "Unauthorized");
  CHECK(r.body["error"]["numeric"] == 61);

  r = handle_request(rc, "POST", "/v1/augment", body, "tok");
  CHECK(r.status == 400);
  CHECK(r.body["id"] == "r1");
  CHECK(r.body["error"]["code"] == "InvalidArgument");

  r = handle_request(rc, "POST", "/v1/nothing", body, "tok");
  CHECK(r.status == 404);
  CHECK(r.body["id"] == "r1");
  r = handle_request(rc, "GET", "/v1/augment", "", "tok");
  CHECK(r.status == 404);
  r = handle_request(rc, "POST", "/v1/augment", "{oops", "tok");
  CHECK(r.status == 400);
  CHECK(r.body["id"].is_null());
  r = handle_request(rc, "POST", "/v1/augment", R"({"id": 7})", "tok");
  CHECK(r.status == 400);
  CHECK(r.body["id"] == 7);

  RuntimeConfig small = rc;
  small.service.max_payload_bytes = 16;
  r = handle_request(small, "POST", "/v1/augment", body, "tok");
  CHECK(r.status == 413);
}

TEST_CASE("status mapping") {
  CHECK(http_status_for(ErrorCode::kUnauthorized) == 401);
  CHECK(http_status_for(ErrorCode::kBackendUnavailable) == 503);
  CHECK(http_status_for(ErrorCode::kJudgeUnavailable) == 503);
  CHECK(http_status_for(ErrorCode::kInternal) == 500);
  CHECK(http_status_for(ErrorCode::kParamInvalid) == 400);
  CHECK(http_status_for(ErrorCode::kOutOfBounds) == 400);
}

TEST_CASE("augment over the wire") {
  Running s(local_config());
  std::mt19937_64 gen(31);
  for (int i = 0; i < 10; ++i) {
    const ImageBuffer img = testing::random_image(gen);
    Json req = {{"id", i}, {"payload", {{"image", image_to_json(img)}, {"call", "flip(img)"}}}};
    const Json once = s.post("/v1/augment", req);
    REQUIRE(once["ok"] == true);
    CHECK(once["id"] == i);
    req["payload"]["image"] = once["result"]["image"];
    const Json twice = s.post("/v1/augment", req);
    REQUIRE(twice["ok"] == true);
    CHECK(image_from_json(twice["result"]["image"]) == img);
    CHECK(twice["result"]["sha256"] == content_hash(img));
    // Same bytes as the library.
    const ExecOutcome direct = apply_op(img, AugmentationOp::flip(FlipAxis::kHorizontal), img);
    CHECK(image_from_json(once["result"]["image"]) == direct.image());
  }
  int status = 0;
  const Json err = s.post("/v1/augment",
                          {{"id", "e"}, {"payload", {{"image", image_to_json(ImageBuffer(8, 8, 1))},
                                                     {"op", {{"name", "crop"}, {"params", {{"x0", 0}, {"y0", 0}, {"x1", 20}, {"y1", 4}}}}}}}},
                          "", &status);
  CHECK(status == 400);
  CHECK(err["error"]["code"] == "OutOfBounds");
  CHECK(err["error"]["numeric"] == 20);
  const Json bad_call = s.post("/v1/augment", {{"id", "e"}, {"payload", {{"image", image_to_json(ImageBuffer(8, 8, 1))}, {"call", "brighten(img)"}}}});
  CHECK(bad_call["error"]["code"] == "UnknownOperation");
}

TEST_CASE("rewards over the wire match the library") {
  Running s(local_config());
  RuleJudge judge;
  for (const char* name : {"loop_direct.json", "loop_one_call.json", "loop_invalid_op.json", "loop_forced.json"}) {
    const Json trace = golden_trace(name);
    const TraceRecord rec = trace_from_json(trace);
    const RewardBreakdown lib = score_trace(rec.trace, "42", judge);
    const Json wire = s.post("/v1/rewards", {{"id", name}, {"payload", {{"trace", trace}, {"ground_truth", "42"}}}});
    REQUIRE(wire["ok"] == true);
    const RewardBreakdown got = rewards_from_json(wire["result"]);
    CHECK(std::abs(got.total - lib.total) <= 1e-12);
    CHECK(std::abs(got.r_vqa - lib.r_vqa) <= 1e-12);
    CHECK(std::abs(got.r_fmt - lib.r_fmt) <= 1e-12);
    CHECK(std::abs(got.r_api - lib.r_api) <= 1e-12);
    CHECK(std::abs(got.r_suc - lib.r_suc) <= 1e-12);
    CHECK(std::abs(got.r_cst - lib.r_cst) <= 1e-12);
  }
}

TEST_CASE("grpo batch over the wire reproduces the golden batch") {
  Running s(local_config());
  const auto inputs = read_jsonl(testing::test_data("golden/grpo_input.jsonl"));
  const auto golden = read_jsonl(testing::test_data("golden/grpo_batch.jsonl"));
  const Json wire = s.post("/v1/grpo/batch", {{"id", 1}, {"payload", {{"traces", inputs}}}});
  REQUIRE(wire["ok"] == true);
  const Json& records = wire["result"]["records"];
  REQUIRE(records.size() == golden.size());
  for (std::size_t i = 0; i < golden.size(); ++i) CHECK(dump_compact(records[i]) == dump_compact(golden[i]));
}

TEST_CASE("episode over the wire") {
  Running s(local_config());
  std::mt19937_64 gen(2);
  const ImageBuffer img = testing::random_image(gen, 10, 6, 3);
  const Json payload = {{"image", image_to_json(img)},
                        {"question", "What?"},
                        {"trace_id", "w1"},
                        {"backend", {{"scripted", {"<code>image_path = rotate(image_path, 90)</code>", "<answer>4</answer>"}}}}};
  const Json wire = s.post("/v1/episode", {{"id", "ep"}, {"payload", payload}});
  REQUIRE(wire["ok"] == true);
  const TraceRecord rec = trace_from_json(wire["result"]["trace"]);
  ScriptedBackend backend({"<code>image_path = rotate(image_path, 90)</code>", "<answer>4</answer>"});
  const EpisodeTrace lib =
      run_episode(backend, EpisodeQuery{std::make_shared<const ImageBuffer>(img), "What?", nullptr}, EpisodeConfig{});
  CHECK(rec.trace.final_answer == "4");
  EpisodeTrace named = lib;
  named.trace_id = "w1";
  CHECK(trace_fingerprint(rec.trace) == trace_fingerprint(named));
  REQUIRE(rec.trace.history[3].attachments.at(0).image);
  CHECK(*rec.trace.history[3].attachments[0].image == *lib.history[3].attachments[0].image);

  // Server-side backends and paths stay off unless enabled.
  int status = 0;
  Json spec = payload;
  spec["backend"] = "oracle:/etc/passwd";
  CHECK(s.post("/v1/episode", {{"id", 2}, {"payload", spec}}, "", &status)["error"]["code"] == "Unauthorized");
  CHECK(status == 401);
  Json path = payload;
  path.erase("image");
  path["image_path"] = "/etc/hostname";
  CHECK(s.post("/v1/episode", {{"id", 3}, {"payload", path}})["error"]["code"] == "Unauthorized");
}

TEST_CASE("token and size cap on the socket") {
  RuntimeConfig rc = local_config("tok");
  rc.service.max_payload_bytes = 4096;
  Running s(rc);
  int status = 0;
  const Json denied = s.post("/v1/rewards", {{"id", "x"}, {"payload", Json::object()}}, "", &status);
  CHECK(status == 401);
  CHECK(denied["id"] == "x");
  auto c = s.client();
  const auto health = c.Get("/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  const std::string big = "{\"id\": 1, \"payload\": \"" + std::string(8192, 'a') + "\"}";
  httplib::Headers h{{"X-Augloop-Token", "tok"}};
  const auto res = c.Post("/v1/augment", h, big, "application/json");
  REQUIRE(res);
  CHECK(res->status == 413);
  CHECK(Json::parse(res->body)["ok"] == false);
}

TEST_CASE("concurrent requests") {
  Running s(local_config());
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      std::mt19937_64 gen(static_cast<std::uint64_t>(t));
      httplib::Client c("127.0.0.1", s.port);
      for (int i = 0; i < 5; ++i) {
        const ImageBuffer img = testing::random_image(gen);
        const Json req = {{"id", t * 100 + i}, {"payload", {{"image", image_to_json(img)}, {"call", "rotate(img, 180)"}}}};
        const auto res = c.Post("/v1/augment", req.dump(), "application/json");
        if (!res) continue;
        const Json body = Json::parse(res->body);
        const ExecOutcome direct = apply_op(img, AugmentationOp::rotate(180), img);
        if (body["id"] == t * 100 + i && image_from_json(body["result"]["image"]) == direct.image()) ++ok;
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(ok == 20);
}

TEST_CASE("bind failure") {
  Running first(local_config());
  RuntimeConfig rc = local_config();
  rc.service.port = first.port;
  Service second(rc);
  try {
    second.bind();
    FAIL("expected BindFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBindFailure);
  }
}
