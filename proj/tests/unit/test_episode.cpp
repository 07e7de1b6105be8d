// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>

#include "doctest.h"
#include "episode.hpp"
#include "test_support.hpp"
#include "trace_io.hpp"

using namespace augloop;

namespace {

std::shared_ptr<const ImageBuffer> query_image() {
  ImageBuffer img(8, 6, 3);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(x * 30 + y * 7 + c * 50);
  return std::make_shared<const ImageBuffer>(std::move(img));
}

EpisodeTrace play(std::vector<std::string> spans, EpisodeConfig cfg = {}) {
  ScriptedBackend backend(std::move(spans));
  return run_episode(backend, EpisodeQuery{query_image(), "What is shown?", nullptr}, cfg);
}

std::string golden_text(const EpisodeTrace& t) {
  TraceRecord r;
  r.item_id = "golden";
  r.trace = t;
  return trace_to_json(r, ImageStore{std::nullopt, false}).dump(2) + "\n";
}

// Compares against tests/golden/<name>; AUGLOOP_UPDATE_GOLDEN=1 rewrites it.
void check_golden(const std::string& name, const std::string& text) {
  const auto path = testing::test_data("golden/" + name);
  if (std::getenv("AUGLOOP_UPDATE_GOLDEN")) {
    write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
  }
  REQUIRE_MESSAGE(std::filesystem::exists(path), "missing golden file " << path.string());
  const auto bytes = read_file_bytes(path);
  CHECK(std::string(bytes.begin(), bytes.end()) == text);
}

std::size_t count(const std::string& hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

void check_invariants(const EpisodeTrace& t, const EpisodeConfig& cfg) {
  const std::string rendered = render_history(t.history);
  CHECK(static_cast<std::size_t>(t.k) == t.calls.size());
  CHECK(count(assistant_text(t.history), "</code>") == t.calls.size());
  int executed = 0;
  for (const auto& c : t.calls) executed += c.status == CallStatus::kExecuted;
  CHECK(executed <= cfg.max_calls);
  if (t.terminated_by == Termination::kForced) CHECK(rendered.find(kForcedAnswerMessage) != std::string::npos);
  // Every tool message follows an assistant message with one code block.
  for (std::size_t i = 0; i < t.history.size(); ++i) {
    if (t.history[i].role != Role::kToolOutput) continue;
    REQUIRE(i > 0);
    CHECK(t.history[i - 1].role == Role::kAssistant);
    CHECK(count(t.history[i - 1].text, "</code>") == 1);
  }
}

const std::string kDirect = "<think>The digits are plain.</think><answer>42</answer>";
const std::string kCall = "<think>It is sideways.</think><code>image_path = rotate(image_path, degrees=90)</code>";
const std::string kAnswer = "<think>Now it reads 42.</think><answer>42</answer>";

}  // namespace

TEST_CASE("direct answer") {
  const EpisodeConfig cfg;
  const EpisodeTrace t = play({kDirect}, cfg);
  CHECK(t.k == 0);
  CHECK(t.terminated_by == Termination::kAnswer);
  CHECK(t.final_answer == "42");
  REQUIRE(t.history.size() == 3);
  CHECK(t.history[0].role == Role::kSystem);
  CHECK(t.history[1].role == Role::kUser);
  CHECK(t.history[1].attachments.size() == 1);
  CHECK(t.history[1].attachments[0].generation == 0);
  check_invariants(t, cfg);
  check_golden("loop_direct.json", golden_text(t));
}

TEST_CASE("one valid call") {
  const EpisodeConfig cfg;
  const EpisodeTrace t = play({kCall, kAnswer}, cfg);
  CHECK(t.k == 1);
  CHECK(t.terminated_by == Termination::kAnswer);
  REQUIRE(t.calls.size() == 1);
  CHECK(t.calls[0].status == CallStatus::kExecuted);
  CHECK(t.calls[0].op == AugmentationOp::rotate(90));
  CHECK(t.calls[0].input_generation == 0);
  CHECK(t.calls[0].result_generation == 1);
  REQUIRE(t.history.size() == 5);
  const Message& tool = t.history[3];
  CHECK(tool.role == Role::kToolOutput);
  CHECK(tool.text == "<output><image></output>");
  REQUIRE(tool.attachments.size() == 1);
  CHECK(tool.attachments[0].width == 6);
  CHECK(tool.attachments[0].height == 8);
  const ExecOutcome direct = apply_op(*query_image(), AugmentationOp::rotate(90), *query_image());
  CHECK(*tool.attachments[0].image == direct.image());
  check_invariants(t, cfg);
  check_golden("loop_one_call.json", golden_text(t));
}

TEST_CASE("invalid operation is re-injected") {
  const EpisodeConfig cfg;
  const EpisodeTrace t = play({"<think>Try it.</think><code>brighten(image_path)</code>", kAnswer}, cfg);
  CHECK(t.k == 1);
  REQUIRE(t.calls.size() == 1);
  CHECK(t.calls[0].status == CallStatus::kParseError);
  CHECK(t.calls[0].error_code == ErrorCode::kUnknownOperation);
  const Message& tool = t.history[3];
  CHECK(tool.attachments.empty());
  CHECK(tool.text == "<output>" + t.calls[0].error_text + "</output>");
  CHECK(t.calls[0].error_text.rfind("error[UnknownOperation]", 0) == 0);
  CHECK(t.terminated_by == Termination::kAnswer);
  check_invariants(t, cfg);
  check_golden("loop_invalid_op.json", golden_text(t));
}

TEST_CASE("execution errors are re-injected") {
  const EpisodeTrace t = play({"<code>crop(image_path, 0, 0, 100, 100)</code>", kAnswer});
  REQUIRE(t.calls.size() == 1);
  CHECK(t.calls[0].status == CallStatus::kExecError);
  CHECK(t.calls[0].error_code == ErrorCode::kOutOfBounds);
  CHECK(t.history[3].text.find("error[OutOfBounds]") != std::string::npos);
}

TEST_CASE("exceeding K forces the final answer") {
  EpisodeConfig cfg;
  cfg.max_calls = 3;
  std::vector<std::string> spans(4, "<think>Again.</think><code>image_path = flip(image_path)</code>");
  spans.push_back("<think>Enough.</think><answer>7</answer>");
  const EpisodeTrace t = play(spans, cfg);
  CHECK(t.terminated_by == Termination::kForced);
  CHECK(t.k == 4);
  REQUIRE(t.calls.size() == 4);
  CHECK(t.calls[3].status == CallStatus::kNotExecuted);
  CHECK(t.final_answer == "7");
  bool found = false;
  for (const auto& m : t.history) found = found || (m.role == Role::kUser && m.text == kForcedAnswerMessage);
  CHECK(found);
  check_invariants(t, cfg);
  check_golden("loop_forced.json", golden_text(t));
}

TEST_CASE("runs are byte identical") {
  EpisodeConfig cfg;
  cfg.max_calls = 3;
  for (const auto& spans : std::vector<std::vector<std::string>>{{kDirect}, {kCall, kAnswer}}) {
    CHECK(golden_text(play(spans, cfg)) == golden_text(play(spans, cfg)));
  }
}

TEST_CASE("calls chain on the latest image") {
  const EpisodeTrace t = play({kCall, "<code>image_path = crop(image_path, 0, 0, 6, 4)</code>",
                               "<code>brighten(image_path)</code>", "<code>image_path = flip(image_path)</code>",
                               kAnswer});
  REQUIRE(t.calls.size() == 4);
  CHECK(t.calls[1].input_generation == 1);
  CHECK(t.calls[1].result_generation == 2);
  CHECK(t.calls[2].status == CallStatus::kParseError);
  CHECK(t.calls[3].input_generation == 2);
  CHECK(t.calls[3].result_generation == 3);
  check_invariants(t, EpisodeConfig{});
}

TEST_CASE("context budget") {
  EpisodeConfig cfg;
  cfg.max_context_tokens = 260;
  cfg.max_completion_tokens = 20;
  std::vector<std::string> spans(8, "<think>" + std::string(200, 'x') + "</think><code>image_path = flip(image_path)</code>");
  spans.push_back("<answer>1</answer>");
  const EpisodeTrace t = play(spans, cfg);
  CHECK(t.terminated_by != Termination::kAnswer);
  CHECK(t.k < 8);
  check_invariants(t, cfg);
}

TEST_CASE("render_history") {
  CHECK(render_history({}).empty());
  ChatHistory h{{Role::kAssistant, "abc", {}}};
  CHECK(render_history(h) == "<|im_start|>assistant\nabc<|im_end|>\n");
  CHECK(render_history(h) == render_history(h));
  CHECK(trajectory_text(h) == "abc");
}

TEST_CASE("final answer extraction") {
  CHECK(extract_final_answer("<think>a</think><answer> 12 </answer>") == "12");
  CHECK(extract_final_answer("  plain  ") == "plain");
}

namespace {
class FailingBackend final : public ModelBackend {
 public:
  GeneratedSpan generate(const GenerateRequest& req) override {
    if (req.history.size() > 2) throw Error(ErrorCode::kBackendUnavailable, "connection reset");
    return {kCall, "stop", {}};
  }
};
}  // namespace

TEST_CASE("backend failure aborts with the partial trace") {
  FailingBackend backend;
  try {
    run_episode(backend, EpisodeQuery{query_image(), "q", nullptr}, EpisodeConfig{});
    FAIL("expected abort");
  } catch (const EpisodeAborted& e) {
    CHECK(e.code() == ErrorCode::kBackendUnavailable);
    CHECK(e.partial().calls.size() == 1);
  }
}

TEST_CASE("config validation") {
  EpisodeConfig cfg;
  cfg.grace_calls = 8;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.max_completion_tokens = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
