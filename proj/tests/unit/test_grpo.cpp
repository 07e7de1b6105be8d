// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "grpo.hpp"
#include "test_support.hpp"

using namespace augloop;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double pop_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::shared_ptr<const ImageBuffer> small_image() {
  ImageBuffer img(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(x, y, 0) = static_cast<std::uint8_t>(16 * y + x);
  return std::make_shared<const ImageBuffer>(std::move(img));
}

EpisodeTrace scripted(std::vector<std::string> spans, const std::string& id) {
  ScriptedBackend backend(std::move(spans));
  EpisodeTrace t = run_episode(backend, EpisodeQuery{small_image(), "How many?", nullptr}, EpisodeConfig{});
  t.trace_id = id;
  return t;
}

// Two groups of two scripted traces with fixed rewards and log-probs.
std::vector<TraceRecord> golden_inputs() {
  const std::string call = "<think>Turn it.</think><code>image_path = rotate(image_path, degrees=90)</code>";
  const std::string bad = "<think>Brighter.</think><code>brighten(image_path)</code>";
  struct Spec {
    const char* id;
    const char* group;
    std::vector<std::string> spans;
    RewardParts c;
    std::vector<double> lp, lr;
  };
  const std::vector<Spec> specs{
      {"a-0", "a", {"<think>Three.</think><answer>3</answer>"}, {1, 1, 1, 1, 1}, {-0.5, -0.25}, {-0.5, -0.5}},
      {"a-1", "a", {call, "<think>Four.</think><answer>4</answer>"}, {0, 1, 1, 0, 0.5}, {-1, -2}, {-1.5, -1}},
      {"b-0", "b", {bad, "<think>Two.</think><answer>2</answer>"}, {1, 1, 0, 0.5, 1}, {}, {}},
      {"b-1", "b", {call, call, "<answer>2</answer>"}, {1, 0, 1, 1, 1}, {}, {}},
  };
  std::vector<TraceRecord> out;
  for (const Spec& s : specs) {
    TraceRecord r;
    r.item_id = s.group;
    r.group_id = s.group;
    r.trace = scripted(s.spans, s.id);
    r.rewards = total_reward(s.c);
    r.logp_policy = s.lp;
    r.logp_ref = s.lr;
    out.push_back(std::move(r));
  }
  return out;
}

std::string batch_text(const std::vector<Json>& batch) {
  std::string text;
  for (const Json& j : batch) text += dump_compact(j) + "\n";
  return text;
}

void check_golden(const std::string& name, const std::string& text) {
  const auto path = testing::test_data("golden/" + name);
  if (std::getenv("AUGLOOP_UPDATE_GOLDEN")) {
    write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
  }
  REQUIRE_MESSAGE(std::filesystem::exists(path), "missing golden file " << path.string());
  const auto bytes = read_file_bytes(path);
  CHECK(std::string(bytes.begin(), bytes.end()) == text);
}

}  // namespace

TEST_CASE("loss sequence for one call") {
  const EpisodeTrace t = scripted({"<think>a</think><code>image_path = flip(image_path)</code>", "<answer>b</answer>"}, "x");
  const LossSequence seq = build_loss_sequence(t);
  std::vector<LossSpan> excluded;
  for (const auto& s : seq.spans) {
    if (!s.in_loss) excluded.push_back(s);
  }
  REQUIRE(excluded.size() == 1);
  CHECK(excluded[0].text == "<output><image></output>");
  CHECK(excluded[0].kind == SpanKind::kOutput);
  CHECK(seq.text() == trajectory_text(t.history));
  CHECK(seq.excluded_attachments == std::vector<std::string>{t.history[1].attachments[0].sha256});
  CHECK(seq.excluded_length == codepoint_length("<output><image></output>"));
}

TEST_CASE("direct answer has no excluded spans") {
  const LossSequence seq = build_loss_sequence(scripted({"<think>a</think><answer>b</answer>"}, "x"));
  for (const auto& s : seq.spans) CHECK(s.in_loss);
  CHECK(seq.excluded_length == 0);
}

TEST_CASE("re-injected error text is excluded") {
  const EpisodeTrace t = scripted({"<code>brighten(image_path)</code>", "<answer>b</answer>"}, "x");
  const LossSequence seq = build_loss_sequence(t);
  std::string excluded;
  for (const auto& s : seq.spans) {
    if (!s.in_loss) excluded += s.text;
  }
  CHECK(excluded == t.history[3].text);
  CHECK(excluded.find("error[UnknownOperation]") != std::string::npos);
  // The in-loss text is the trajectory with the tool message removed.
  std::string in_loss;
  for (const auto& s : seq.spans) {
    if (s.in_loss) in_loss += s.text;
  }
  ChatHistory without = t.history;
  without.erase(without.begin() + 3);
  CHECK(in_loss == trajectory_text(without));
}

TEST_CASE("span kinds") {
  const EpisodeTrace t = scripted({"<think>a</think><code>edge(img)</code>", "<think>b</think><answer>c</answer>"}, "x");
  const LossSequence seq = build_loss_sequence(t);
  std::vector<SpanKind> kinds;
  for (const auto& s : seq.spans) kinds.push_back(s.kind);
  const std::vector<SpanKind> expect{SpanKind::kPrompt,    SpanKind::kPrompt, SpanKind::kReasoning,
                                     SpanKind::kCall,      SpanKind::kOutput, SpanKind::kReasoning,
                                     SpanKind::kAnswer};
  CHECK(kinds == expect);
}

TEST_CASE("masking on random traces") {
  std::mt19937_64 gen(21);
  for (int i = 0; i < 500; ++i) {
    const EpisodeTrace t = testing::random_trace(gen);
    const LossSequence seq = build_loss_sequence(t);
    CHECK(seq.text() == trajectory_text(t.history));
    std::vector<std::string> excluded, outputs;
    for (const auto& s : seq.spans) {
      if (!s.in_loss) excluded.push_back(s.text);
    }
    for (const auto& m : t.history) {
      if (m.role == Role::kToolOutput) outputs.push_back(m.text);
    }
    CHECK(excluded == outputs);
    std::size_t offset = 0;
    for (const auto& s : seq.spans) {
      CHECK(s.offset == offset);
      CHECK(s.length == codepoint_length(s.text));
      offset += s.length;
    }
    CHECK(offset == seq.in_loss_length + seq.excluded_length);
  }
}

TEST_CASE("structure violations") {
  std::mt19937_64 gen(3);
  EpisodeTrace t = scripted({"<code>flip(img)</code>", "<answer>b</answer>"}, "x");
  EpisodeTrace swapped = t;
  std::swap(swapped.history[2], swapped.history[3]);
  CHECK_THROWS_AS(build_loss_sequence(swapped), Error);
  EpisodeTrace doubled = t;
  doubled.history.insert(doubled.history.begin() + 3, doubled.history[3]);
  CHECK_THROWS_AS(build_loss_sequence(doubled), Error);
  EpisodeTrace no_code = t;
  no_code.history[2].text = "<think>x</think>";
  try {
    build_loss_sequence(no_code);
    FAIL("expected StructureInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kStructureInvalid);
  }
  EpisodeTrace headless = t;
  headless.history.erase(headless.history.begin());
  CHECK_THROWS_AS(build_loss_sequence(headless), Error);
}

TEST_CASE("group normalization examples") {
  CHECK(group_normalize({1, 1, 1, 1}) == std::vector<double>{0, 0, 0, 0});
  CHECK(group_normalize({0, 1}) == std::vector<double>{-1, 1});
  // mean 1.25, population std 1.25
  CHECK(group_normalize({2.5, 0, 0, 2.5}) == std::vector<double>{1, -1, -1, 1});
  CHECK_THROWS_AS(group_normalize({1}), Error);
  try {
    group_normalize({});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kGroupTooSmall);
  }
}

TEST_CASE("group normalization properties") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 2.5);
  for (int i = 0; i < 3000; ++i) {
    const std::size_t g = std::size_t{2} << (i % 3);
    std::vector<double> r(g);
    for (auto& x : r) x = u(gen);
    const auto a = group_normalize(r);
    CHECK(std::abs(mean_of(a)) < 1e-9);
    CHECK(std::abs(pop_std(a) - 1) < 1e-6);
  }
}

TEST_CASE("trajectory mode weights by length") {
  const auto a = group_normalize({0, 1}, NormMode::kTrajectory, {3, 1});
  // weighted mean 0.25, weighted std sqrt(3)/4
  CHECK(a[0] == doctest::Approx(-0.25 / (std::sqrt(3.0) / 4)).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(0.75 / (std::sqrt(3.0) / 4)).epsilon(1e-12));
  CHECK(3 * a[0] + a[1] == doctest::Approx(0).epsilon(1e-12));
  CHECK(group_normalize({0, 1}, NormMode::kTrajectory, {2, 2}) == group_normalize({0, 1}));
  try {
    group_normalize({0, 1}, NormMode::kTrajectory, {1});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLengthMismatch);
  }
  CHECK(norm_mode_from_name("trajectory") == NormMode::kTrajectory);
  CHECK_FALSE(norm_mode_from_name("token"));
}

TEST_CASE("kl estimator") {
  const auto zero = kl_term({-1, -2, -3}, {-1, -2, -3});
  CHECK(zero.values == std::vector<double>{0, 0, 0});
  const auto one = kl_term({0}, {std::log(2.0)});
  CHECK(one.values[0] == doctest::Approx(2 - std::log(2.0) - 1).epsilon(1e-15));
  CHECK(one.values[0] == doctest::Approx(0.3069).epsilon(1e-4));
  std::mt19937_64 gen(9);
  std::normal_distribution<double> n(0, 3);
  std::vector<double> p(1000), q(1000);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = n(gen);
    q[i] = i % 7 == 0 ? p[i] : n(gen);
  }
  const auto kl = kl_term(p, q, 0.02);
  CHECK(kl.beta == 0.02);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(kl.values[i] >= 0);
    if (p[i] == q[i]) CHECK(kl.values[i] == 0);
  }
  CHECK_THROWS_AS(kl_term({1, 2}, {1}), Error);
}

TEST_CASE("batch assembly") {
  auto groups = group_records(golden_inputs());
  REQUIRE(groups.size() == 2);
  const auto batch = assemble_batch(groups);
  REQUIRE(batch.size() == 5);
  const Json& header = batch[0];
  CHECK(header["record"] == "batch");
  std::size_t normalizer = 0;
  for (std::size_t i = 1; i < batch.size(); ++i) normalizer += batch[i]["in_loss_length"].get<std::size_t>();
  CHECK(header["normalizer"] == normalizer);
  double weights = 0;
  for (std::size_t i = 1; i < batch.size(); ++i) {
    const Json& r = batch[i];
    CHECK(r["loss_weight"].get<double>() ==
          static_cast<double>(r["in_loss_length"].get<std::size_t>()) / static_cast<double>(normalizer));
    weights += r["loss_weight"].get<double>();
    for (const Json& s : r["spans"]) {
      CHECK(s["advantage"] == (s["in_loss"].get<bool>() ? r["advantage"] : Json(0.0)));
    }
  }
  CHECK(weights == doctest::Approx(1).epsilon(1e-12));
  CHECK(batch[1]["trace_id"] == "a-0");
  CHECK(batch[3]["kl"].is_null());
  // Ordering by trace id is independent of input order and worker count.
  auto reversed = golden_inputs();
  std::reverse(reversed.begin(), reversed.end());
  BatchConfig cfg;
  cfg.workers = 4;
  const auto again = assemble_batch(group_records(reversed), cfg);
  for (std::size_t i = 1; i < batch.size(); ++i) CHECK(dump_compact(again[i]) == dump_compact(batch[i]));
}

TEST_CASE("identical rewards still emit a batch") {
  std::vector<TraceRecord> records;
  for (int i = 0; i < 4; ++i) {
    TraceRecord r;
    r.group_id = "g";
    r.trace = scripted({"<answer>1</answer>"}, "t" + std::to_string(i));
    r.rewards = total_reward({1, 1, 1, 1, 1});
    records.push_back(std::move(r));
  }
  const auto batch = assemble_batch(group_records(records));
  REQUIRE(batch.size() == 5);
  for (std::size_t i = 1; i < 5; ++i) CHECK(batch[i]["advantage"] == 0.0);
}

TEST_CASE("unscored traces are rejected") {
  TraceRecord a, b;
  a.trace = scripted({"<answer>1</answer>"}, "a");
  b.trace = a.trace;
  a.rewards = total_reward({1, 1, 1, 1, 1});
  CHECK_THROWS_AS(assemble_batch({RolloutGroup{"g", {a, b}}}), Error);
  CHECK_THROWS_AS(assemble_batch({RolloutGroup{"g", {a}}}), Error);
}

TEST_CASE("golden batch") {
  std::string inputs;
  for (const auto& r : golden_inputs()) inputs += dump_compact(trace_to_json(r, ImageStore{std::nullopt, false})) + "\n";
  check_golden("grpo_input.jsonl", inputs);
  const auto batch = assemble_batch(group_records(golden_inputs()));
  check_golden("grpo_batch.jsonl", batch_text(batch));
  // The frozen inputs, loaded back without pixels, reproduce the frozen batch.
  const auto loaded = load_traces(testing::test_data("golden/grpo_input.jsonl"));
  CHECK(batch_text(assemble_batch(group_records(loaded))) == batch_text(batch));
}
