// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "call_parser.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace augloop;

namespace {

AugmentationOp parses(std::string_view text, const OpVocabulary& v = full_vocabulary()) {
  const CallResult r = extract_call(text, v);
  if (const auto* e = std::get_if<CallError>(&r)) FAIL_CHECK(e->text);
  REQUIRE(std::holds_alternative<ParsedCall>(r));
  return std::get<ParsedCall>(r).op;
}

CallError rejects(std::string_view text, const OpVocabulary& v = full_vocabulary()) {
  const CallResult r = extract_call(text, v);
  REQUIRE(std::holds_alternative<CallError>(r));
  return std::get<CallError>(r);
}

}  // namespace

TEST_CASE("find_stop") {
  const auto stops = default_stop_set();
  const auto m = find_stop("think <code>x</code> more", stops);
  REQUIRE(m);
  CHECK(m->stop == "</code>");
  CHECK(m->position == 13);
  CHECK_FALSE(find_stop("no tags here", stops));
  const auto both = find_stop("<answer>a</answer> then <code>c</code>", stops);
  REQUIRE(both);
  CHECK(both->stop == "</answer>");
  CHECK(both->position == 9);
  CHECK_FALSE(find_stop("</cod", stops));
}

TEST_CASE("find_stop is the earliest occurrence") {
  std::mt19937_64 gen(1);
  const std::vector<std::string> stops{"</code>", "</answer>", "ab"};
  const std::string alphabet = "ab</>codeanswr ";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    for (int n = static_cast<int>(gen() % 40); n > 0; --n) s += alphabet[gen() % alphabet.size()];
    const auto m = find_stop(s, stops);
    std::size_t best = std::string::npos;
    for (const auto& st : stops) best = std::min(best, s.find(st));
    if (best == std::string::npos) {
      CHECK_FALSE(m);
    } else {
      REQUIRE(m);
      CHECK(m->position == best);
    }
  }
}

TEST_CASE("documented call forms") {
  CHECK(parses(R"(image_path = denoise(image_path, method="gaussian", kernel_size=3))") ==
        AugmentationOp::denoise(DenoiseMethod::kGaussian, 3));
  CHECK(parses("crop(image_path, 10, 20, 110, 220)") == AugmentationOp::crop(10, 20, 110, 220));
  CHECK(parses("  rotate( img ,degrees = 270 ) ; ") == AugmentationOp::rotate(270));
  CHECK(parses("rotate(img, angle=90)") == AugmentationOp::rotate(90));
  CHECK(parses("flip(img)") == AugmentationOp::flip(FlipAxis::kHorizontal));
  CHECK(parses(R"(flip(img, axis="vertical"))") == AugmentationOp::flip(FlipAxis::kVertical));
  CHECK(parses("edge(img)") == AugmentationOp::edge());
  CHECK(parses("denoise(img)") == AugmentationOp::denoise(DenoiseMethod::kMedian, 3));
  CHECK(parses("resize(img, 2)") == AugmentationOp::resize_up(Rational(2, 1)));
  CHECK(parses("resize(img, factor=0.5)") == AugmentationOp::resize_down(Rational(1, 2)));
  CHECK(parses("resize(img, 1)") == AugmentationOp::resize_up(Rational(1, 1)));
  CHECK(parses("resize_up(img, scale=3/2)") == AugmentationOp::resize_up(Rational(3, 2)));
}

TEST_CASE("classified rejections") {
  CHECK(rejects("brighten(image_path)").code == ErrorCode::kUnknownOperation);
  CHECK(rejects(R"(denoise(image_path, method="median", kernel_size=4))").code == ErrorCode::kParamInvalid);
  CHECK(rejects("rotate(img, 45)").code == ErrorCode::kParamInvalid);
  CHECK(rejects("crop(img, 1, 2, 3)").code == ErrorCode::kParamInvalid);
  CHECK(rejects("crop(img, 1, 2, 3, 4, 5)").code == ErrorCode::kParamInvalid);
  CHECK(rejects("resize_up(img, 0.5)").code == ErrorCode::kParamInvalid);
  CHECK(rejects("flip(img, axis=\"diagonal\")").code == ErrorCode::kParamInvalid);
  CHECK(rejects("crop(img, 1, 2, 3, 4").code == ErrorCode::kSyntaxMalformed);
  CHECK(rejects("flip(img, axis=\"horizontal)").code == ErrorCode::kSyntaxMalformed);
  CHECK(rejects("flip(img); edge(img)").code == ErrorCode::kSyntaxMalformed);
  CHECK(rejects("").code == ErrorCode::kSyntaxMalformed);
  CHECK(rejects("brighten(image_path)").text.rfind("error[UnknownOperation]: ", 0) == 0);
}

TEST_CASE("vocabulary restriction") {
  OpVocabulary v = full_vocabulary();
  v.erase(OpKind::kResizeUp);
  CHECK(rejects("resize_up(img, 2)", v).code == ErrorCode::kUnknownOperation);
  CHECK(parses("resize_down(img, 1/2)", v) == AugmentationOp::resize_down(Rational(1, 2)));
}

TEST_CASE("render and reparse round trip") {
  std::mt19937_64 gen(2);
  for (int i = 0; i < 10000; ++i) {
    const AugmentationOp op = testing::random_op(gen);
    const std::string text = render_call(op);
    const CallResult r = extract_call(text);
    REQUIRE_MESSAGE(std::holds_alternative<ParsedCall>(r), text);
    CHECK(std::get<ParsedCall>(r).op == op);
    CHECK(std::get<ParsedCall>(r).assignment_target == std::optional<std::string>("image_path"));
    const CallResult bare = extract_call(render_call(op, "img", std::nullopt));
    REQUIRE(std::holds_alternative<ParsedCall>(bare));
    CHECK(std::get<ParsedCall>(bare).op == op);
    CHECK_FALSE(std::get<ParsedCall>(bare).assignment_target);
  }
}

TEST_CASE("arbitrary bytes always classify") {
  std::mt19937_64 gen(3);
  const std::string seeds[] = {"crop(img, 1, 2, 3, 4)", "denoise(img, method=\"median\", kernel_size=3)",
                               "resize(img, 3/2)"};
  for (int i = 0; i < 20000; ++i) {
    std::string s;
    if (i % 2 == 0) {
      for (int n = static_cast<int>(gen() % 64); n > 0; --n) s += static_cast<char>(gen() & 0xff);
    } else {
      s = seeds[gen() % 3];
      for (int n = 1 + static_cast<int>(gen() % 4); n > 0; --n) s[gen() % s.size()] = static_cast<char>(gen() & 0xff);
    }
    const CallResult r = extract_call(s);
    if (const auto* e = std::get_if<CallError>(&r)) {
      const bool classified = e->code == ErrorCode::kSyntaxMalformed || e->code == ErrorCode::kUnknownOperation ||
                              e->code == ErrorCode::kParamInvalid;
      CHECK(classified);
    }
    (void)scan_tags(s);
  }
}

TEST_CASE("scan_tags") {
  const TagScan ok = scan_tags("<think>x</think><answer>y</answer>");
  CHECK(ok.has_think);
  CHECK(ok.has_answer);
  CHECK(ok.answer_text == "y");

  const TagScan unclosed = scan_tags("<think>x<answer>y</answer>");
  CHECK_FALSE(unclosed.has_think);
  CHECK(unclosed.has_answer);

  const TagScan empty = scan_tags("");
  CHECK_FALSE(empty.has_think);
  CHECK_FALSE(empty.has_answer);
  CHECK(empty.code_spans.empty());
  CHECK(empty.output_spans.empty());
  CHECK(empty.answer_text.empty());

  const std::string text = "a<code>flip(img)</code><output>done</output>b<code>open";
  const TagScan blocks = scan_tags(text);
  REQUIRE(blocks.code_spans.size() == 1);
  REQUIRE(blocks.output_spans.size() == 1);
  CHECK(text.substr(blocks.code_spans[0].first, blocks.code_spans[0].second - blocks.code_spans[0].first) ==
        "<code>flip(img)</code>");
  CHECK(block_inner(text, blocks.output_spans[0], kOutputOpen, kOutputClose) == "done");
  CHECK(scan_tags("<THINK>x</THINK>").has_think == false);
}

TEST_CASE("scan spans are sorted and disjoint") {
  std::mt19937_64 gen(4);
  const std::string pieces[] = {"<code>", "</code>", "<output>", "</output>", "x", "<think>", "</think>"};
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    for (int n = static_cast<int>(gen() % 12); n > 0; --n) s += pieces[gen() % 7];
    const TagScan t = scan_tags(s);
    std::vector<Span> all = t.code_spans;
    all.insert(all.end(), t.output_spans.begin(), t.output_spans.end());
    std::sort(all.begin(), all.end());
    for (std::size_t k = 1; k < all.size(); ++k) CHECK(all[k - 1].second <= all[k].first);
  }
}
