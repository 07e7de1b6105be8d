// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "ops.hpp"

namespace augloop {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";
inline constexpr std::string_view kCodeOpen = "<code>";
inline constexpr std::string_view kCodeClose = "</code>";
inline constexpr std::string_view kOutputOpen = "<output>";
inline constexpr std::string_view kOutputClose = "</output>";
inline constexpr std::string_view kImagePlaceholder = "<image>";

// ---- stop detection -------------------------------------------------------

struct StopMatch {
  std::size_t stop_index = 0;  // index into the stop set
  std::size_t position = 0;    // byte offset of the first character of the match
  std::string_view stop;
};

std::vector<std::string> default_stop_set();

/// Earliest complete occurrence of any stop string. Ties go to the stop that
/// appears first in `stop_set`.
std::optional<StopMatch> find_stop(std::string_view generated,
                                   const std::vector<std::string>& stop_set);

// ---- call extraction ------------------------------------------------------

struct ParsedCall {
  AugmentationOp op;
  std::string raw_text;
  std::optional<std::string> assignment_target;
  std::optional<std::string> image_ref;
};

/// Classified rejection. `text` is the model-visible message (docs/errors.md).
struct CallError {
  ErrorCode code = ErrorCode::kSyntaxMalformed;
  std::string text;
  friend bool operator==(const CallError&, const CallError&) = default;
};

using CallResult = std::variant<ParsedCall, CallError>;

using OpVocabulary = std::set<OpKind>;
OpVocabulary full_vocabulary();

/// Parses the text between one <code></code> pair. Total over arbitrary
/// bytes: always returns a ParsedCall or a CallError with exactly one of
/// SyntaxMalformed, UnknownOperation, ParamInvalid.
CallResult extract_call(std::string_view span, const OpVocabulary& vocabulary = full_vocabulary());

// ---- structural tag scan ---------------------------------------------------

using Span = std::pair<std::size_t, std::size_t>;  // [begin, end) byte offsets

struct TagScan {
  bool has_think = false;
  bool has_answer = false;
  std::vector<Span> code_spans;    // whole blocks, tags included
  std::vector<Span> output_spans;  // whole blocks, tags included
  std::string answer_text;
};

/// Strict first-match pairing, case-sensitive. Code and output blocks are
/// scanned jointly left to right so they never overlap; unclosed trailing
/// blocks are not reported.
TagScan scan_tags(std::string_view full_text);

/// Contents of a block span with its open/close tags removed.
std::string_view block_inner(std::string_view text, Span span, std::string_view open,
                             std::string_view close);

}  // namespace augloop
