// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trace_io.hpp"

namespace augloop {

inline constexpr std::string_view kGrpoSchema = "augloop.grpo.v1";

/// What a piece of trajectory text is. Only kOutput (runtime-injected tool
/// results, including re-injected error text) is excluded from the loss.
enum class SpanKind { kPrompt, kReasoning, kCall, kAnswer, kOutput };
std::string_view span_kind_name(SpanKind kind) noexcept;

struct LossSpan {
  SpanKind kind = SpanKind::kPrompt;
  bool in_loss = true;
  std::size_t message_index = 0;
  std::string text;
  std::size_t offset = 0;  // code points from the start of the trajectory text
  std::size_t length = 0;  // code points
};

struct LossSequence {
  std::vector<LossSpan> spans;
  std::size_t in_loss_length = 0;
  std::size_t excluded_length = 0;
  /// Hashes of query-image attachments. Pixels never enter the text stream,
  /// so they are listed here as excluded inputs rather than as spans.
  std::vector<std::string> excluded_attachments;

  /// Concatenation of every span; equals trajectory_text(history).
  std::string text() const;
};

/// Counts UTF-8 code points; invalid bytes count one each.
std::size_t codepoint_length(std::string_view text);

/// Throws Error(kStructureInvalid) when the message order breaks the
/// system, user, (assistant, tool?)*, [user, assistant] shape, or a tool
/// message does not follow an assistant message with exactly one code block.
LossSequence build_loss_sequence(const EpisodeTrace& trace);
void validate_structure(const EpisodeTrace& trace);

enum class NormMode {
  kGroup,       // (r - mean) / std over the G rollouts
  kTrajectory,  // mean and std over in-loss positions, each trace weighted by its length
};
std::string_view norm_mode_name(NormMode mode) noexcept;
std::optional<NormMode> norm_mode_from_name(std::string_view name) noexcept;

inline constexpr double kStdFloor = 1e-8;

/// Population statistics. Returns all zeros when std < 1e-8. `lengths` is
/// required (same size as rewards) for kTrajectory.
/// Throws Error(kGroupTooSmall) when G < 2, Error(kLengthMismatch) on
/// mismatched lengths.
std::vector<double> group_normalize(const std::vector<double>& rewards, NormMode mode = NormMode::kGroup,
                                    const std::vector<std::size_t>& lengths = {});

struct KlRecord {
  std::vector<double> values;  // exp(d) - d - 1 with d = logp_ref - logp_policy
  double beta = 0.01;
  double sum() const;
};

/// Throws Error(kLengthMismatch) when the vectors differ in length.
KlRecord kl_term(const std::vector<double>& logp_policy, const std::vector<double>& logp_ref,
                 double beta = 0.01);

struct RolloutGroup {
  std::string group_id;
  std::vector<TraceRecord> traces;  // each must carry rewards
};

struct BatchConfig {
  double beta = 0.01;
  NormMode mode = NormMode::kGroup;
  std::size_t workers = 1;
};

/// One header record followed by one record per trace, ordered by trace id.
/// Output is a pure function of the inputs.
std::vector<Json> assemble_batch(const std::vector<RolloutGroup>& groups, const BatchConfig& config = {});

/// Groups records by group_id (falling back to item_id), preserving first
/// appearance order.
std::vector<RolloutGroup> group_records(std::vector<TraceRecord> records);

}  // namespace augloop
