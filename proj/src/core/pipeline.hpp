// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "manifest.hpp"
#include "rewards.hpp"

namespace augloop {

/// An attempt counts as correct when the judge scores it at or above this.
inline constexpr double kCorrectThreshold = 0.5;
inline constexpr double kLevelZeroKeepRate = 0.10;

enum class Disposition { kUnset, kKeep, kSample10pct, kRecheckValidity, kDrop };
std::string_view disposition_name(Disposition d) noexcept;

struct DifficultyRecord {
  std::string item_id;
  int k = 0;
  std::vector<double> scores;
  std::vector<bool> correct;
  int difficulty = 0;  // number of incorrect attempts
  Disposition disposition = Disposition::kUnset;
};

/// Bucket rule: 0 errors -> sample_10pct, all k wrong -> recheck_validity,
/// anything in between -> keep.
Disposition disposition_for(int difficulty, int k);

/// Judges every attempt against the item's answer. Throws
/// Error(kInvalidArgument) with no attempts, Error(kJudgeUnavailable) from the judge.
DifficultyRecord passk_difficulty(const QAItem& item, const std::vector<std::string>& attempts,
                                  Judge& judge, std::size_t workers = 1);

struct FilterPartition {
  std::vector<DifficultyRecord> kept;
  std::vector<DifficultyRecord> dropped;
  std::vector<DifficultyRecord> recheck;
};

/// Sets dispositions and partitions. Level-0 records are kept when one
/// uniform draw from mt19937_64(seed), taken in input order, is < 0.10.
FilterPartition apply_filter_policy(std::vector<DifficultyRecord> records, std::uint64_t seed);

/// Returns true (valid), false (unanswerable) or nullopt (leave queued).
using RecheckVerifier = std::function<std::optional<bool>(const DifficultyRecord&)>;

/// Valid records move to `kept`, invalid ones to `dropped`. Without a
/// verifier the queue is left untouched.
void resolve_recheck(FilterPartition& partition, const RecheckVerifier& verifier);

Json difficulty_to_json(const DifficultyRecord& r);
Json filter_summary(const FilterPartition& p, std::uint64_t seed, int k);

// ---- format-SFT synthesis ------------------------------------------------------

inline constexpr std::string_view kFormatTemplateV1 = "format_v1";

struct SftTrajectory {
  std::string item_id;
  AugmentationOp op;
  std::shared_ptr<const ImageBuffer> source_image;  // after pre-transformation
  EpisodeTrace trace;
  std::string text;  // trajectory_text(trace.history)
};

/// The inverse applied to the source for rotate and flip, so that the
/// synthesized call restores the original orientation.
std::optional<AugmentationOp> pretransform_for(const AugmentationOp& op);

/// Builds system, user, assistant (think + code), tool output, assistant
/// (think + answer). Throws Error(kTemplateUnknown) for unknown template
/// ids and the op's execution error code if it cannot run on the image.
SftTrajectory synth_format_trajectory(const QAItem& qa, const ImageBuffer& image, const AugmentationOp& op,
                                      std::string_view template_id = kFormatTemplateV1);

}  // namespace augloop
