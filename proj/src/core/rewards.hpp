// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include "episode.hpp"

namespace augloop {

/// Component order: vqa, fmt, cst, api, suc.
struct RewardWeights {
  std::array<double, 5> values{1.0, 0.25, 0.5, 0.25, 0.5};
  /// Throws Error(kConfigInvalid) on a negative or non-finite weight.
  void validate() const;
};

struct RewardParts {
  double r_vqa = 0;
  double r_fmt = 0;
  double r_cst = 0;
  double r_api = 0;
  double r_suc = 0;
};

struct RewardBreakdown : RewardParts {
  double total = 0;
};

/// Scores answers and traces. Both calls return values in [0, 1] and throw
/// Error(kJudgeUnavailable) when no score can be obtained.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual double score_vqa(std::string_view question, std::string_view ground_truth,
                           std::string_view answer_window) = 0;
  virtual double score_consistency(std::string_view trace_text) = 0;
};

/// Deterministic judge for CI. The prediction is the last answer block in the
/// window (else its last non-empty line); both sides are lower-cased,
/// whitespace-collapsed and stripped of surrounding punctuation before
/// comparison. Consistency is 1 - (repeated word 4-grams / all 4-grams) over
/// the assistant text, an approximation of the rubric judge.
class RuleJudge final : public Judge {
 public:
  enum class Match { kExact, kContains };
  explicit RuleJudge(Match mode = Match::kExact) : mode_(mode) {}

  double score_vqa(std::string_view question, std::string_view ground_truth,
                   std::string_view answer_window) override;
  double score_consistency(std::string_view trace_text) override;

  static std::string normalize(std::string_view text);
  static std::string prediction_from_window(std::string_view window);

 private:
  Match mode_;
};

inline constexpr std::size_t kJudgeWindowChars = 500;

/// Last `chars` Unicode code points of render_history(trace.history).
std::string judge_window(const EpisodeTrace& trace, std::size_t chars = kJudgeWindowChars);
/// Last `chars` code points of `text` (whole text when shorter).
std::string utf8_tail(std::string_view text, std::size_t chars);

double clamp_unit(double v);

double reward_vqa(const EpisodeTrace& trace, std::string_view ground_truth, Judge& judge);
double reward_fmt(const EpisodeTrace& trace);
double reward_cst(const EpisodeTrace& trace, Judge& judge);
double reward_api(const EpisodeTrace& trace, const OpVocabulary& vocabulary = full_vocabulary());

/// Conditional call reward: 0 below the 0.5 answer gate, 1 up to `grace`
/// calls, then linear decay reaching 0 at k = K, and 0 beyond K.
/// Throws Error(kConfigInvalid) when K <= grace.
double reward_suc(double r_vqa, int k, int max_calls, int grace = 2);

RewardBreakdown total_reward(const RewardParts& parts, const RewardWeights& weights = {});

struct RewardConfig {
  RewardWeights weights;
  int max_calls = 8;
  int grace_calls = 2;
  OpVocabulary vocabulary = full_vocabulary();
};

RewardBreakdown score_trace(const EpisodeTrace& trace, std::string_view ground_truth, Judge& judge,
                            const RewardConfig& config = {});

// ---- prompt assets ------------------------------------------------------------

std::string_view judge_vqa_template();
std::string_view judge_consistency_template();
std::string_view format_sft_template();
inline constexpr std::string_view kPromptVersion = "v1";

/// Replaces every `{{NAME}}` slot; unknown slots are left untouched.
std::string fill_template(std::string_view tmpl,
                          std::initializer_list<std::pair<std::string_view, std::string_view>> slots);

}  // namespace augloop
