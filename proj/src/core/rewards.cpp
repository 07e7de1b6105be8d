// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "rewards.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <vector>

namespace augloop {

void RewardWeights::validate() const {
  for (double w : values) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kConfigInvalid, "reward weights must be finite and non-negative");
    }
  }
}

double clamp_unit(double v) {
  if (std::isnan(v)) return 0.0;
  return std::clamp(v, 0.0, 1.0);
}

std::string utf8_tail(std::string_view text, std::size_t chars) {
  std::size_t count = 0;
  std::size_t pos = text.size();
  while (pos > 0 && count < chars) {
    --pos;
    // Continuation bytes are 10xxxxxx; stop on a lead byte.
    if ((static_cast<unsigned char>(text[pos]) & 0xC0) != 0x80) ++count;
  }
  return std::string(text.substr(pos));
}

std::string judge_window(const EpisodeTrace& trace, std::size_t chars) {
  return utf8_tail(render_history(trace.history), chars);
}

// ---- rule judge --------------------------------------------------------------

std::string RuleJudge::normalize(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  auto is_punct = [](char c) {
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '"' ||
           c == '\'' || c == '`';
  };
  std::size_t b = 0, e = out.size();
  while (b < e && is_punct(out[b])) ++b;
  while (e > b && is_punct(out[e - 1])) --e;
  return out.substr(b, e - b);
}

std::string RuleJudge::prediction_from_window(std::string_view window) {
  const auto close = window.rfind(kAnswerClose);
  if (close != std::string_view::npos) {
    const auto open = window.rfind(kAnswerOpen, close);
    if (open != std::string_view::npos) {
      return std::string(window.substr(open + kAnswerOpen.size(), close - open - kAnswerOpen.size()));
    }
  }
  std::string_view rest = window;
  // Drop trailing chat delimiters before taking the last line.
  for (std::string_view tail : {std::string_view("<|im_end|>\n"), std::string_view("<|im_end|>")}) {
    if (rest.size() >= tail.size() && rest.substr(rest.size() - tail.size()) == tail) {
      rest.remove_suffix(tail.size());
    }
  }
  while (!rest.empty()) {
    const auto nl = rest.find_last_of('\n');
    std::string_view line = nl == std::string_view::npos ? rest : rest.substr(nl + 1);
    if (!normalize(line).empty()) return std::string(line);
    if (nl == std::string_view::npos) break;
    rest = rest.substr(0, nl);
  }
  return {};
}

double RuleJudge::score_vqa(std::string_view, std::string_view ground_truth,
                            std::string_view answer_window) {
  const std::string truth = normalize(ground_truth);
  const std::string pred = normalize(prediction_from_window(answer_window));
  if (truth.empty() || pred.empty()) return 0.0;
  if (pred == truth) return 1.0;
  if (mode_ == Match::kContains) {
    // Whole-word containment.
    std::size_t pos = pred.find(truth);
    while (pos != std::string::npos) {
      const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(pred[pos - 1]));
      const std::size_t end = pos + truth.size();
      const bool right = end == pred.size() || !std::isalnum(static_cast<unsigned char>(pred[end]));
      if (left && right) return 1.0;
      pos = pred.find(truth, pos + 1);
    }
  }
  return 0.0;
}

double RuleJudge::score_consistency(std::string_view trace_text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : trace_text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  if (words.size() < 4) return 1.0;
  std::map<std::string, int> seen;
  std::size_t repeats = 0;
  const std::size_t grams = words.size() - 3;
  for (std::size_t i = 0; i < grams; ++i) {
    std::string key = words[i] + '\x1f' + words[i + 1] + '\x1f' + words[i + 2] + '\x1f' + words[i + 3];
    if (seen[key]++ > 0) ++repeats;
  }
  return clamp_unit(1.0 - static_cast<double>(repeats) / static_cast<double>(grams));
}

// ---- rewards ----------------------------------------------------------------

double reward_vqa(const EpisodeTrace& trace, std::string_view ground_truth, Judge& judge) {
  return clamp_unit(judge.score_vqa(trace.question, ground_truth, judge_window(trace)));
}

double reward_fmt(const EpisodeTrace& trace) {
  const TagScan scan = scan_tags(assistant_text(trace.history));
  return scan.has_think && scan.has_answer ? 1.0 : 0.0;
}

double reward_cst(const EpisodeTrace& trace, Judge& judge) {
  return clamp_unit(judge.score_consistency(assistant_text(trace.history)));
}

double reward_api(const EpisodeTrace& trace, const OpVocabulary& vocabulary) {
  const std::string text = assistant_text(trace.history);
  const TagScan scan = scan_tags(text);
  for (const Span& s : scan.code_spans) {
    if (std::holds_alternative<CallError>(extract_call(block_inner(text, s, kCodeOpen, kCodeClose), vocabulary))) {
      return 0.0;
    }
  }
  return 1.0;
}

double reward_suc(double r_vqa, int k, int max_calls, int grace) {
  if (grace < 0 || max_calls <= grace) {
    throw Error(ErrorCode::kConfigInvalid, "call reward needs max_calls > grace calls");
  }
  if (k < 0) throw Error(ErrorCode::kInvalidArgument, "call count must be >= 0");
  if (r_vqa < 0.5) return 0.0;
  if (k <= grace) return 1.0;
  if (k <= max_calls) {
    return 1.0 - static_cast<double>(k - grace) / static_cast<double>(max_calls - grace);
  }
  return 0.0;
}

RewardBreakdown total_reward(const RewardParts& parts, const RewardWeights& weights) {
  weights.validate();
  RewardBreakdown out;
  static_cast<RewardParts&>(out) = parts;
  const auto& w = weights.values;
  out.total = w[0] * parts.r_vqa + w[1] * parts.r_fmt + w[2] * parts.r_cst + w[3] * parts.r_api +
              w[4] * parts.r_suc;
  return out;
}

RewardBreakdown score_trace(const EpisodeTrace& trace, std::string_view ground_truth, Judge& judge,
                            const RewardConfig& config) {
  RewardParts parts;
  parts.r_vqa = reward_vqa(trace, ground_truth, judge);
  parts.r_fmt = reward_fmt(trace);
  parts.r_cst = reward_cst(trace, judge);
  parts.r_api = reward_api(trace, config.vocabulary);
  parts.r_suc = reward_suc(parts.r_vqa, trace.k, config.max_calls, config.grace_calls);
  return total_reward(parts, config.weights);
}

std::string fill_template(std::string_view tmpl,
                          std::initializer_list<std::pair<std::string_view, std::string_view>> slots) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const std::string_view name = tmpl.substr(open + 2, close - open - 2);
    bool replaced = false;
    for (const auto& [slot, value] : slots) {
      if (slot == name) {
        out.append(value);
        replaced = true;
        break;
      }
    }
    if (!replaced) out.append(tmpl.substr(open, close + 2 - open));
    pos = close + 2;
  }
  out.append(tmpl.substr(std::min(pos, tmpl.size())));
  return out;
}

}  // namespace augloop
