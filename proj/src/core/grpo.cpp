// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "parallel.hpp"

namespace augloop {

std::string_view span_kind_name(SpanKind kind) noexcept {
  switch (kind) {
    case SpanKind::kPrompt: return "prompt";
    case SpanKind::kReasoning: return "reasoning";
    case SpanKind::kCall: return "call";
    case SpanKind::kAnswer: return "answer";
    case SpanKind::kOutput: return "output";
  }
  return "?";
}

std::string_view norm_mode_name(NormMode mode) noexcept {
  return mode == NormMode::kGroup ? "group" : "trajectory";
}

std::optional<NormMode> norm_mode_from_name(std::string_view name) noexcept {
  if (name == "group") return NormMode::kGroup;
  if (name == "trajectory") return NormMode::kTrajectory;
  return std::nullopt;
}

std::size_t codepoint_length(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (c >= 0xF0 && c < 0xF8) len = 4;
    else if (c >= 0xE0) len = c < 0xF0 ? 3 : 1;
    else if (c >= 0xC0) len = 2;
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    i += len;
    ++n;
  }
  return n;
}

std::string LossSequence::text() const {
  std::string out;
  for (const auto& s : spans) out += s.text;
  return out;
}

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kStructureInvalid, "trace structure: " + what);
}

bool is_output_block(std::string_view text) {
  return text.size() >= kOutputOpen.size() + kOutputClose.size() && text.starts_with(kOutputOpen) &&
         text.ends_with(kOutputClose) &&
         text.find(kOutputClose) == text.size() - kOutputClose.size();
}

struct Piece {
  std::size_t begin, end;
  SpanKind kind;
};

// Splits one assistant message into reasoning, call and answer pieces.
std::vector<Piece> split_assistant(std::string_view text) {
  std::vector<Piece> marked;
  for (const Span& s : scan_tags(text).code_spans) marked.push_back({s.first, s.second, SpanKind::kCall});
  if (const auto open = text.find(kAnswerOpen); open != std::string_view::npos) {
    const auto close = text.find(kAnswerClose, open + kAnswerOpen.size());
    const std::size_t end = close == std::string_view::npos ? text.size() : close + kAnswerClose.size();
    const bool overlaps = std::any_of(marked.begin(), marked.end(), [&](const Piece& p) {
      return open < p.end && p.begin < end;
    });
    if (!overlaps) marked.push_back({open, end, SpanKind::kAnswer});
  }
  std::sort(marked.begin(), marked.end(), [](const Piece& a, const Piece& b) { return a.begin < b.begin; });
  std::vector<Piece> out;
  std::size_t pos = 0;
  for (const Piece& p : marked) {
    if (p.begin > pos) out.push_back({pos, p.begin, SpanKind::kReasoning});
    out.push_back(p);
    pos = p.end;
  }
  if (pos < text.size()) out.push_back({pos, text.size(), SpanKind::kReasoning});
  return out;
}

}  // namespace

void validate_structure(const EpisodeTrace& trace) {
  const ChatHistory& h = trace.history;
  if (h.size() < 2) invalid("history needs a system and a user message");
  if (h[0].role != Role::kSystem) invalid("message 0 must be the system prompt");
  if (h[1].role != Role::kUser) invalid("message 1 must be the user query");
  for (std::size_t i = 2; i < h.size(); ++i) {
    const Message& m = h[i];
    switch (m.role) {
      case Role::kSystem:
        invalid("system message at position " + std::to_string(i));
      case Role::kToolOutput: {
        if (h[i - 1].role != Role::kAssistant) {
          invalid("tool message at position " + std::to_string(i) + " does not follow an assistant message");
        }
        if (scan_tags(h[i - 1].text).code_spans.size() != 1) {
          invalid("tool message at position " + std::to_string(i) +
                  " follows an assistant message without exactly one code block");
        }
        if (!is_output_block(m.text)) {
          invalid("tool message at position " + std::to_string(i) + " is not a single output block");
        }
        break;
      }
      case Role::kUser:
        if (h[i - 1].role == Role::kUser) invalid("consecutive user messages at " + std::to_string(i));
        break;
      case Role::kAssistant:
        if (h[i - 1].role == Role::kAssistant) {
          invalid("consecutive assistant messages at " + std::to_string(i));
        }
        break;
    }
  }
}

LossSequence build_loss_sequence(const EpisodeTrace& trace) {
  validate_structure(trace);
  LossSequence seq;
  std::size_t offset = 0;
  auto push = [&](SpanKind kind, std::size_t index, std::string_view text) {
    if (text.empty()) return;
    LossSpan s;
    s.kind = kind;
    s.in_loss = kind != SpanKind::kOutput;
    s.message_index = index;
    s.text = std::string(text);
    s.offset = offset;
    s.length = codepoint_length(text);
    offset += s.length;
    (s.in_loss ? seq.in_loss_length : seq.excluded_length) += s.length;
    seq.spans.push_back(std::move(s));
  };
  for (std::size_t i = 0; i < trace.history.size(); ++i) {
    const Message& m = trace.history[i];
    switch (m.role) {
      case Role::kSystem:
      case Role::kUser:
        push(SpanKind::kPrompt, i, m.text);
        if (i == 1) {
          for (const Attachment& a : m.attachments) seq.excluded_attachments.push_back(a.sha256);
        }
        break;
      case Role::kToolOutput:
        push(SpanKind::kOutput, i, m.text);
        break;
      case Role::kAssistant:
        for (const Piece& p : split_assistant(m.text)) {
          push(p.kind, i, std::string_view(m.text).substr(p.begin, p.end - p.begin));
        }
        break;
    }
  }
  return seq;
}

std::vector<double> group_normalize(const std::vector<double>& rewards, NormMode mode,
                                    const std::vector<std::size_t>& lengths) {
  const std::size_t g = rewards.size();
  if (g < 2) throw Error(ErrorCode::kGroupTooSmall, "group normalization needs at least 2 rollouts");
  for (double r : rewards) {
    if (!std::isfinite(r)) throw Error(ErrorCode::kInvalidArgument, "rewards must be finite");
  }
  std::vector<double> w(g, 1.0);
  if (mode == NormMode::kTrajectory) {
    if (lengths.size() != g) {
      throw Error(ErrorCode::kLengthMismatch, "trajectory normalization needs one length per reward");
    }
    for (std::size_t i = 0; i < g; ++i) w[i] = static_cast<double>(lengths[i]);
  }
  double wsum = 0, mean = 0;
  for (std::size_t i = 0; i < g; ++i) {
    wsum += w[i];
    mean += w[i] * rewards[i];
  }
  std::vector<double> out(g, 0.0);
  if (wsum <= 0) return out;
  mean /= wsum;
  double var = 0;
  for (std::size_t i = 0; i < g; ++i) var += w[i] * (rewards[i] - mean) * (rewards[i] - mean);
  const double sd = std::sqrt(var / wsum);
  if (sd < kStdFloor) return out;
  for (std::size_t i = 0; i < g; ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

double KlRecord::sum() const {
  double s = 0;
  for (double v : values) s += v;
  return s;
}

KlRecord kl_term(const std::vector<double>& logp_policy, const std::vector<double>& logp_ref, double beta) {
  if (logp_policy.size() != logp_ref.size()) {
    throw Error(ErrorCode::kLengthMismatch, "policy and reference log-probs differ in length (" +
                                                std::to_string(logp_policy.size()) + " vs " +
                                                std::to_string(logp_ref.size()) + ")");
  }
  KlRecord rec;
  rec.beta = beta;
  rec.values.resize(logp_policy.size());
  for (std::size_t i = 0; i < logp_policy.size(); ++i) {
    const double d = logp_ref[i] - logp_policy[i];
    // expm1 keeps precision near zero; clamp guards against rounding below zero.
    rec.values[i] = std::max(0.0, std::expm1(d) - d);
  }
  return rec;
}

std::vector<RolloutGroup> group_records(std::vector<TraceRecord> records) {
  std::vector<RolloutGroup> groups;
  std::map<std::string, std::size_t> index;
  for (TraceRecord& r : records) {
    const std::string key = r.group_id ? *r.group_id : r.item_id;
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) groups.push_back(RolloutGroup{key, {}});
    groups[it->second].traces.push_back(std::move(r));
  }
  return groups;
}

std::vector<Json> assemble_batch(const std::vector<RolloutGroup>& groups, const BatchConfig& config) {
  if (!(config.beta >= 0) || !std::isfinite(config.beta)) {
    throw Error(ErrorCode::kConfigInvalid, "beta must be finite and non-negative");
  }
  struct Item {
    const RolloutGroup* group;
    const TraceRecord* record;
    LossSequence seq;
    double advantage = 0;
    std::optional<KlRecord> kl;
  };
  std::vector<Item> items;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // per group [begin, end) into items
  for (const RolloutGroup& g : groups) {
    const std::size_t begin = items.size();
    for (const TraceRecord& r : g.traces) {
      if (!r.rewards) {
        throw Error(ErrorCode::kStructureInvalid, "trace '" + r.trace.trace_id + "' has no rewards");
      }
      items.push_back(Item{&g, &r, {}, 0, std::nullopt});
    }
    ranges.emplace_back(begin, items.size());
  }

  parallel_for(items.size(), config.workers, [&](std::size_t i) {
    Item& it = items[i];
    it.seq = build_loss_sequence(it.record->trace);
    if (!it.record->logp_policy.empty() || !it.record->logp_ref.empty()) {
      it.kl = kl_term(it.record->logp_policy, it.record->logp_ref, config.beta);
    }
  });

  for (const auto& [begin, end] : ranges) {
    std::vector<double> rewards;
    std::vector<std::size_t> lengths;
    for (std::size_t i = begin; i < end; ++i) {
      rewards.push_back(items[i].record->rewards->total);
      lengths.push_back(items[i].seq.in_loss_length);
    }
    const auto adv = group_normalize(rewards, config.mode, lengths);
    for (std::size_t i = begin; i < end; ++i) items[i].advantage = adv[i - begin];
  }

  std::size_t normalizer = 0;
  for (const Item& it : items) normalizer += it.seq.in_loss_length;

  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return items[a].record->trace.trace_id < items[b].record->trace.trace_id;
  });

  std::vector<Json> out;
  Json header;
  header["schema"] = kGrpoSchema;
  header["record"] = "batch";
  header["beta"] = config.beta;
  header["normalization"] = norm_mode_name(config.mode);
  header["position_unit"] = "codepoint";
  header["groups"] = groups.size();
  header["traces"] = items.size();
  header["normalizer"] = normalizer;
  out.push_back(std::move(header));

  for (std::size_t idx : order) {
    const Item& it = items[idx];
    Json j;
    j["schema"] = kGrpoSchema;
    j["record"] = "trace";
    j["group_id"] = it.group->group_id;
    j["trace_id"] = it.record->trace.trace_id;
    j["reward"] = it.record->rewards->total;
    j["advantage"] = it.advantage;
    j["in_loss_length"] = it.seq.in_loss_length;
    j["excluded_length"] = it.seq.excluded_length;
    j["loss_weight"] = normalizer == 0 ? 0.0
                                       : static_cast<double>(it.seq.in_loss_length) /
                                             static_cast<double>(normalizer);
    Json spans = Json::array();
    for (const LossSpan& s : it.seq.spans) {
      Json sj;
      sj["kind"] = span_kind_name(s.kind);
      sj["in_loss"] = s.in_loss;
      sj["offset"] = s.offset;
      sj["length"] = s.length;
      sj["advantage"] = s.in_loss ? it.advantage : 0.0;
      sj["text"] = s.text;
      spans.push_back(std::move(sj));
    }
    j["spans"] = std::move(spans);
    j["excluded_attachments"] = it.seq.excluded_attachments;
    if (it.kl) {
      j["kl"] = it.kl->values;
      j["kl_sum"] = it.kl->sum();
    } else {
      j["kl"] = nullptr;
      j["kl_sum"] = nullptr;
    }
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace augloop
