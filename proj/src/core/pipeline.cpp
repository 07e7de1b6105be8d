// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipeline.hpp"

#include <random>
#include <sstream>

#include "parallel.hpp"
#include "rng.hpp"

namespace augloop {

std::string_view disposition_name(Disposition d) noexcept {
  switch (d) {
    case Disposition::kUnset: return "unset";
    case Disposition::kKeep: return "keep";
    case Disposition::kSample10pct: return "sample_10pct";
    case Disposition::kRecheckValidity: return "recheck_validity";
    case Disposition::kDrop: return "drop";
  }
  return "?";
}

Disposition disposition_for(int difficulty, int k) {
  if (difficulty <= 0) return Disposition::kSample10pct;
  if (difficulty >= k) return Disposition::kRecheckValidity;
  return Disposition::kKeep;
}

DifficultyRecord passk_difficulty(const QAItem& item, const std::vector<std::string>& attempts, Judge& judge,
                                  std::size_t workers) {
  if (attempts.empty()) throw Error(ErrorCode::kInvalidArgument, "item '" + item.id + "' has no attempts");
  DifficultyRecord r;
  r.item_id = item.id;
  r.k = static_cast<int>(attempts.size());
  r.scores.assign(attempts.size(), 0.0);
  parallel_for(attempts.size(), workers, [&](std::size_t i) {
    r.scores[i] = clamp_unit(judge.score_vqa(item.question, item.answer, utf8_tail(attempts[i], kJudgeWindowChars)));
  });
  for (double s : r.scores) {
    const bool ok = s >= kCorrectThreshold;
    r.correct.push_back(ok);
    if (!ok) ++r.difficulty;
  }
  return r;
}

FilterPartition apply_filter_policy(std::vector<DifficultyRecord> records, std::uint64_t seed) {
  FilterPartition p;
  std::mt19937_64 gen(seed);
  for (DifficultyRecord& r : records) {
    r.disposition = disposition_for(r.difficulty, r.k);
    switch (r.disposition) {
      case Disposition::kSample10pct:
        if (uniform01(gen) < kLevelZeroKeepRate) {
          p.kept.push_back(std::move(r));
        } else {
          p.dropped.push_back(std::move(r));
        }
        break;
      case Disposition::kRecheckValidity:
        p.recheck.push_back(std::move(r));
        break;
      default:
        p.kept.push_back(std::move(r));
        break;
    }
  }
  return p;
}

void resolve_recheck(FilterPartition& partition, const RecheckVerifier& verifier) {
  if (!verifier) return;
  std::vector<DifficultyRecord> still;
  for (DifficultyRecord& r : partition.recheck) {
    const auto verdict = verifier(r);
    if (!verdict) {
      still.push_back(std::move(r));
    } else if (*verdict) {
      r.disposition = Disposition::kKeep;
      partition.kept.push_back(std::move(r));
    } else {
      r.disposition = Disposition::kDrop;
      partition.dropped.push_back(std::move(r));
    }
  }
  partition.recheck = std::move(still);
}

Json difficulty_to_json(const DifficultyRecord& r) {
  Json j;
  j["id"] = r.item_id;
  j["k"] = r.k;
  j["scores"] = r.scores;
  j["correct"] = r.correct;
  j["difficulty"] = r.difficulty;
  j["disposition"] = disposition_name(r.disposition);
  return j;
}

Json filter_summary(const FilterPartition& p, std::uint64_t seed, int k) {
  Json buckets = Json::object();
  std::vector<int> counts(static_cast<std::size_t>(std::max(k, 0)) + 1, 0);
  auto tally = [&](const std::vector<DifficultyRecord>& rs) {
    for (const auto& r : rs) {
      if (r.difficulty >= 0 && r.difficulty <= k) ++counts[static_cast<std::size_t>(r.difficulty)];
    }
  };
  tally(p.kept);
  tally(p.dropped);
  tally(p.recheck);
  for (int d = 0; d <= k; ++d) buckets[std::to_string(d)] = counts[static_cast<std::size_t>(d)];
  Json j;
  j["schema"] = "augloop.filter.v1";
  j["seed"] = seed;
  j["k"] = k;
  j["difficulty_counts"] = std::move(buckets);
  j["kept"] = p.kept.size();
  j["dropped"] = p.dropped.size();
  j["recheck"] = p.recheck.size();
  return j;
}

// ---- synthesis ---------------------------------------------------------------

std::optional<AugmentationOp> pretransform_for(const AugmentationOp& op) {
  if (op.kind == OpKind::kFlip) return op;
  if (op.kind == OpKind::kRotate) {
    const int deg = std::get<RotateParams>(op.params).degrees;
    return AugmentationOp::rotate((360 - deg) % 360);
  }
  return std::nullopt;
}

namespace {

std::string narrate_before(const AugmentationOp& op, int width, int height) {
  std::ostringstream s;
  switch (op.kind) {
    case OpKind::kCrop: {
      const auto& p = std::get<CropParams>(op.params);
      s << "The relevant detail sits in a small part of the " << width << "x" << height
        << " image. I will cut out the box from (" << p.x0 << ", " << p.y0 << ") to (" << p.x1 << ", " << p.y1
        << ") to look at it more closely.";
      break;
    }
    case OpKind::kResizeUp:
      s << "The image is small (" << width << "x" << height << ") and fine text is hard to read. I will enlarge it.";
      break;
    case OpKind::kResizeDown:
      s << "The image is larger than needed. I will shrink it before reading it again.";
      break;
    case OpKind::kRotate:
      s << "The content looks turned on its side. Rotating it by " << std::get<RotateParams>(op.params).degrees
        << " degrees counter-clockwise should put it upright.";
      break;
    case OpKind::kFlip:
      s << "The characters appear mirrored. A " << flip_axis_name(std::get<FlipParams>(op.params).axis)
        << " flip should restore them.";
      break;
    case OpKind::kDenoise:
      s << "The image is speckled with noise. A " << denoise_method_name(std::get<DenoiseParams>(op.params).method)
        << " filter should clean it up.";
      break;
    case OpKind::kEdge:
      s << "The shapes blend into the background. An edge map should make the outlines stand out.";
      break;
  }
  return s.str();
}

std::string narrate_after(const AugmentationOp& op) {
  switch (op.kind) {
    case OpKind::kRotate: return "After rotation the content is upright and readable.";
    case OpKind::kFlip: return "After flipping, the characters read normally.";
    case OpKind::kDenoise: return "The noise is gone and the details are visible.";
    case OpKind::kCrop: return "The cropped region shows the detail clearly.";
    case OpKind::kResizeUp: return "At the larger size the details are legible.";
    case OpKind::kResizeDown: return "The smaller image still shows what is needed.";
    case OpKind::kEdge: return "The outlines are now distinct.";
  }
  return {};
}

}  // namespace

SftTrajectory synth_format_trajectory(const QAItem& qa, const ImageBuffer& image, const AugmentationOp& op,
                                      std::string_view template_id) {
  if (template_id != kFormatTemplateV1) {
    throw Error(ErrorCode::kTemplateUnknown, "unknown template '" + std::string(template_id) + "'");
  }
  auto source = std::make_shared<const ImageBuffer>(image);
  if (const auto pre = pretransform_for(op)) {
    ExecOutcome o = apply_op(image, *pre, image);
    if (!o.ok()) throw Error(o.error().code, o.error().text);
    source = std::make_shared<const ImageBuffer>(o.image());
  }
  ExecOutcome result = apply_op(*source, op, *source);
  if (!result.ok()) throw Error(result.error().code, result.error().text);
  auto produced = std::make_shared<const ImageBuffer>(result.image());

  SftTrajectory out;
  out.item_id = qa.id;
  out.op = op;
  out.source_image = source;
  EpisodeTrace& t = out.trace;
  t.trace_id = qa.id + "/sft";
  t.question = qa.question;
  t.history.push_back({Role::kSystem, default_system_prompt(full_vocabulary()), {}});
  Message user{Role::kUser, std::string(kImagePlaceholder) + qa.question, {}};
  user.attachments.push_back(Attachment::of(source, 0));
  t.history.push_back(std::move(user));

  const std::string call = render_call(op);
  t.history.push_back({Role::kAssistant,
                       std::string(kThinkOpen) + narrate_before(op, source->width(), source->height()) +
                           std::string(kThinkClose) + "\n" + std::string(kCodeOpen) + "\n" + call + "\n" +
                           std::string(kCodeClose),
                       {}});
  Message output{Role::kToolOutput,
                 std::string(kOutputOpen) + std::string(kImagePlaceholder) + std::string(kOutputClose),
                 {}};
  output.attachments.push_back(Attachment::of(produced, 1));
  t.history.push_back(std::move(output));
  t.history.push_back({Role::kAssistant,
                       std::string(kThinkOpen) + narrate_after(op) + std::string(kThinkClose) + "\n" +
                           std::string(kAnswerOpen) + qa.answer + std::string(kAnswerClose),
                       {}});

  CallRecord rec;
  rec.raw_text = "\n" + call + "\n";
  rec.status = CallStatus::kExecuted;
  rec.op = op;
  rec.input_generation = 0;
  rec.result_generation = 1;
  t.calls.push_back(std::move(rec));
  t.k = 1;
  t.final_answer = qa.answer;
  t.terminated_by = Termination::kAnswer;
  out.text = trajectory_text(t.history);
  return out;
}

}  // namespace augloop
