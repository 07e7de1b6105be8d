// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "episode.hpp"

#include <algorithm>
#include <sstream>

namespace augloop {

std::string_view role_name(Role role) noexcept {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
    case Role::kToolOutput: return "tool";
  }
  return "?";
}

std::optional<Role> role_from_name(std::string_view name) noexcept {
  for (Role r : {Role::kSystem, Role::kUser, Role::kAssistant, Role::kToolOutput}) {
    if (role_name(r) == name) return r;
  }
  return std::nullopt;
}

std::string_view termination_name(Termination t) noexcept {
  switch (t) {
    case Termination::kAnswer: return "answer";
    case Termination::kForced: return "forced";
    case Termination::kContextExhausted: return "context_exhausted";
  }
  return "?";
}

std::optional<Termination> termination_from_name(std::string_view name) noexcept {
  for (Termination t : {Termination::kAnswer, Termination::kForced, Termination::kContextExhausted}) {
    if (termination_name(t) == name) return t;
  }
  return std::nullopt;
}

std::string_view call_status_name(CallStatus s) noexcept {
  switch (s) {
    case CallStatus::kExecuted: return "executed";
    case CallStatus::kParseError: return "parse_error";
    case CallStatus::kExecError: return "exec_error";
    case CallStatus::kNotExecuted: return "not_executed";
  }
  return "?";
}

std::optional<CallStatus> call_status_from_name(std::string_view name) noexcept {
  for (CallStatus s : {CallStatus::kExecuted, CallStatus::kParseError, CallStatus::kExecError,
                       CallStatus::kNotExecuted}) {
    if (call_status_name(s) == name) return s;
  }
  return std::nullopt;
}

Attachment Attachment::of(std::shared_ptr<const ImageBuffer> image, int generation) {
  Attachment a;
  a.generation = generation;
  a.sha256 = content_hash(*image);
  a.width = image->width();
  a.height = image->height();
  a.channels = image->channels();
  a.image = std::move(image);
  return a;
}

// ---- scripted backend --------------------------------------------------------

ScriptedBackend ScriptedBackend::from_text(std::string_view text) {
  std::vector<std::string> spans;
  std::string current;
  bool any = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line == "----") {
      if (!current.empty() && current.back() == '\n') current.pop_back();
      spans.push_back(std::move(current));
      current.clear();
      any = false;
    } else {
      current.append(line);
      if (eol < text.size()) current.push_back('\n');
      any = true;
    }
    pos = eol + 1;
  }
  if (any) {
    while (!current.empty() && current.back() == '\n') current.pop_back();
    spans.push_back(std::move(current));
  }
  return ScriptedBackend(std::move(spans));
}

GeneratedSpan ScriptedBackend::generate(const GenerateRequest& request) {
  const auto index = static_cast<std::size_t>(
      std::count_if(request.history.begin(), request.history.end(),
                    [](const Message& m) { return m.role == Role::kAssistant; }));
  if (index >= spans_.size()) {
    throw Error(ErrorCode::kBackendUnavailable,
                "scripted backend exhausted after " + std::to_string(spans_.size()) + " spans");
  }
  GeneratedSpan out;
  out.text = spans_[index];
  out.finish_reason = "stop";
  if (auto stop = find_stop(out.text, request.stop)) {
    out.text.resize(stop->position + stop->stop.size());
  }
  return out;
}

// ---- token accounting ----------------------------------------------------------

TokenEstimator TokenEstimator::standard() {
  TokenEstimator e;
  e.text = [](std::string_view s) { return static_cast<std::int64_t>((s.size() + 3) / 4); };
  e.image = [](int w, int h) {
    return (static_cast<std::int64_t>(w) * h + 783) / 784 + 2;
  };
  return e;
}

std::int64_t TokenEstimator::message(const Message& m) const {
  std::int64_t total = text(m.text);
  for (const auto& a : m.attachments) total += image(a.width, a.height);
  return total;
}

std::int64_t TokenEstimator::history(const ChatHistory& h) const {
  std::int64_t total = 0;
  for (const auto& m : h) total += message(m);
  return total;
}

// ---- config ---------------------------------------------------------------------

void EpisodeConfig::validate() const {
  if (max_calls < 1) throw Error(ErrorCode::kConfigInvalid, "max_calls must be >= 1");
  if (grace_calls < 0 || grace_calls >= max_calls) {
    throw Error(ErrorCode::kConfigInvalid, "grace_calls must be in [0, max_calls)");
  }
  if (max_completion_tokens <= 0 || max_context_tokens <= 0) {
    throw Error(ErrorCode::kConfigInvalid, "token limits must be positive");
  }
  if (stop_set.empty()) throw Error(ErrorCode::kConfigInvalid, "stop set must not be empty");
  if (!estimator.text || !estimator.image) {
    throw Error(ErrorCode::kConfigInvalid, "token estimator is incomplete");
  }
}

std::string default_system_prompt(const OpVocabulary& vocabulary) {
  std::ostringstream out;
  out << "You are a careful visual reasoning assistant. Reason inside <think></think> and "
         "give the final answer inside <answer></answer>.\n";
  if (vocabulary.empty()) {
    out << "Image operations are disabled for this query; answer from the image as given.\n";
    return out.str();
  }
  out << "If the image is hard to read, you may call one image operation inside "
         "<code></code>. The result is returned inside <output></output> and later calls "
         "apply to the latest image.\nAvailable operations:\n";
  for (OpKind k : kAllOpKinds) {
    if (!vocabulary.count(k)) continue;
    switch (k) {
      case OpKind::kCrop:
        out << "  crop(image, x0, y0, x1, y1)  # keep the pixel box [x0, x1) x [y0, y1)\n";
        break;
      case OpKind::kResizeUp:
        out << "  resize_up(image, factor)  # enlarge, factor in [1, 8]\n";
        break;
      case OpKind::kResizeDown:
        out << "  resize_down(image, factor)  # shrink, factor in [1/8, 1]\n";
        break;
      case OpKind::kRotate:
        out << "  rotate(image, degrees)  # counter-clockwise, degrees in {90, 180, 270}\n";
        break;
      case OpKind::kFlip:
        out << "  flip(image, axis=\"horizontal\")  # axis: horizontal | vertical\n";
        break;
      case OpKind::kDenoise:
        out << "  denoise(image, method=\"median\", kernel_size=3)  # method: gaussian | median | "
               "bilateral, odd kernel_size >= 3\n";
        break;
      case OpKind::kEdge:
        out << "  edge(image)  # Sobel edge map\n";
        break;
    }
  }
  out << "Example: <code>\nimage_path = denoise(image_path, method=\"median\", kernel_size=3)\n</code>\n";
  return out.str();
}

// ---- loop -------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool is_rescale(OpKind k) { return k == OpKind::kResizeUp || k == OpKind::kResizeDown; }

class Episode {
 public:
  Episode(ModelBackend& backend, const EpisodeQuery& query, const EpisodeConfig& config)
      : backend_(backend), config_(config) {
    if (!query.image || query.image->empty()) {
      throw Error(ErrorCode::kImageUndecodable, "query image is missing or empty");
    }
    config_.validate();
    current_ = query.image;
    recall_source_ = query.full_resolution ? query.full_resolution : query.image;
    trace_.question = query.question;
    trace_.history.push_back(
        {Role::kSystem, config_.system_prompt.value_or(default_system_prompt(config_.vocabulary)), {}});
    Message user{Role::kUser, std::string(kImagePlaceholder) + query.question, {}};
    user.attachments.push_back(Attachment::of(query.image, 0));
    trace_.history.push_back(std::move(user));
  }

  EpisodeTrace run() {
    while (true) {
      const std::int64_t context = config_.estimator.history(trace_.history);
      if (context > config_.max_context_tokens) return force(Termination::kContextExhausted);
      const std::int64_t remaining = config_.max_completion_tokens - completion_used_;
      if (remaining <= 0) return force(Termination::kForced);

      const std::string text =
          generate(config_.stop_set, std::min(remaining, config_.max_context_tokens - context));
      const auto stop = find_stop(text, config_.stop_set);
      if (!stop || stop->stop != kCodeClose) {
        trace_.final_answer = extract_final_answer(text);
        trace_.terminated_by = Termination::kAnswer;
        return finish();
      }

      ++trace_.k;
      CallRecord call;
      const std::size_t open = text.rfind(kCodeOpen, stop->position);
      std::optional<CallError> structural;
      if (open == std::string::npos) {
        call.raw_text = text.substr(0, stop->position);
        structural = CallError{ErrorCode::kSyntaxMalformed,
                               "error[SyntaxMalformed]: code block has no opening <code> tag"};
      } else {
        call.raw_text = text.substr(open + kCodeOpen.size(), stop->position - open - kCodeOpen.size());
      }
      call.input_generation = generation_;

      if (trace_.k > config_.max_calls) {
        if (!structural) {
          const CallResult late = extract_call(call.raw_text, config_.vocabulary);
          if (const auto* parsed = std::get_if<ParsedCall>(&late)) call.op = parsed->op;
        }
        call.status = CallStatus::kNotExecuted;
        trace_.calls.push_back(std::move(call));
        return force(Termination::kForced);
      }

      const CallResult parsed =
          structural ? CallResult{*structural} : extract_call(call.raw_text, config_.vocabulary);
      if (const auto* err = std::get_if<CallError>(&parsed)) {
        call.status = CallStatus::kParseError;
        call.error_code = err->code;
        call.error_text = err->text;
        append_output_text(err->text);
      } else {
        const AugmentationOp& op = std::get<ParsedCall>(parsed).op;
        call.op = op;
        ExecOutcome outcome = apply_op(*current_, op, *recall_source_, config_.augment, generation_);
        if (outcome.ok()) {
          auto image = std::make_shared<const ImageBuffer>(std::move(std::get<ImageBuffer>(outcome.result)));
          ++generation_;
          call.status = CallStatus::kExecuted;
          call.result_generation = generation_;
          if (!is_rescale(op.kind)) recall_source_ = image;
          current_ = image;
          Message out{Role::kToolOutput,
                      std::string(kOutputOpen) + std::string(kImagePlaceholder) + std::string(kOutputClose),
                      {}};
          out.attachments.push_back(Attachment::of(image, generation_));
          trace_.history.push_back(std::move(out));
        } else {
          call.status = CallStatus::kExecError;
          call.error_code = outcome.error().code;
          call.error_text = outcome.error().text;
          append_output_text(outcome.error().text);
        }
      }
      trace_.calls.push_back(std::move(call));
    }
  }

 private:
  std::string generate(const std::vector<std::string>& stops, std::int64_t max_tokens) {
    GenerateRequest request{trace_.history, stops, config_.sampling, max_tokens, config_.vocabulary};
    GeneratedSpan span;
    try {
      span = backend_.generate(request);
    } catch (const Error& e) {
      throw EpisodeAborted(e.code(), e.what(), trace_);
    } catch (const std::exception& e) {
      throw EpisodeAborted(ErrorCode::kBackendUnavailable, e.what(), trace_);
    }
    if (auto stop = find_stop(span.text, stops)) span.text.resize(stop->position + stop->stop.size());
    completion_used_ += config_.estimator.text(span.text);
    trace_.history.push_back({Role::kAssistant, span.text, {}});
    return span.text;
  }

  void append_output_text(const std::string& text) {
    trace_.history.push_back(
        {Role::kToolOutput, std::string(kOutputOpen) + text + std::string(kOutputClose), {}});
  }

  EpisodeTrace force(Termination reason) {
    trace_.history.push_back({Role::kUser, std::string(kForcedAnswerMessage), {}});
    trace_.terminated_by = reason;
    const std::int64_t context = config_.estimator.history(trace_.history);
    if (context > config_.max_context_tokens) {
      trace_.terminated_by = Termination::kContextExhausted;
      return finish();
    }
    const std::int64_t budget = std::max<std::int64_t>(
        1, std::min(config_.max_completion_tokens - completion_used_, config_.max_context_tokens - context));
    const std::string text = generate({std::string(kAnswerClose)}, budget);
    // Code blocks in the forced reply are never executed but still count.
    for (const Span& s : scan_tags(text).code_spans) {
      CallRecord call;
      call.raw_text = std::string(block_inner(text, s, kCodeOpen, kCodeClose));
      call.status = CallStatus::kNotExecuted;
      call.input_generation = generation_;
      const CallResult late = extract_call(call.raw_text, config_.vocabulary);
      if (const auto* parsed = std::get_if<ParsedCall>(&late)) call.op = parsed->op;
      trace_.calls.push_back(std::move(call));
      ++trace_.k;
    }
    trace_.final_answer = extract_final_answer(text);
    return finish();
  }

  EpisodeTrace finish() { return std::move(trace_); }

  ModelBackend& backend_;
  EpisodeConfig config_;
  EpisodeTrace trace_;
  std::shared_ptr<const ImageBuffer> current_;
  std::shared_ptr<const ImageBuffer> recall_source_;
  int generation_ = 0;
  std::int64_t completion_used_ = 0;
};

}  // namespace

std::string extract_final_answer(std::string_view span) {
  const TagScan scan = scan_tags(span);
  if (scan.has_answer) return trim(scan.answer_text);
  if (const auto open = span.find(kAnswerOpen); open != std::string_view::npos) {
    return trim(span.substr(open + kAnswerOpen.size()));
  }
  return trim(span);
}

EpisodeTrace run_episode(ModelBackend& backend, const EpisodeQuery& query, const EpisodeConfig& config) {
  Episode episode(backend, query, config);
  return episode.run();
}

std::string render_history(const ChatHistory& history) {
  std::string out;
  for (const auto& m : history) {
    out += "<|im_start|>";
    out += role_name(m.role);
    out += '\n';
    out += m.text;
    out += "<|im_end|>\n";
  }
  return out;
}

std::string trajectory_text(const ChatHistory& history) {
  std::string out;
  for (const auto& m : history) out += m.text;
  return out;
}

std::string assistant_text(const ChatHistory& history) {
  std::string out;
  for (const auto& m : history) {
    if (m.role == Role::kAssistant) out += m.text;
  }
  return out;
}

}  // namespace augloop
