// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "augment.hpp"
#include "call_parser.hpp"
#include "image.hpp"
#include "ops.hpp"

namespace augloop {

// Appended as a user-role message when the call or context budget runs out.
inline constexpr std::string_view kForcedAnswerMessage = "OK, I have to give the final answer directly";

enum class Role { kSystem, kUser, kAssistant, kToolOutput };

std::string_view role_name(Role role) noexcept;
std::optional<Role> role_from_name(std::string_view name) noexcept;

/// An image attached to a message. The message text carries one `<image>`
/// placeholder per attachment, in order.
struct Attachment {
  int generation = 0;  // 0 = query image, n = result of the n-th successful call
  std::string sha256;
  int width = 0;
  int height = 0;
  int channels = 0;
  std::string ref;  // content-addressed path, when persisted
  std::shared_ptr<const ImageBuffer> image;  // may be null for traces loaded without pixels

  static Attachment of(std::shared_ptr<const ImageBuffer> image, int generation);
};

struct Message {
  Role role = Role::kUser;
  std::string text;
  std::vector<Attachment> attachments;
};

using ChatHistory = std::vector<Message>;

struct SamplingParams {
  double temperature = 1.0;
  double top_p = 0.9;
  int top_k = 50;
  std::uint64_t seed = 0;
};

// ---- backend contract --------------------------------------------------------

struct GenerateRequest {
  const ChatHistory& history;
  std::vector<std::string> stop;
  SamplingParams sampling;
  std::int64_t max_tokens = 0;
  OpVocabulary available_ops;
};

struct GeneratedSpan {
  std::string text;
  std::string finish_reason;  // "stop", "length", ...
  std::vector<double> logprobs;
};

/// A text generator. Implementations must honor `stop`: the returned text
/// contains a stop string at most once, as its terminal suffix. `generate`
/// may be called concurrently from many episodes; a backend that cannot
/// support that must override `serialized()`.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual GeneratedSpan generate(const GenerateRequest& request) = 0;
  virtual bool serialized() const { return false; }
};

/// Plays a fixed list of spans. The next span is chosen by the number of
/// assistant messages already in the history, so one instance can serve any
/// number of concurrent episodes.
class ScriptedBackend final : public ModelBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> spans) : spans_(std::move(spans)) {}

  /// Spans separated by lines containing exactly `----`.
  static ScriptedBackend from_text(std::string_view text);

  GeneratedSpan generate(const GenerateRequest& request) override;
  const std::vector<std::string>& spans() const { return spans_; }

 private:
  std::vector<std::string> spans_;
};

// ---- token accounting ----------------------------------------------------------

/// Default estimate: ceil(bytes / 4) per text, plus ceil(w*h / 784) + 2 per
/// attached image (one token per 28x28 patch).
struct TokenEstimator {
  std::function<std::int64_t(std::string_view)> text;
  std::function<std::int64_t(int width, int height)> image;

  static TokenEstimator standard();
  std::int64_t message(const Message& m) const;
  std::int64_t history(const ChatHistory& h) const;
};

// ---- episodes -----------------------------------------------------------------

struct EpisodeConfig {
  int max_calls = 8;    // K
  int grace_calls = 2;  // calls that keep full success reward
  std::int64_t max_completion_tokens = 3196;
  std::int64_t max_context_tokens = 10240;
  SamplingParams sampling;
  AugmentConfig augment;
  OpVocabulary vocabulary = full_vocabulary();
  std::vector<std::string> stop_set = default_stop_set();
  std::optional<std::string> system_prompt;  // default: generated from the vocabulary
  TokenEstimator estimator = TokenEstimator::standard();

  /// Throws Error(kConfigInvalid).
  void validate() const;
};

std::string default_system_prompt(const OpVocabulary& vocabulary);

struct EpisodeQuery {
  std::shared_ptr<const ImageBuffer> image;
  std::string question;
  /// Full-resolution source when `image` was downsampled for compression.
  std::shared_ptr<const ImageBuffer> full_resolution;
};

enum class Termination { kAnswer, kForced, kContextExhausted };
std::string_view termination_name(Termination t) noexcept;
std::optional<Termination> termination_from_name(std::string_view name) noexcept;

enum class CallStatus { kExecuted, kParseError, kExecError, kNotExecuted };
std::string_view call_status_name(CallStatus s) noexcept;
std::optional<CallStatus> call_status_from_name(std::string_view name) noexcept;

struct CallRecord {
  std::string raw_text;  // contents of the code block
  CallStatus status = CallStatus::kNotExecuted;
  std::optional<AugmentationOp> op;
  std::optional<ErrorCode> error_code;
  std::string error_text;
  int input_generation = -1;
  int result_generation = -1;
};

struct EpisodeTrace {
  std::string trace_id;
  std::string question;
  ChatHistory history;
  std::vector<CallRecord> calls;
  std::string final_answer;
  int k = 0;
  Termination terminated_by = Termination::kAnswer;
};

/// Thrown when the backend fails mid-episode; carries everything recorded so far.
class EpisodeAborted : public Error {
 public:
  EpisodeAborted(ErrorCode code, const std::string& message, EpisodeTrace partial)
      : Error(code, message), partial_(std::move(partial)) {}
  const EpisodeTrace& partial() const noexcept { return partial_; }

 private:
  EpisodeTrace partial_;
};

/// Runs generate -> stop -> parse -> execute -> re-inject until an answer or
/// forced termination.
EpisodeTrace run_episode(ModelBackend& backend, const EpisodeQuery& query,
                         const EpisodeConfig& config);

/// `<|im_start|>{role}\n{text}<|im_end|>\n` per message; images appear as the
/// `<image>` placeholders already present in the text.
std::string render_history(const ChatHistory& history);

/// The trajectory as the policy sees it: message texts concatenated without
/// role delimiters.
std::string trajectory_text(const ChatHistory& history);

/// Text generated by the policy only (assistant messages, concatenated).
std::string assistant_text(const ChatHistory& history);

/// Final-answer extraction shared by the loop and trace loaders: contents of
/// the first answer block, else the trimmed text.
std::string extract_final_answer(std::string_view assistant_span);

}  // namespace augloop
