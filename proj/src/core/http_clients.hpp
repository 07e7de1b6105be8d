// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include "episode.hpp"
#include "rewards.hpp"
#include "trace_io.hpp"

namespace augloop {

/// Endpoint of an OpenAI-compatible server, e.g. `http://127.0.0.1:8000/v1`.
struct HttpEndpoint {
  std::string base_url;
  std::string model;
  std::string api_key;  // sent as a bearer token when non-empty
  int timeout_seconds = 120;
  int max_in_flight = 8;
  int transport_retries = 2;

  /// Fills empty fields from `<prefix>_URL`, `<prefix>_MODEL`, `<prefix>_API_KEY`.
  void apply_env(std::string_view prefix);
};

/// Posts `body` to base_url + path and returns the decoded JSON reply.
/// Transport failures are retried; the final failure throws
/// Error(`unavailable`). Non-2xx replies throw without retry.
Json post_json(const HttpEndpoint& ep, std::string_view path, const Json& body, ErrorCode unavailable);

/// Extracts a score from a judge reply: a JSON object with `score`, then a
/// single-quoted variant, then a `score: <number>` pattern.
std::optional<double> parse_judge_score(std::string_view reply);

/// Judge backed by a chat-completions model using the bundled prompt
/// templates. Unparseable replies raise Error(kJudgeUnavailable).
class HttpJudge final : public Judge {
 public:
  explicit HttpJudge(HttpEndpoint endpoint);
  double score_vqa(std::string_view question, std::string_view ground_truth,
                   std::string_view answer_window) override;
  double score_consistency(std::string_view trace_text) override;

 private:
  double ask(const std::string& prompt);
  HttpEndpoint ep_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
};

/// Chat-completions policy backend. Images travel as PNG data URLs; tool
/// output is sent as a user turn.
class HttpChatBackend final : public ModelBackend {
 public:
  explicit HttpChatBackend(HttpEndpoint endpoint);
  GeneratedSpan generate(const GenerateRequest& request) override;

  /// Request body for a history; exposed for tests.
  Json build_request(const GenerateRequest& request) const;
  /// Restores a stop string that the server trimmed from the reply.
  static std::string restore_stop(std::string text, const std::vector<std::string>& stops,
                                  const Json& choice);

 private:
  HttpEndpoint ep_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
};

}  // namespace augloop
