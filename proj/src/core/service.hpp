// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "api_ops.hpp"

namespace augloop {

/// HTTP status used for an error envelope.
int http_status_for(ErrorCode code) noexcept;

struct ServiceReply {
  int status = 200;
  Json body;
};

/// Handles one request without a socket. `path` is the endpoint path,
/// `token` the X-Augloop-Token header (empty when absent).
ServiceReply handle_request(const RuntimeConfig& rc, std::string_view method, std::string_view path,
                            std::string_view body, std::string_view token);

/// JSON-over-HTTP front end for the wire operations.
///
///   GET  /v1/health        -> {status, version}
///   POST /v1/augment       -> op_augment
///   POST /v1/rewards       -> op_rewards
///   POST /v1/grpo/batch    -> op_grpo_batch
///   POST /v1/episode       -> op_episode
///
/// Requests are `{id, payload}`; replies `{id, ok, result}` or
/// `{id, ok: false, error: {code, numeric, message}}`.
class Service {
 public:
  explicit Service(RuntimeConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the socket. Port 0 picks a free port. Throws Error(kBindFailure).
  int bind();
  /// Serves until stop(). Requires bind().
  void run();
  /// bind() + run() on a background thread; returns the bound port.
  int start_background();
  void stop();
  int port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  RuntimeConfig config_;
  int port_ = 0;
};

}  // namespace augloop
