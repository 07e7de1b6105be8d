// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace augloop::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kExitUsage = 2;

/// Raised for malformed environment values; maps to the config exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Objects merge key by key, anything else in `over` replaces `base`.
/// Null values in `over` are ignored.
Json overlay(Json base, const Json& over);

/// Environment layer. `lookup` returns nullptr for unset variables.
///
///   AUGLOOP_CONFIG_BACKEND        backend
///   AUGLOOP_CONFIG_JUDGE          judge
///   AUGLOOP_WORKERS               workers
///   AUGLOOP_MAX_CALLS             episode.max_calls
///   AUGLOOP_GRPO_BETA             grpo.beta
///   AUGLOOP_SERVICE_HOST          service.host
///   AUGLOOP_SERVICE_PORT          service.port
///   AUGLOOP_SERVICE_TOKEN         service.token
///   AUGLOOP_MAX_PAYLOAD_BYTES     service.max_payload_bytes
Json env_layer(const std::function<const char*(const char*)>& lookup);

/// defaults < file < environment < flags.
Json merge_config(const Json& defaults, const Json& file, const Json& env, const Json& flags);

/// Process exit code for a library status (0 stays 0).
int exit_code_for_status(int status) noexcept;

}  // namespace augloop::cli
