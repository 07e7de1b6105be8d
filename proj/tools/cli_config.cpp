// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli_config.hpp"

#include <charconv>
#include <cstdint>

namespace augloop::cli {

Json overlay(Json base, const Json& over) {
  if (over.is_null()) return base;
  if (!base.is_object() || !over.is_object()) return over;
  for (const auto& [key, value] : over.items()) {
    if (value.is_null()) continue;
    base[key] = base.contains(key) ? overlay(base[key], value) : value;
  }
  return base;
}

namespace {

std::int64_t parse_int(const char* name, const char* text) {
  std::int64_t v = 0;
  const char* end = text + std::char_traits<char>::length(text);
  const auto [ptr, ec] = std::from_chars(text, end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(std::string(name) + " is not an integer: " + text);
  return v;
}

double parse_real(const char* name, const char* text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != std::char_traits<char>::length(text)) throw std::invalid_argument(name);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(name) + " is not a number: " + text);
  }
}

}  // namespace

Json env_layer(const std::function<const char*(const char*)>& lookup) {
  Json j = Json::object();
  auto get = [&](const char* name) -> const char* {
    const char* v = lookup(name);
    return v && *v ? v : nullptr;
  };
  if (const char* v = get("AUGLOOP_CONFIG_BACKEND")) j["backend"] = v;
  if (const char* v = get("AUGLOOP_CONFIG_JUDGE")) j["judge"] = v;
  if (const char* v = get("AUGLOOP_WORKERS")) j["workers"] = parse_int("AUGLOOP_WORKERS", v);
  if (const char* v = get("AUGLOOP_MAX_CALLS")) j["episode"]["max_calls"] = parse_int("AUGLOOP_MAX_CALLS", v);
  if (const char* v = get("AUGLOOP_GRPO_BETA")) j["grpo"]["beta"] = parse_real("AUGLOOP_GRPO_BETA", v);
  if (const char* v = get("AUGLOOP_SERVICE_HOST")) j["service"]["host"] = v;
  if (const char* v = get("AUGLOOP_SERVICE_PORT")) j["service"]["port"] = parse_int("AUGLOOP_SERVICE_PORT", v);
  if (const char* v = get("AUGLOOP_SERVICE_TOKEN")) j["service"]["token"] = v;
  if (const char* v = get("AUGLOOP_MAX_PAYLOAD_BYTES")) {
    j["service"]["max_payload_bytes"] = parse_int("AUGLOOP_MAX_PAYLOAD_BYTES", v);
  }
  return j;
}

Json merge_config(const Json& defaults, const Json& file, const Json& env, const Json& flags) {
  return overlay(overlay(overlay(defaults, file), env), flags);
}

int exit_code_for_status(int status) noexcept {
  if (status == 0) return 0;
  if (status == 1) return 3;                    // InvalidArgument
  if (status == 2) return 4;                    // IoError
  if (status == 3) return 5;                    // ImageUndecodable
  if (status >= 10 && status < 20) return 6;    // call parsing
  if (status >= 20 && status < 30) return 7;    // augmentation execution
  if (status == 30) return 8;                   // BackendUnavailable
  if (status == 40) return 9;                   // JudgeUnavailable
  if (status == 41) return 10;                  // ConfigInvalid
  if (status == 42) return 11;                  // TemplateUnknown
  if (status >= 50 && status < 60) return 12;   // GRPO structure
  if (status == 60) return 13;                  // BindFailure
  if (status == 61) return 14;                  // Unauthorized
  return 70;
}

}  // namespace augloop::cli
