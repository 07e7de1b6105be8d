// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backends.hpp"

#include "fixture.hpp"
#include "http_clients.hpp"

namespace augloop {

namespace {

std::pair<std::string_view, std::string_view> split_spec(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) return {spec, {}};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

}  // namespace

std::unique_ptr<ModelBackend> make_backend(std::string_view spec) {
  const auto [scheme, rest] = split_spec(spec);
  if (scheme == "scripted" && !rest.empty()) {
    const auto bytes = read_file_bytes(std::string(rest));
    return std::make_unique<ScriptedBackend>(
        ScriptedBackend::from_text(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())));
  }
  if (scheme == "oracle" && !rest.empty()) {
    return std::make_unique<OracleBackend>(OracleBackend::from_manifest(std::string(rest)));
  }
  if (scheme == "http" || scheme == "https") {
    HttpEndpoint ep;
    ep.base_url = std::string(spec);
    ep.apply_env("AUGLOOP_BACKEND");
    return std::make_unique<HttpChatBackend>(std::move(ep));
  }
  if (scheme == "env") {
    HttpEndpoint ep;
    ep.apply_env("AUGLOOP_BACKEND");
    return std::make_unique<HttpChatBackend>(std::move(ep));
  }
  throw Error(ErrorCode::kConfigInvalid, "unknown backend '" + std::string(spec) +
                                             "' (expected scripted:<file>, oracle:<manifest> or http://...)");
}

std::unique_ptr<Judge> make_judge(std::string_view spec) {
  if (spec == "rule") return std::make_unique<RuleJudge>();
  if (spec == "rule-contains") return std::make_unique<RuleJudge>(RuleJudge::Match::kContains);
  const auto [scheme, rest] = split_spec(spec);
  if (scheme == "http" || scheme == "https" || scheme == "env") {
    HttpEndpoint ep;
    if (scheme != "env") ep.base_url = std::string(spec);
    ep.apply_env("AUGLOOP_JUDGE");
    return std::make_unique<HttpJudge>(std::move(ep));
  }
  throw Error(ErrorCode::kConfigInvalid,
              "unknown judge '" + std::string(spec) + "' (expected rule, rule-contains or http://...)");
}

}  // namespace augloop
