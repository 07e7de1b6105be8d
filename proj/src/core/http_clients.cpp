// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "http_clients.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>

#include "httplib.h"
#include "trace_io.hpp"

namespace augloop {

void HttpEndpoint::apply_env(std::string_view prefix) {
  auto env = [&](const char* suffix) -> std::string {
    const std::string name = std::string(prefix) + suffix;
    const char* v = std::getenv(name.c_str());
    return v ? v : "";
  };
  if (base_url.empty()) base_url = env("_URL");
  if (model.empty()) model = env("_MODEL");
  if (api_key.empty()) api_key = env("_API_KEY");
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kConfigInvalid, "endpoint URL must start with http:// or https://: '" + url + "'");
  }
  const auto slash = url.find('/', scheme + 3);
  SplitUrl s;
  s.origin = url.substr(0, slash);
  s.path = slash == std::string::npos ? "" : url.substr(slash);
  while (!s.path.empty() && s.path.back() == '/') s.path.pop_back();
  return s;
}

std::string string_or(const Json& j, const char* key, std::string fallback) {
  if (j.is_object() && j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  return fallback;
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

std::unique_ptr<std::counting_semaphore<1024>> make_slots(int n) {
  return std::make_unique<std::counting_semaphore<1024>>(std::clamp(n, 1, 1024));
}

}  // namespace

Json post_json(const HttpEndpoint& ep, std::string_view path, const Json& body, ErrorCode unavailable) {
  if (ep.base_url.empty()) throw Error(ErrorCode::kConfigInvalid, "endpoint URL is not configured");
  const SplitUrl url = split_url(ep.base_url);
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!ep.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep.api_key);
  std::string last_error;
  for (int attempt = 0; attempt <= std::max(0, ep.transport_retries); ++attempt) {
    httplib::Client cli(url.origin);
    cli.set_connection_timeout(std::min(ep.timeout_seconds, 30), 0);
    cli.set_read_timeout(ep.timeout_seconds, 0);
    cli.set_write_timeout(ep.timeout_seconds, 0);
    auto res = cli.Post(url.path + std::string(path), headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(unavailable, "HTTP " + std::to_string(res->status) + " from " + ep.base_url + ": " +
                                   res->body.substr(0, 200));
    }
    try {
      return Json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw Error(unavailable, "non-JSON reply from " + ep.base_url);
    }
  }
  throw Error(unavailable, "cannot reach " + ep.base_url + ": " + last_error);
}

std::optional<double> parse_judge_score(std::string_view reply) {
  auto from_json = [](std::string_view text) -> std::optional<double> {
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
    try {
      const Json j = Json::parse(text.substr(open, close - open + 1));
      if (!j.is_object() || !j.contains("score")) return std::nullopt;
      const Json& s = j["score"];
      if (s.is_number()) return s.get<double>();
      if (s.is_string()) return std::stod(s.get<std::string>());
    } catch (const std::exception&) {
    }
    return std::nullopt;
  };
  if (auto v = from_json(reply)) return v;
  std::string swapped(reply);
  std::replace(swapped.begin(), swapped.end(), '\'', '"');
  if (auto v = from_json(swapped)) return v;
  static const std::regex pattern(R"(score["']?\s*[:=]\s*["']?(-?[0-9]+(?:\.[0-9]+)?))", std::regex::icase);
  const std::string text(reply);
  std::smatch sm;
  if (std::regex_search(text, sm, pattern)) return std::stod(sm[1].str());
  return std::nullopt;
}

// ---- judge -------------------------------------------------------------------------

HttpJudge::HttpJudge(HttpEndpoint endpoint) : ep_(std::move(endpoint)), slots_(make_slots(ep_.max_in_flight)) {}

double HttpJudge::ask(const std::string& prompt) {
  Json body;
  body["model"] = ep_.model;
  body["messages"] = Json::array({Json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = 0.0;
  body["max_tokens"] = 256;
  Json reply;
  {
    SlotGuard guard(*slots_);
    reply = post_json(ep_, "/chat/completions", body, ErrorCode::kJudgeUnavailable);
  }
  std::string content;
  try {
    content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kJudgeUnavailable, "judge reply has no message content");
  }
  const auto score = parse_judge_score(content);
  if (!score || std::isnan(*score)) {
    throw Error(ErrorCode::kJudgeUnavailable, "unparseable judge reply: " + content.substr(0, 200));
  }
  return clamp_unit(*score);
}

double HttpJudge::score_vqa(std::string_view question, std::string_view ground_truth,
                            std::string_view answer_window) {
  return ask(fill_template(judge_vqa_template(), {{"QUESTION", question},
                                                  {"GROUND_TRUTH", ground_truth},
                                                  {"PREDICTION", answer_window}}));
}

double HttpJudge::score_consistency(std::string_view trace_text) {
  return ask(fill_template(judge_consistency_template(), {{"TRACE", trace_text}}));
}

// ---- chat backend -----------------------------------------------------------------

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint)
    : ep_(std::move(endpoint)), slots_(make_slots(ep_.max_in_flight)) {}

namespace {

Json content_parts(const Message& m) {
  Json parts = Json::array();
  std::string_view text = m.text;
  std::size_t next_image = 0;
  while (true) {
    const auto pos = text.find(kImagePlaceholder);
    const std::string_view before = pos == std::string_view::npos ? text : text.substr(0, pos);
    if (!before.empty()) parts.push_back(Json{{"type", "text"}, {"text", std::string(before)}});
    if (pos == std::string_view::npos) break;
    if (next_image >= m.attachments.size() || !m.attachments[next_image].image) {
      throw Error(ErrorCode::kInvalidArgument, "image placeholder without attached pixels");
    }
    const std::string url =
        "data:image/png;base64," + base64_encode(encode_png(*m.attachments[next_image].image));
    parts.push_back(Json{{"type", "image_url"}, {"image_url", Json{{"url", url}}}});
    ++next_image;
    text = text.substr(pos + kImagePlaceholder.size());
  }
  return parts;
}

}  // namespace

Json HttpChatBackend::build_request(const GenerateRequest& request) const {
  Json messages = Json::array();
  for (const Message& m : request.history) {
    Json mj;
    switch (m.role) {
      case Role::kSystem:
        mj = {{"role", "system"}, {"content", m.text}};
        break;
      case Role::kAssistant:
        mj = {{"role", "assistant"}, {"content", m.text}};
        break;
      case Role::kUser:
      case Role::kToolOutput:
        mj = {{"role", "user"}, {"content", content_parts(m)}};
        break;
    }
    messages.push_back(std::move(mj));
  }
  Json body;
  body["model"] = ep_.model;
  body["messages"] = std::move(messages);
  body["stop"] = request.stop;
  body["temperature"] = request.sampling.temperature;
  body["top_p"] = request.sampling.top_p;
  body["top_k"] = request.sampling.top_k;
  body["seed"] = request.sampling.seed;
  body["max_tokens"] = std::max<std::int64_t>(1, request.max_tokens);
  body["include_stop_str_in_output"] = true;
  body["skip_special_tokens"] = false;
  return body;
}

std::string HttpChatBackend::restore_stop(std::string text, const std::vector<std::string>& stops,
                                          const Json& choice) {
  if (find_stop(text, stops)) return text;
  if (string_or(choice, "finish_reason", "") != "stop") return text;
  if (choice.contains("stop_reason") && choice["stop_reason"].is_string()) {
    const auto s = choice["stop_reason"].get<std::string>();
    if (std::find(stops.begin(), stops.end(), s) != stops.end()) return text + s;
  }
  // Servers that trim the stop string: infer it from the unclosed block.
  const auto code = text.rfind(kCodeOpen);
  const auto answer = text.rfind(kAnswerOpen);
  const bool code_open = code != std::string::npos && text.find(kCodeClose, code) == std::string::npos;
  const bool answer_open = answer != std::string::npos && text.find(kAnswerClose, answer) == std::string::npos;
  auto allowed = [&](std::string_view s) { return std::find(stops.begin(), stops.end(), s) != stops.end(); };
  if (code_open && (!answer_open || code > answer) && allowed(kCodeClose)) return text + std::string(kCodeClose);
  if (answer_open && allowed(kAnswerClose)) return text + std::string(kAnswerClose);
  return text;
}

GeneratedSpan HttpChatBackend::generate(const GenerateRequest& request) {
  const Json body = build_request(request);
  Json reply;
  {
    SlotGuard guard(*slots_);
    reply = post_json(ep_, "/chat/completions", body, ErrorCode::kBackendUnavailable);
  }
  GeneratedSpan out;
  try {
    const Json& choice = reply.at("choices").at(0);
    const Json& content = choice.at("message").at("content");
    out.text = content.is_string() ? content.get<std::string>() : std::string();
    out.finish_reason = string_or(choice, "finish_reason", "stop");
    out.text = restore_stop(std::move(out.text), request.stop, choice);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kBackendUnavailable, "chat reply has no message content");
  }
  if (auto stop = find_stop(out.text, request.stop)) out.text.resize(stop->position + stop->stop.size());
  return out;
}

}  // namespace augloop
