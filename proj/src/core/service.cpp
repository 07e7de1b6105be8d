// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "service.hpp"

#include <thread>

#include "httplib.h"

namespace augloop {

int http_status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return 200;
    case ErrorCode::kUnauthorized: return 401;
    case ErrorCode::kBackendUnavailable:
    case ErrorCode::kJudgeUnavailable: return 503;
    case ErrorCode::kIoError:
    case ErrorCode::kBindFailure:
    case ErrorCode::kInternal: return 500;
    default: return 400;
  }
}

namespace {

Json envelope_error(const Json& id, ErrorCode code, std::string_view message) {
  return Json{{"id", id}, {"ok", false}, {"error", error_json(code, message)}};
}

}  // namespace

ServiceReply handle_request(const RuntimeConfig& rc, std::string_view method, std::string_view path,
                            std::string_view body, std::string_view token) {
  if (method == "GET" && path == "/v1/health") {
    return {200, Json{{"status", "ok"}, {"version", std::string(library_version())}}};
  }
  Json id = nullptr;
  auto fail = [&](ErrorCode code, std::string_view msg) {
    return ServiceReply{http_status_for(code), envelope_error(id, code, msg)};
  };
  if (body.size() > rc.service.max_payload_bytes) {
    return ServiceReply{413, envelope_error(id, ErrorCode::kInvalidArgument, "payload exceeds the size cap")};
  }
  Json request;
  std::string parse_error;
  try {
    request = Json::parse(body);
    if (request.is_object()) id = request.value("id", Json(nullptr));
  } catch (const nlohmann::json::exception& e) {
    parse_error = e.what();
  }
  if (!rc.service.token.empty() && token != rc.service.token) {
    return fail(ErrorCode::kUnauthorized, "missing or wrong X-Augloop-Token");
  }
  std::string op;
  if (path == "/v1/augment") op = "augment";
  else if (path == "/v1/rewards") op = "rewards";
  else if (path == "/v1/grpo/batch") op = "grpo_batch";
  else if (path == "/v1/episode") op = "episode";
  if (op.empty() || method != "POST") {
    return ServiceReply{404, envelope_error(id, ErrorCode::kInvalidArgument,
                                            "no endpoint " + std::string(method) + " " + std::string(path))};
  }
  if (!parse_error.empty()) return fail(ErrorCode::kInvalidArgument, "request is not JSON: " + parse_error);
  if (!request.is_object() || !request.contains("payload")) {
    return fail(ErrorCode::kInvalidArgument, "request must be an object {id, payload}");
  }
  try {
    Json result = op == "episode" ? op_episode(rc, request["payload"], rc.service.allow_backend_specs)
                                  : dispatch_op(rc, op, request["payload"]);
    return {200, Json{{"id", id}, {"ok", true}, {"result", std::move(result)}}};
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(ErrorCode::kInvalidArgument, e.what());
  } catch (const std::exception& e) {
    return fail(ErrorCode::kInternal, e.what());
  }
}

struct Service::Impl {
  httplib::Server server;
  std::thread thread;
  bool bound = false;
};

Service::Service(RuntimeConfig config) : impl_(std::make_unique<Impl>()), config_(std::move(config)) {
  auto& srv = impl_->server;
  srv.set_payload_max_length(config_.service.max_payload_bytes);
  // SO_REUSEADDR only: with SO_REUSEPORT a second server would share the port.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  srv.new_task_queue = [n = config_.service.threads] { return new httplib::ThreadPool(static_cast<size_t>(n)); };
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const ServiceReply reply =
        handle_request(config_, req.method, req.path, req.body, req.get_header_value("X-Augloop-Token"));
    res.status = reply.status;
    res.set_content(dump_compact(reply.body), "application/json");
  };
  srv.Get(R"(/.*)", handler);
  srv.Post(R"(/.*)", handler);
  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const ErrorCode code = res.status == 401 ? ErrorCode::kUnauthorized : ErrorCode::kInvalidArgument;
    std::string msg = res.status == 413 ? "payload exceeds the size cap" : "request rejected";
    res.set_content(envelope_error(nullptr, code, msg + " (" + req.method + " " + req.path + ")").dump(),
                    "application/json");
  });
}

Service::~Service() { stop(); }

int Service::bind() {
  auto& srv = impl_->server;
  if (config_.service.port == 0) {
    port_ = srv.bind_to_any_port(config_.service.host);
  } else {
    port_ = srv.bind_to_port(config_.service.host, config_.service.port) ? config_.service.port : -1;
  }
  if (port_ <= 0) {
    throw Error(ErrorCode::kBindFailure,
                "cannot bind " + config_.service.host + ":" + std::to_string(config_.service.port));
  }
  impl_->bound = true;
  return port_;
}

void Service::run() {
  if (!impl_->bound) bind();
  impl_->server.listen_after_bind();
}

int Service::start_background() {
  const int p = bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return p;
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace augloop
