// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "trace_io.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

namespace augloop {

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::kStructureInvalid, "trace record: " + what);
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get_as(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(std::string("field '") + key + "' has the wrong type");
  }
}

Rational rational_from_json(const Json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>(), 1);
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return Rational(std::stoll(s), 1);
      return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    } catch (const std::logic_error&) {
    }
  }
  if (j.is_number_float()) {
    // Decimal factors are accepted with millesimal precision.
    const double v = j.get<double>();
    const auto scaled = static_cast<std::int64_t>(std::llround(v * 1000.0));
    if (v > 0 && std::abs(v * 1000.0 - static_cast<double>(scaled)) < 1e-9) return Rational(scaled, 1000);
  }
  throw Error(ErrorCode::kParamInvalid, "factor must be a positive integer, decimal or 'a/b' string");
}

std::string rational_text(const Rational& r) {
  if (r.den() == 1) return std::to_string(r.num());
  return std::to_string(r.num()) + "/" + std::to_string(r.den());
}

std::filesystem::path store_relpath(const std::string& sha) {
  return std::filesystem::path(sha.substr(0, 2)) / (sha + ".png");
}

std::mutex& store_mutex() {
  static std::mutex m;
  return m;
}

Json attachment_to_json(const Attachment& a, const ImageStore& store) {
  Json j;
  j["generation"] = a.generation;
  j["sha256"] = a.sha256;
  j["width"] = a.width;
  j["height"] = a.height;
  j["channels"] = a.channels;
  if (!store.embed_pixels || !a.image) {
    if (!a.ref.empty()) j["ref"] = a.ref;
    return j;
  }
  if (store.dir) {
    const auto rel = store_relpath(a.sha256);
    const auto full = *store.dir / rel;
    std::lock_guard lock(store_mutex());
    if (!std::filesystem::exists(full)) {
      std::filesystem::create_directories(full.parent_path());
      const auto tmp = full.string() + ".tmp";
      save_png(*a.image, tmp);
      std::filesystem::rename(tmp, full);
    }
    j["ref"] = rel.generic_string();
  } else {
    j["png_b64"] = base64_encode(encode_png(*a.image));
  }
  return j;
}

Attachment attachment_from_json(const Json& j, const std::optional<std::filesystem::path>& store_dir) {
  Attachment a;
  a.generation = get_as<int>(j, "generation");
  a.sha256 = get_as<std::string>(j, "sha256");
  a.width = get_as<int>(j, "width");
  a.height = get_as<int>(j, "height");
  a.channels = get_as<int>(j, "channels");
  if (j.contains("ref")) a.ref = get_as<std::string>(j, "ref");
  if (j.contains("png_b64")) {
    a.image = std::make_shared<const ImageBuffer>(decode_png(base64_decode(get_as<std::string>(j, "png_b64"))));
  } else if (!a.ref.empty() && store_dir) {
    const auto full = *store_dir / a.ref;
    if (std::filesystem::exists(full)) a.image = std::make_shared<const ImageBuffer>(load_image(full));
  }
  if (a.image && content_hash(*a.image) != a.sha256) bad("attachment pixels do not match sha256");
  return a;
}

}  // namespace

Json op_to_json(const AugmentationOp& op) {
  Json params = Json::object();
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CropParams>) {
          params["x0"] = p.x0;
          params["y0"] = p.y0;
          params["x1"] = p.x1;
          params["y1"] = p.y1;
        } else if constexpr (std::is_same_v<P, ResizeParams>) {
          params["factor"] = rational_text(p.factor);
        } else if constexpr (std::is_same_v<P, RotateParams>) {
          params["degrees"] = p.degrees;
        } else if constexpr (std::is_same_v<P, FlipParams>) {
          params["axis"] = flip_axis_name(p.axis);
        } else if constexpr (std::is_same_v<P, DenoiseParams>) {
          params["method"] = denoise_method_name(p.method);
          params["kernel_size"] = p.kernel_size;
        }
      },
      op.params);
  Json j;
  j["name"] = op_kind_name(op.kind);
  j["params"] = std::move(params);
  return j;
}

AugmentationOp op_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("name") || !j["name"].is_string()) {
    throw Error(ErrorCode::kParamInvalid, "op must be an object with a string 'name'");
  }
  const auto name = j["name"].get<std::string>();
  const auto kind = op_kind_from_name(name);
  if (!kind) throw Error(ErrorCode::kUnknownOperation, "unknown operation '" + name + "'");
  const Json params = j.value("params", Json::object());
  if (!params.is_object()) throw Error(ErrorCode::kParamInvalid, "'params' must be an object");
  auto int_param = [&](const char* key, std::optional<std::int64_t> fallback = {}) -> std::int64_t {
    if (!params.contains(key)) {
      if (fallback) return *fallback;
      throw Error(ErrorCode::kParamInvalid, std::string("missing parameter '") + key + "'");
    }
    if (!params[key].is_number_integer()) {
      throw Error(ErrorCode::kParamInvalid, std::string("parameter '") + key + "' must be an integer");
    }
    return params[key].get<std::int64_t>();
  };
  auto str_param = [&](const char* key, const char* fallback) -> std::string {
    if (!params.contains(key)) return fallback;
    if (!params[key].is_string()) {
      throw Error(ErrorCode::kParamInvalid, std::string("parameter '") + key + "' must be a string");
    }
    return params[key].get<std::string>();
  };
  switch (*kind) {
    case OpKind::kCrop:
      return AugmentationOp::crop(int_param("x0"), int_param("y0"), int_param("x1"), int_param("y1"));
    case OpKind::kResizeUp:
    case OpKind::kResizeDown: {
      if (!params.contains("factor")) throw Error(ErrorCode::kParamInvalid, "missing parameter 'factor'");
      const Rational f = rational_from_json(params["factor"]);
      return *kind == OpKind::kResizeUp ? AugmentationOp::resize_up(f) : AugmentationOp::resize_down(f);
    }
    case OpKind::kRotate:
      return AugmentationOp::rotate(static_cast<int>(int_param("degrees", 90)));
    case OpKind::kFlip: {
      const auto axis = str_param("axis", "horizontal");
      if (axis == "horizontal") return AugmentationOp::flip(FlipAxis::kHorizontal);
      if (axis == "vertical") return AugmentationOp::flip(FlipAxis::kVertical);
      throw Error(ErrorCode::kParamInvalid, "axis must be 'horizontal' or 'vertical'");
    }
    case OpKind::kDenoise: {
      const auto method = str_param("method", "median");
      const auto k = int_param("kernel_size", 3);
      if (k < 0 || k > 1000000) throw Error(ErrorCode::kParamInvalid, "kernel_size out of range");
      DenoiseMethod m;
      if (method == "median") m = DenoiseMethod::kMedian;
      else if (method == "gaussian") m = DenoiseMethod::kGaussian;
      else if (method == "bilateral") m = DenoiseMethod::kBilateral;
      else throw Error(ErrorCode::kParamInvalid, "method must be gaussian, median or bilateral");
      return AugmentationOp::denoise(m, static_cast<int>(k));
    }
    case OpKind::kEdge:
      return AugmentationOp::edge();
  }
  throw Error(ErrorCode::kInternal, "unhandled op kind");
}

Json image_to_json(const ImageBuffer& image) {
  Json j;
  j["width"] = image.width();
  j["height"] = image.height();
  j["channels"] = image.channels();
  j["png_b64"] = base64_encode(encode_png(image));
  return j;
}

ImageBuffer image_from_json(const Json& j) {
  if (j.is_string()) return decode_image(base64_decode(j.get<std::string>()));
  if (!j.is_object() || !j.contains("png_b64") || !j["png_b64"].is_string()) {
    throw Error(ErrorCode::kInvalidArgument, "image must carry a base64 'png_b64' field");
  }
  return decode_image(base64_decode(j["png_b64"].get<std::string>()));
}

Json rewards_to_json(const RewardBreakdown& r) {
  Json j;
  j["r_vqa"] = r.r_vqa;
  j["r_fmt"] = r.r_fmt;
  j["r_cst"] = r.r_cst;
  j["r_api"] = r.r_api;
  j["r_suc"] = r.r_suc;
  j["total"] = r.total;
  return j;
}

RewardBreakdown rewards_from_json(const Json& j) {
  RewardBreakdown r;
  r.r_vqa = get_as<double>(j, "r_vqa");
  r.r_fmt = get_as<double>(j, "r_fmt");
  r.r_cst = get_as<double>(j, "r_cst");
  r.r_api = get_as<double>(j, "r_api");
  r.r_suc = get_as<double>(j, "r_suc");
  r.total = get_as<double>(j, "total");
  return r;
}

Json trace_to_json(const TraceRecord& record, const ImageStore& store) {
  const EpisodeTrace& t = record.trace;
  Json j;
  j["schema"] = kTraceSchema;
  j["trace_id"] = t.trace_id;
  j["item_id"] = record.item_id;
  j["attempt"] = record.attempt;
  j["seed"] = record.seed;
  j["question"] = t.question;
  Json messages = Json::array();
  for (const Message& m : t.history) {
    Json mj;
    mj["role"] = role_name(m.role);
    mj["text"] = m.text;
    Json atts = Json::array();
    for (const Attachment& a : m.attachments) atts.push_back(attachment_to_json(a, store));
    mj["attachments"] = std::move(atts);
    messages.push_back(std::move(mj));
  }
  j["messages"] = std::move(messages);
  Json calls = Json::array();
  for (const CallRecord& c : t.calls) {
    Json cj;
    cj["raw_text"] = c.raw_text;
    cj["status"] = call_status_name(c.status);
    cj["op"] = c.op ? op_to_json(*c.op) : Json(nullptr);
    if (c.error_code) {
      cj["error"] = {{"code", error_code_name(*c.error_code)}, {"text", c.error_text}};
    } else {
      cj["error"] = nullptr;
    }
    cj["input_generation"] = c.input_generation;
    cj["result_generation"] = c.result_generation;
    calls.push_back(std::move(cj));
  }
  j["calls"] = std::move(calls);
  j["final_answer"] = t.final_answer;
  j["k"] = t.k;
  j["terminated_by"] = termination_name(t.terminated_by);
  if (record.ground_truth) j["ground_truth"] = *record.ground_truth;
  if (record.split) j["split"] = *record.split;
  if (record.group_id) j["group_id"] = *record.group_id;
  if (record.rewards) j["rewards"] = rewards_to_json(*record.rewards);
  if (!record.logp_policy.empty()) j["logp_policy"] = record.logp_policy;
  if (!record.logp_ref.empty()) j["logp_ref"] = record.logp_ref;
  return j;
}

TraceRecord trace_from_json(const Json& j, const std::optional<std::filesystem::path>& store_dir) {
  if (!j.is_object()) bad("record is not an object");
  if (get_as<std::string>(j, "schema") != kTraceSchema) bad("unsupported schema");
  TraceRecord r;
  EpisodeTrace& t = r.trace;
  t.trace_id = get_as<std::string>(j, "trace_id");
  r.item_id = j.value("item_id", std::string());
  r.attempt = j.value("attempt", 0);
  r.seed = j.value("seed", std::uint64_t{0});
  t.question = get_as<std::string>(j, "question");
  for (const Json& mj : field(j, "messages")) {
    Message m;
    const auto role = role_from_name(get_as<std::string>(mj, "role"));
    if (!role) bad("unknown role");
    m.role = *role;
    m.text = get_as<std::string>(mj, "text");
    if (mj.contains("attachments")) {
      for (const Json& aj : mj["attachments"]) m.attachments.push_back(attachment_from_json(aj, store_dir));
    }
    t.history.push_back(std::move(m));
  }
  for (const Json& cj : field(j, "calls")) {
    CallRecord c;
    c.raw_text = get_as<std::string>(cj, "raw_text");
    const auto status = call_status_from_name(get_as<std::string>(cj, "status"));
    if (!status) bad("unknown call status");
    c.status = *status;
    if (cj.contains("op") && !cj["op"].is_null()) {
      try {
        c.op = op_from_json(cj["op"]);
      } catch (const Error& e) {
        bad(std::string("invalid op: ") + e.what());
      }
    }
    if (cj.contains("error") && !cj["error"].is_null()) {
      const auto name = get_as<std::string>(cj["error"], "code");
      const auto code = error_code_from_name(name);
      if (!code) bad("unknown error code '" + name + "'");
      c.error_code = *code;
      c.error_text = get_as<std::string>(cj["error"], "text");
    }
    c.input_generation = cj.value("input_generation", -1);
    c.result_generation = cj.value("result_generation", -1);
    t.calls.push_back(std::move(c));
  }
  t.final_answer = get_as<std::string>(j, "final_answer");
  t.k = get_as<int>(j, "k");
  const auto term = termination_from_name(get_as<std::string>(j, "terminated_by"));
  if (!term) bad("unknown termination");
  t.terminated_by = *term;
  if (j.contains("ground_truth")) r.ground_truth = get_as<std::string>(j, "ground_truth");
  if (j.contains("split")) r.split = get_as<std::string>(j, "split");
  if (j.contains("group_id")) r.group_id = get_as<std::string>(j, "group_id");
  if (j.contains("rewards")) r.rewards = rewards_from_json(j["rewards"]);
  if (j.contains("logp_policy")) r.logp_policy = get_as<std::vector<double>>(j, "logp_policy");
  if (j.contains("logp_ref")) r.logp_ref = get_as<std::vector<double>>(j, "logp_ref");
  return r;
}

std::string trace_fingerprint(const EpisodeTrace& trace) {
  TraceRecord r;
  r.trace = trace;
  return dump_compact(trace_to_json(r, ImageStore{std::nullopt, false}));
}

std::string dump_compact(const Json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::vector<Json> parse_jsonl(std::string_view text) {
  std::vector<Json> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      // A torn final line from an interrupted writer is skipped.
      if (pos >= text.size() && (text.empty() || text.back() != '\n')) break;
      throw Error(ErrorCode::kStructureInvalid,
                  "line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
  }
  return out;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_jsonl(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void append_jsonl(const std::filesystem::path& path, const Json& record) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for append");
  out << dump_compact(record) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

std::vector<TraceRecord> load_traces(const std::filesystem::path& path,
                                     const std::optional<std::filesystem::path>& store_dir) {
  std::vector<TraceRecord> out;
  const auto dir = store_dir ? store_dir : std::optional<std::filesystem::path>(path.parent_path());
  for (const Json& j : read_jsonl(path)) out.push_back(trace_from_json(j, dir));
  return out;
}

}  // namespace augloop
