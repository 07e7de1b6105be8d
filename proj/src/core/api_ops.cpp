// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "api_ops.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "backends.hpp"
#include "fixture.hpp"
#include "parallel.hpp"

#ifndef AUGLOOP_VERSION_STRING
#define AUGLOOP_VERSION_STRING "0.0.0"
#endif

namespace augloop {

std::string_view library_version() noexcept { return AUGLOOP_VERSION_STRING; }

Json error_json(ErrorCode code, std::string_view message) {
  Json j;
  j["code"] = error_code_name(code);
  j["numeric"] = static_cast<int>(code);
  j["message"] = std::string(message);
  return j;
}

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::kConfigInvalid, what); }
[[noreturn]] void arg_error(const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); }

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      config_error("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T config_value(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(where + "." + key + " has the wrong type");
  }
}

template <typename T>
T request_value(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    arg_error(std::string("request field '") + key + "' has the wrong type");
  }
}

std::string required_string(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
    arg_error(std::string("request needs string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

std::uint64_t required_seed(const Json& j) {
  if (!j.is_object() || !j.contains("seed") || !j["seed"].is_number_unsigned()) {
    arg_error("request needs a non-negative integer 'seed'");
  }
  return j["seed"].get<std::uint64_t>();
}

std::vector<std::uint8_t> to_bytes(const std::string& s) { return {s.begin(), s.end()}; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_file_bytes(path, to_bytes(text));
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
  std::string text;
  for (const Json& r : records) text += dump_compact(r) + "\n";
  write_text(path, text);
}

std::vector<TraceRecord> traces_from_request(const Json& request) {
  if (request.contains("traces_path")) {
    return load_traces(required_string(request, "traces_path"));
  }
  if (!request.contains("traces") || !request["traces"].is_array()) {
    arg_error("request needs 'traces_path' or a 'traces' array");
  }
  std::vector<TraceRecord> out;
  for (const Json& t : request["traces"]) out.push_back(trace_from_json(t));
  return out;
}

std::unique_ptr<Judge> judge_for(const RuntimeConfig& rc, const Json& request) {
  return make_judge(request_value<std::string>(request, "judge", rc.judge));
}

SamplingParams sampling_from_json(const Json& j, SamplingParams base, const std::string& where) {
  check_keys(j, {"temperature", "top_p", "top_k"}, where);
  base.temperature = config_value<double>(j, "temperature", base.temperature, where);
  base.top_p = config_value<double>(j, "top_p", base.top_p, where);
  base.top_k = config_value<int>(j, "top_k", base.top_k, where);
  return base;
}

}  // namespace

OpVocabulary vocabulary_from_json(const Json& j) {
  if (!j.is_array()) config_error("ops must be an array of operation names");
  OpVocabulary v;
  for (const Json& e : j) {
    if (!e.is_string()) config_error("ops must be an array of operation names");
    const auto name = e.get<std::string>();
    if (name == "resize") {
      v.insert(OpKind::kResizeUp);
      v.insert(OpKind::kResizeDown);
      continue;
    }
    const auto k = op_kind_from_name(name);
    if (!k) config_error("unknown operation '" + name + "' in ops");
    v.insert(*k);
  }
  return v;
}

EpisodeConfig episode_config_from_json(const Json& j, EpisodeConfig base) {
  const std::string where = "episode";
  check_keys(j,
             {"max_calls", "grace_calls", "max_completion_tokens", "max_context_tokens", "temperature", "top_p",
              "top_k", "ops", "system_prompt", "max_pixels", "max_kernel_size"},
             where);
  base.max_calls = config_value<int>(j, "max_calls", base.max_calls, where);
  base.grace_calls = config_value<int>(j, "grace_calls", base.grace_calls, where);
  base.max_completion_tokens =
      config_value<std::int64_t>(j, "max_completion_tokens", base.max_completion_tokens, where);
  base.max_context_tokens = config_value<std::int64_t>(j, "max_context_tokens", base.max_context_tokens, where);
  base.sampling.temperature = config_value<double>(j, "temperature", base.sampling.temperature, where);
  base.sampling.top_p = config_value<double>(j, "top_p", base.sampling.top_p, where);
  base.sampling.top_k = config_value<int>(j, "top_k", base.sampling.top_k, where);
  if (j.contains("ops")) base.vocabulary = vocabulary_from_json(j["ops"]);
  if (j.contains("system_prompt") && !j["system_prompt"].is_null()) {
    base.system_prompt = config_value<std::string>(j, "system_prompt", "", where);
  }
  base.augment.max_pixels = config_value<std::int64_t>(j, "max_pixels", base.augment.max_pixels, where);
  base.augment.max_kernel_size = config_value<int>(j, "max_kernel_size", base.augment.max_kernel_size, where);
  base.validate();
  return base;
}

RuntimeConfig RuntimeConfig::from_json(const Json& j) {
  RuntimeConfig rc;
  if (j.is_null()) return rc;
  check_keys(j, {"backend", "judge", "workers", "episode", "rewards", "grpo", "service"}, "config");
  rc.backend = config_value<std::string>(j, "backend", rc.backend, "config");
  rc.judge = config_value<std::string>(j, "judge", rc.judge, "config");
  rc.workers = config_value<std::size_t>(j, "workers", rc.workers, "config");
  if (rc.workers < 1) config_error("config.workers must be >= 1");
  if (j.contains("episode")) rc.episode = episode_config_from_json(j["episode"], rc.episode);
  rc.rewards.max_calls = rc.episode.max_calls;
  rc.rewards.grace_calls = rc.episode.grace_calls;
  rc.rewards.vocabulary = rc.episode.vocabulary;
  if (j.contains("rewards")) {
    const Json& r = j["rewards"];
    check_keys(r, {"weights"}, "rewards");
    if (r.contains("weights")) {
      const auto w = config_value<std::vector<double>>(r, "weights", {}, "rewards");
      if (w.size() != 5) config_error("rewards.weights needs exactly 5 values");
      std::copy(w.begin(), w.end(), rc.rewards.weights.values.begin());
      rc.rewards.weights.validate();
    }
  }
  if (j.contains("grpo")) {
    const Json& g = j["grpo"];
    check_keys(g, {"beta", "normalization"}, "grpo");
    rc.batch.beta = config_value<double>(g, "beta", rc.batch.beta, "grpo");
    if (!(rc.batch.beta >= 0)) config_error("grpo.beta must be non-negative");
    const auto mode = norm_mode_from_name(config_value<std::string>(g, "normalization", "group", "grpo"));
    if (!mode) config_error("grpo.normalization must be 'group' or 'trajectory'");
    rc.batch.mode = *mode;
  }
  rc.batch.workers = rc.workers;
  if (j.contains("service")) {
    const Json& s = j["service"];
    check_keys(s, {"host", "port", "token", "max_payload_bytes", "allow_backend_specs", "threads"}, "service");
    rc.service.host = config_value<std::string>(s, "host", rc.service.host, "service");
    rc.service.port = config_value<int>(s, "port", rc.service.port, "service");
    rc.service.token = config_value<std::string>(s, "token", rc.service.token, "service");
    rc.service.max_payload_bytes =
        config_value<std::size_t>(s, "max_payload_bytes", rc.service.max_payload_bytes, "service");
    rc.service.allow_backend_specs =
        config_value<bool>(s, "allow_backend_specs", rc.service.allow_backend_specs, "service");
    rc.service.threads = config_value<int>(s, "threads", rc.service.threads, "service");
    if (rc.service.port < 0 || rc.service.port > 65535) config_error("service.port must be in [0, 65535]");
    if (rc.service.threads < 1) config_error("service.threads must be >= 1");
  }
  return rc;
}

Json RuntimeConfig::to_json() const {
  Json ops = Json::array();
  for (OpKind k : kAllOpKinds) {
    if (episode.vocabulary.count(k)) ops.push_back(op_kind_name(k));
  }
  Json j;
  j["backend"] = backend;
  j["judge"] = judge;
  j["workers"] = workers;
  j["episode"] = {{"max_calls", episode.max_calls},
                  {"grace_calls", episode.grace_calls},
                  {"max_completion_tokens", episode.max_completion_tokens},
                  {"max_context_tokens", episode.max_context_tokens},
                  {"temperature", episode.sampling.temperature},
                  {"top_p", episode.sampling.top_p},
                  {"top_k", episode.sampling.top_k},
                  {"ops", ops},
                  {"max_pixels", episode.augment.max_pixels},
                  {"max_kernel_size", episode.augment.max_kernel_size}};
  j["rewards"] = {{"weights", rewards.weights.values}};
  j["grpo"] = {{"beta", batch.beta}, {"normalization", norm_mode_name(batch.mode)}};
  j["service"] = {{"host", service.host},
                  {"port", service.port},
                  {"token", service.token.empty() ? "" : "***"},
                  {"max_payload_bytes", service.max_payload_bytes},
                  {"allow_backend_specs", service.allow_backend_specs},
                  {"threads", service.threads}};
  return j;
}

// ---- wire operations -------------------------------------------------------------

Json op_augment(const RuntimeConfig& rc, const Json& request) {
  if (!request.is_object() || !request.contains("image")) arg_error("augment request needs 'image'");
  const ImageBuffer image = image_from_json(request["image"]);
  std::optional<ImageBuffer> original;
  if (request.contains("original") && !request["original"].is_null()) original = image_from_json(request["original"]);
  AugmentationOp op;
  if (request.contains("op")) {
    op = op_from_json(request["op"]);
  } else if (request.contains("call")) {
    const CallResult parsed = extract_call(required_string(request, "call"), rc.episode.vocabulary);
    if (const auto* err = std::get_if<CallError>(&parsed)) throw Error(err->code, err->text);
    op = std::get<ParsedCall>(parsed).op;
  } else {
    arg_error("augment request needs 'op' or 'call'");
  }
  const ExecOutcome outcome = apply_op(image, op, original ? *original : image, rc.episode.augment);
  if (!outcome.ok()) throw Error(outcome.error().code, outcome.error().text);
  Json result;
  result["image"] = image_to_json(outcome.image());
  result["sha256"] = content_hash(outcome.image());
  result["op"] = op_to_json(op);
  return result;
}

Json op_rewards(const RuntimeConfig& rc, const Json& request) {
  if (!request.is_object() || !request.contains("trace")) arg_error("rewards request needs 'trace'");
  const TraceRecord rec = trace_from_json(request["trace"]);
  std::string truth;
  if (request.contains("ground_truth")) {
    truth = required_string(request, "ground_truth");
  } else if (rec.ground_truth) {
    truth = *rec.ground_truth;
  } else {
    arg_error("rewards request needs 'ground_truth' in the request or the trace");
  }
  auto judge = judge_for(rc, request);
  return rewards_to_json(score_trace(rec.trace, truth, *judge, rc.rewards));
}

Json op_grpo_batch(const RuntimeConfig& rc, const Json& request) {
  BatchConfig bc = rc.batch;
  bc.beta = request_value<double>(request, "beta", bc.beta);
  if (request.contains("normalization")) {
    const auto mode = norm_mode_from_name(required_string(request, "normalization"));
    if (!mode) arg_error("normalization must be 'group' or 'trajectory'");
    bc.mode = *mode;
  }
  std::vector<RolloutGroup> groups;
  if (request.contains("groups")) {
    if (!request["groups"].is_array()) arg_error("'groups' must be an array");
    for (const Json& g : request["groups"]) {
      RolloutGroup group;
      group.group_id = required_string(g, "group_id");
      if (!g.contains("traces") || !g["traces"].is_array()) arg_error("each group needs a 'traces' array");
      for (const Json& t : g["traces"]) group.traces.push_back(trace_from_json(t));
      groups.push_back(std::move(group));
    }
  } else {
    groups = group_records(traces_from_request(request));
  }
  Json result;
  result["records"] = assemble_batch(groups, bc);
  return result;
}

Json op_episode(const RuntimeConfig& rc, const Json& request, bool allow_backend_specs) {
  if (!request.is_object()) arg_error("episode request must be an object");
  EpisodeQuery q;
  if (request.contains("image")) {
    q.image = std::make_shared<const ImageBuffer>(image_from_json(request["image"]));
  } else if (request.contains("image_path")) {
    if (!allow_backend_specs) throw Error(ErrorCode::kUnauthorized, "image paths are disabled on this server");
    q.image = std::make_shared<const ImageBuffer>(load_image(required_string(request, "image_path")));
  } else {
    arg_error("episode request needs 'image' or 'image_path'");
  }
  if (request.contains("full_resolution")) {
    q.full_resolution = std::make_shared<const ImageBuffer>(image_from_json(request["full_resolution"]));
  }
  q.question = required_string(request, "question");

  std::unique_ptr<ModelBackend> backend;
  const Json spec = request.value("backend", Json(nullptr));
  if (spec.is_object() && spec.contains("scripted")) {
    backend = std::make_unique<ScriptedBackend>(request_value<std::vector<std::string>>(spec, "scripted", {}));
  } else if (spec.is_string()) {
    if (!allow_backend_specs) throw Error(ErrorCode::kUnauthorized, "backend specs are disabled on this server");
    backend = make_backend(spec.get<std::string>());
  } else if (spec.is_null() && !rc.backend.empty()) {
    backend = make_backend(rc.backend);
  } else {
    arg_error("episode request needs a 'backend' ({\"scripted\": [...]} or a spec string)");
  }

  EpisodeConfig ec = rc.episode;
  if (request.contains("episode")) ec = episode_config_from_json(request["episode"], ec);
  ec.sampling.seed = request_value<std::uint64_t>(request, "seed", 0);

  TraceRecord rec;
  rec.trace = run_episode(*backend, q, ec);
  rec.trace.trace_id = request_value<std::string>(request, "trace_id", "episode");
  rec.item_id = request_value<std::string>(request, "item_id", "");
  rec.seed = ec.sampling.seed;
  if (request.contains("ground_truth")) rec.ground_truth = required_string(request, "ground_truth");
  Json result;
  result["trace"] = trace_to_json(rec);
  return result;
}

// ---- file operations ------------------------------------------------------------------

Json op_score_traces(const RuntimeConfig& rc, const Json& request) {
  std::vector<TraceRecord> records = traces_from_request(request);
  auto judge = judge_for(rc, request);
  const std::size_t workers = request_value<std::size_t>(request, "workers", rc.workers);
  parallel_for(records.size(), workers, [&](std::size_t i) {
    TraceRecord& r = records[i];
    if (!r.ground_truth) {
      throw Error(ErrorCode::kStructureInvalid, "trace '" + r.trace.trace_id + "' has no ground_truth");
    }
    r.rewards = score_trace(r.trace, *r.ground_truth, *judge, rc.rewards);
  });
  if (request.contains("out_path")) {
    const std::filesystem::path out = required_string(request, "out_path");
    const ImageStore store{out.parent_path().empty() ? std::filesystem::path(".") : out.parent_path(), true};
    std::vector<Json> lines;
    for (const auto& r : records) lines.push_back(trace_to_json(r, store));
    write_jsonl(out, lines);
    return Json{{"written", records.size()}, {"path", out.string()}};
  }
  Json arr = Json::array();
  for (const auto& r : records) arr.push_back(trace_to_json(r, ImageStore{std::nullopt, false}));
  return Json{{"records", std::move(arr)}};
}

Json op_grpo_files(const RuntimeConfig& rc, const Json& request) {
  BatchConfig bc = rc.batch;
  bc.beta = request_value<double>(request, "beta", bc.beta);
  if (request.contains("normalization")) {
    const auto mode = norm_mode_from_name(required_string(request, "normalization"));
    if (!mode) arg_error("normalization must be 'group' or 'trajectory'");
    bc.mode = *mode;
  }
  const auto records = assemble_batch(group_records(traces_from_request(request)), bc);
  if (request.contains("out_path")) {
    write_jsonl(required_string(request, "out_path"), records);
    return Json{{"written", records.size()}, {"path", required_string(request, "out_path")}};
  }
  return Json{{"records", records}};
}

Json op_eval(const RuntimeConfig& rc, const Json& request) {
  const std::filesystem::path manifest = required_string(request, "manifest");
  const auto items = read_manifest(manifest);
  const auto base = manifest.parent_path();
  const std::string spec = request_value<std::string>(request, "backend", rc.backend);
  if (spec.empty()) arg_error("eval needs a backend");
  auto backend = make_backend(spec);
  auto judge = judge_for(rc, request);

  BenchmarkConfig bc;
  bc.episode = rc.episode;
  if (request.contains("episode")) bc.episode = episode_config_from_json(request["episode"], bc.episode);
  bc.attempts = request_value<int>(request, "attempts", 1);
  if (bc.attempts < 1) arg_error("attempts must be >= 1");
  bc.seed = required_seed(request);
  bc.workers = request_value<std::size_t>(request, "workers", rc.workers);

  const Json sampling = request.value("sampling", Json("auto"));
  std::string preset = "custom";
  if (sampling.is_string()) {
    preset = sampling.get<std::string>();
    if (preset == "auto") preset = bc.attempts > 1 ? "passk" : "pass1";
    if (preset == "pass1") bc.episode.sampling = pass1_sampling();
    else if (preset == "passk") bc.episode.sampling = passk_sampling();
    else if (preset != "episode") arg_error("sampling must be auto, pass1, passk, episode or an object");
  } else {
    bc.episode.sampling = sampling_from_json(sampling, bc.episode.sampling, "sampling");
  }

  std::optional<std::filesystem::path> out_dir;
  if (request.contains("out_dir")) {
    out_dir = required_string(request, "out_dir");
    std::filesystem::create_directories(*out_dir);
    bc.traces_path = *out_dir / "traces.jsonl";
    bc.image_store = *out_dir;
  }

  std::vector<int> ks = request_value<std::vector<int>>(request, "ks", {});
  if (ks.empty()) {
    ks.push_back(1);
    if (bc.attempts > 1) ks.push_back(bc.attempts);
  }
  const auto averaging =
      request_value<std::string>(request, "averaging", "pooled") == "macro" ? Averaging::kMacro : Averaging::kPooled;

  const auto records = run_benchmark(items, base, *backend, bc);
  PassKReport report = score_passk(records, *judge, ks, averaging);
  report.header = {{"manifest", manifest.string()},
                   {"backend", spec},
                   {"judge", request_value<std::string>(request, "judge", rc.judge)},
                   {"attempts", bc.attempts},
                   {"seed", bc.seed},
                   {"sampling_preset", preset},
                   {"sampling", sampling_to_json(bc.episode.sampling)},
                   {"max_calls", bc.episode.max_calls}};
  const ApiFreqReport freq = api_frequency(records);

  Json result;
  result["passk"] = report.to_json();
  result["api_frequency"] = freq.to_json();
  std::string table = report.to_table() + "\n" + freq.to_table();
  if (request.contains("compression_rates")) {
    const auto rates = request_value<std::vector<double>>(request, "compression_rates", {});
    BenchmarkConfig cc = bc;
    cc.traces_path.reset();
    cc.image_store.reset();
    cc.attempts = 1;
    const CompressionReport comp = compression_experiment(items, base, *backend, *judge, rates, cc);
    result["compression"] = comp.to_json();
    table += "\n" + comp.to_table();
  }
  if (out_dir) {
    write_text(*out_dir / "report.json", result.dump(2) + "\n");
    write_text(*out_dir / "report.txt", table);
  }
  result["table"] = table;
  return result;
}

Json op_filter(const RuntimeConfig& rc, const Json& request) {
  const std::uint64_t seed = required_seed(request);
  auto judge = judge_for(rc, request);
  const std::size_t workers = request_value<std::size_t>(request, "workers", rc.workers);
  struct Row {
    QAItem item;
    std::vector<std::string> attempts;
  };
  std::vector<Row> rows;
  if (request.contains("attempts_path")) {
    for (const Json& j : read_jsonl(required_string(request, "attempts_path"))) {
      Row r;
      r.item.id = required_string(j, "id");
      r.item.question = request_value<std::string>(j, "question", "");
      r.item.answer = required_string(j, "answer");
      r.item.image = request_value<std::string>(j, "image", "");
      r.item.split = request_value<std::string>(j, "split", "other");
      r.attempts = request_value<std::vector<std::string>>(j, "attempts", {});
      rows.push_back(std::move(r));
    }
  } else {
    const std::filesystem::path manifest = required_string(request, "manifest");
    const auto items = read_manifest(manifest);
    const std::string spec = request_value<std::string>(request, "backend", rc.backend);
    if (spec.empty()) arg_error("filter needs 'attempts_path' or a manifest with a backend");
    auto backend = make_backend(spec);
    BenchmarkConfig bc;
    bc.episode = rc.episode;
    bc.episode.sampling = passk_sampling();
    bc.attempts = request_value<int>(request, "k", 4);
    bc.seed = seed;
    bc.workers = workers;
    const auto records = run_benchmark(items, manifest.parent_path(), *backend, bc);
    std::map<std::string, std::vector<std::string>> by_item;
    for (const auto& r : records) by_item[r.item_id].push_back(judge_window(r.trace));
    for (const auto& item : items) rows.push_back({item, by_item[item.id]});
  }

  std::vector<DifficultyRecord> records;
  for (const Row& r : rows) records.push_back(passk_difficulty(r.item, r.attempts, *judge, workers));
  const int k = records.empty() ? 0 : records.front().k;
  const FilterPartition part = apply_filter_policy(std::move(records), seed);
  const Json summary = filter_summary(part, seed, k);

  if (request.contains("out_dir")) {
    const std::filesystem::path out = required_string(request, "out_dir");
    std::map<std::string, const QAItem*> lookup;
    for (const Row& r : rows) lookup[r.item.id] = &r.item;
    auto dump = [&](const char* name, const std::vector<DifficultyRecord>& rs) {
      std::vector<Json> lines;
      for (const auto& d : rs) {
        Json j = qa_to_json(*lookup.at(d.item_id));
        j["difficulty"] = difficulty_to_json(d);
        lines.push_back(std::move(j));
      }
      write_jsonl(out / name, lines);
    };
    dump("kept.jsonl", part.kept);
    dump("dropped.jsonl", part.dropped);
    dump("recheck.jsonl", part.recheck);
    write_text(out / "summary.json", summary.dump(2) + "\n");
  }
  return summary;
}

Json op_synth(const RuntimeConfig&, const Json& request) {
  const std::filesystem::path manifest = required_string(request, "manifest");
  const std::filesystem::path out = required_string(request, "out_path");
  const std::string tmpl = request_value<std::string>(request, "template", std::string(kFormatTemplateV1));
  std::optional<AugmentationOp> fixed;
  if (request.contains("op")) fixed = op_from_json(request["op"]);
  const auto items = read_manifest(manifest);
  const auto base = manifest.parent_path();

  std::vector<Json> lines;
  std::size_t index = 0;
  for (const QAItem& item : items) {
    const ImageBuffer image = load_image(item.image_path(base));
    AugmentationOp op;
    if (fixed) {
      op = *fixed;
    } else if (item.fixture.is_object() && item.fixture.contains("required_call") &&
               !item.fixture["required_call"].is_null()) {
      op = op_from_json(item.fixture["required_call"]);
    } else {
      // Deterministic rotation over the operation set.
      switch (index % 5) {
        case 0: op = AugmentationOp::rotate(90); break;
        case 1: op = AugmentationOp::flip(FlipAxis::kHorizontal); break;
        case 2: op = AugmentationOp::denoise(DenoiseMethod::kGaussian, 3); break;
        case 3: op = AugmentationOp::resize_up(Rational(2, 1)); break;
        default:
          op = AugmentationOp::crop(image.width() / 4, image.height() / 4, std::max(image.width() / 4 + 1, image.width() * 3 / 4),
                                    std::max(image.height() / 4 + 1, image.height() * 3 / 4));
          break;
      }
    }
    ++index;
    SftTrajectory sft = synth_format_trajectory(item, image, op, tmpl);
    if (reward_fmt(sft.trace) != 1.0 || reward_api(sft.trace) != 1.0) {
      throw Error(ErrorCode::kInternal, "synthesized trajectory for '" + item.id + "' fails the format checks");
    }
    TraceRecord rec;
    rec.item_id = item.id;
    rec.trace = std::move(sft.trace);
    rec.ground_truth = item.answer;
    rec.split = item.split;
    lines.push_back(trace_to_json(rec, ImageStore{out.parent_path().empty() ? std::filesystem::path(".") : out.parent_path(), true}));
  }
  write_jsonl(out, lines);
  return Json{{"written", lines.size()}, {"path", out.string()}, {"template", tmpl}};
}

Json op_fixture(const RuntimeConfig&, const Json& request) {
  const std::filesystem::path out = required_string(request, "out_dir");
  FixtureOptions opt;
  opt.clean_items = request_value<int>(request, "clean", opt.clean_items);
  opt.adversarial_items = request_value<int>(request, "adversarial", opt.adversarial_items);
  opt.seed = required_seed(request);
  opt.split = request_value<std::string>(request, "split", opt.split);
  std::vector<std::filesystem::path> sources;
  if (request.contains("sources_dir")) {
    for (const auto& e : std::filesystem::directory_iterator(required_string(request, "sources_dir"))) {
      const auto ext = e.path().extension().string();
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") sources.push_back(e.path());
    }
    std::sort(sources.begin(), sources.end());
    if (sources.empty()) arg_error("sources_dir contains no png or jpeg images");
  } else {
    const int count = request_value<int>(request, "source_count",
                                         std::min(26, std::max(1, opt.clean_items + opt.adversarial_items)));
    sources = generate_source_images(out / "sources", count, opt.seed);
  }
  FixtureSummary s = synthesize_fixture(sources, out, opt);
  return s.to_json();
}

Json dispatch_op(const RuntimeConfig& rc, std::string_view name, const Json& request) {
  if (name == "augment") return op_augment(rc, request);
  if (name == "rewards") return op_rewards(rc, request);
  if (name == "grpo_batch") return op_grpo_batch(rc, request);
  if (name == "episode") return op_episode(rc, request);
  if (name == "score_traces") return op_score_traces(rc, request);
  if (name == "grpo_files") return op_grpo_files(rc, request);
  if (name == "eval") return op_eval(rc, request);
  if (name == "filter") return op_filter(rc, request);
  if (name == "synth") return op_synth(rc, request);
  if (name == "fixture") return op_fixture(rc, request);
  throw Error(ErrorCode::kInvalidArgument, "unknown operation '" + std::string(name) + "'");
}

}  // namespace augloop
