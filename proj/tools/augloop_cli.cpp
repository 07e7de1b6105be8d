// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

// Operator entry point. Every subcommand builds a JSON request and hands it
// to the C API, so results match direct library calls.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "augloop/augloop.h"
#include "cli_config.hpp"

namespace cli = augloop::cli;
using cli::Json;

namespace {

enum class Format { kJson, kRecords, kTable };

struct Globals {
  std::string config_path;
  std::optional<std::size_t> workers;
  std::string backend;
  std::string judge;
  std::optional<int> max_calls;
  std::vector<std::string> ops;
  std::string format = "json";
  bool print_config = false;
};

// Failure carrying a library status.
struct Failure {
  int status;
  std::string message;
};

struct Runtime {
  augloop_runtime* rt = nullptr;
  ~Runtime() { augloop_runtime_free(rt); }
};

std::string take(char* s) {
  std::string out = s ? s : "";
  augloop_string_free(s);
  return out;
}

void check(int status) {
  if (status != AUGLOOP_OK) throw Failure{status, augloop_last_error()};
}

Json read_config_file(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw Failure{AUGLOOP_IO_ERROR, "cannot open config file " + path};
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Failure{AUGLOOP_CONFIG_INVALID, "config file " + path + " is not JSON: " + e.what()};
  }
}

Json flag_layer(const Globals& g) {
  Json j = Json::object();
  if (!g.backend.empty()) j["backend"] = g.backend;
  if (!g.judge.empty()) j["judge"] = g.judge;
  if (g.workers) j["workers"] = *g.workers;
  if (g.max_calls) j["episode"]["max_calls"] = *g.max_calls;
  if (!g.ops.empty()) j["episode"]["ops"] = g.ops;
  return j;
}

Json library_defaults() {
  Runtime r;
  check(augloop_runtime_new(nullptr, &r.rt));
  char* out = nullptr;
  check(augloop_runtime_config(r.rt, &out));
  return Json::parse(take(out));
}

// Serializes with invalid UTF-8 replaced, as model text may contain it.
std::string text_of(const Json& j, int indent = -1) {
  return j.dump(indent, ' ', false, Json::error_handler_t::replace);
}

Json call(augloop_runtime* rt, const char* op, const Json& request) {
  char* out = nullptr;
  check(augloop_call(rt, op, text_of(request).c_str(), &out));
  return Json::parse(take(out));
}

void emit(const Json& j) { std::cout << text_of(j) << '\n'; }

void emit_result(Format f, const Json& result, const std::vector<Json>& records) {
  if (f == Format::kRecords) {
    for (const Json& r : records) emit(r);
  } else {
    std::cout << text_of(result, 2) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"augloop: tool-augmented visual reasoning loop, rewards and GRPO batches"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--workers", g.workers, "parallelism cap")->check(CLI::PositiveNumber);
  app.add_option("--backend", g.backend, "policy backend: scripted:FILE, oracle:MANIFEST, http(s)://URL or env");
  app.add_option("--judge", g.judge, "judge: rule, rule-contains, http(s)://URL or env");
  app.add_option("--max-calls", g.max_calls, "call budget K")->check(CLI::PositiveNumber);
  app.add_option("--ops", g.ops, "allowed operations (default: all)")->delimiter(',');
  app.add_option("--format", g.format, "output: json, records or table")
      ->check(CLI::IsMember({"json", "records", "table"}));
  app.add_flag("--print-config", g.print_config, "print the merged config to stderr");

  // run
  auto* run = app.add_subcommand("run", "single episode from an image and a question");
  std::string image, question, run_out, ground_truth, trace_id = "run";
  std::uint64_t run_seed = 0;
  run->add_option("--image", image, "query image (png or jpeg)")->required()->check(CLI::ExistingFile);
  run->add_option("--question", question)->required();
  run->add_option("--seed", run_seed, "sampling seed");
  run->add_option("--ground-truth", ground_truth, "score the trace against this answer");
  run->add_option("--trace-id", trace_id);
  run->add_option("--out", run_out, "also write the trace record to this file");

  // eval
  auto* eval = app.add_subcommand("eval", "benchmark manifest to pass@k reports");
  std::string manifest, out_dir, sampling = "auto", averaging = "pooled";
  int attempts = 1;
  std::uint64_t seed = 0;
  std::vector<int> ks;
  std::vector<double> rates;
  eval->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  eval->add_option("--attempts", attempts)->check(CLI::PositiveNumber);
  eval->add_option("--seed", seed)->required();
  eval->add_option("--out-dir", out_dir, "traces.jsonl, report.json, report.txt");
  eval->add_option("--sampling", sampling)->check(CLI::IsMember({"auto", "pass1", "passk", "episode"}));
  eval->add_option("--ks", ks)->delimiter(',');
  eval->add_option("--averaging", averaging)->check(CLI::IsMember({"pooled", "macro"}));
  eval->add_option("--compression-rates", rates)->delimiter(',');

  // filter
  auto* filter = app.add_subcommand("filter", "pass@k difficulty filter");
  std::string attempts_file;
  int filter_k = 4;
  auto* af = filter->add_option("--attempts-file", attempts_file, "JSONL of {id, question, answer, attempts}")
                 ->check(CLI::ExistingFile);
  auto* fm = filter->add_option("--manifest", manifest, "sample attempts with the backend instead")
                 ->check(CLI::ExistingFile);
  af->excludes(fm);
  filter->add_option("--k", filter_k)->check(CLI::PositiveNumber);
  filter->add_option("--seed", seed)->required();
  filter->add_option("--out-dir", out_dir, "kept/dropped/recheck JSONL and summary.json");

  // synth
  auto* synth = app.add_subcommand("synth", "format-SFT trajectories");
  std::string synth_out, op_json, template_id;
  synth->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--op", op_json, "operation as JSON, e.g. {\"name\":\"rotate\",\"params\":{\"degrees\":90}}");
  synth->add_option("--template", template_id);

  // rewards
  auto* rewards = app.add_subcommand("rewards", "score trace files");
  std::string traces, out_path;
  rewards->add_option("--traces", traces)->required()->check(CLI::ExistingFile);
  rewards->add_option("--out", out_path);

  // grpo
  auto* grpo = app.add_subcommand("grpo", "assemble GRPO training records");
  std::optional<double> beta;
  std::string normalization;
  grpo->add_option("--traces", traces)->required()->check(CLI::ExistingFile);
  grpo->add_option("--out", out_path);
  grpo->add_option("--beta", beta)->check(CLI::NonNegativeNumber);
  grpo->add_option("--normalization", normalization)->check(CLI::IsMember({"group", "trajectory"}));

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP service");
  std::string host, token;
  std::optional<int> port;
  std::optional<std::size_t> max_payload;
  bool allow_specs = false;
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--token", token, "shared secret for X-Augloop-Token");
  serve->add_option("--max-payload", max_payload, "request size cap in bytes");
  serve->add_flag("--allow-backend-specs", allow_specs, "let /v1/episode name backends and read server paths");

  // fixture
  auto* fixture = app.add_subcommand("fixture", "synthesize the end-to-end fixture");
  std::string sources;
  std::optional<int> clean, adversarial;
  fixture->add_option("--out-dir", out_dir)->required();
  fixture->add_option("--sources", sources, "directory of source images (default: generated)")
      ->check(CLI::ExistingDirectory);
  fixture->add_option("--clean", clean)->check(CLI::NonNegativeNumber);
  fixture->add_option("--adversarial", adversarial)->check(CLI::NonNegativeNumber);
  fixture->add_option("--seed", seed)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return cli::kExitUsage;
  }

  const Format format = g.format == "records" ? Format::kRecords : g.format == "table" ? Format::kTable : Format::kJson;

  try {
    Json flags = flag_layer(g);
    if (serve->parsed()) {
      if (!host.empty()) flags["service"]["host"] = host;
      if (port) flags["service"]["port"] = *port;
      if (!token.empty()) flags["service"]["token"] = token;
      if (max_payload) flags["service"]["max_payload_bytes"] = *max_payload;
      if (allow_specs) flags["service"]["allow_backend_specs"] = true;
    }
    Json env;
    try {
      env = cli::env_layer([](const char* n) { return std::getenv(n); });
    } catch (const cli::ConfigError& e) {
      throw Failure{AUGLOOP_CONFIG_INVALID, e.what()};
    }
    const Json merged = cli::merge_config(library_defaults(), read_config_file(g.config_path), env, flags);
    if (g.print_config) {
      Json shown = merged;
      if (shown.contains("service") && shown["service"].value("token", std::string()).size() > 0) {
        shown["service"]["token"] = "***";
      }
      std::cerr << text_of(shown, 2) << '\n';
    }

    Runtime r;
    check(augloop_runtime_new(merged.dump().c_str(), &r.rt));

    if (run->parsed()) {
      Json req{{"image_path", image}, {"question", question}, {"seed", run_seed}, {"trace_id", trace_id}};
      if (!ground_truth.empty()) req["ground_truth"] = ground_truth;
      Json result = call(r.rt, "episode", req);
      Json& trace = result["trace"];
      if (!ground_truth.empty()) {
        trace["rewards"] = call(r.rt, "rewards", Json{{"trace", trace}});
      }
      if (!run_out.empty()) {
        std::ofstream out(run_out, std::ios::binary);
        out << text_of(trace) << '\n';
        if (!out) throw Failure{AUGLOOP_IO_ERROR, "cannot write " + run_out};
      }
      if (format == Format::kTable) {
        std::cout << "final_answer: " << trace["final_answer"].get<std::string>() << "\nk: " << trace["k"]
                  << "\nterminated_by: " << trace["terminated_by"].get<std::string>() << '\n';
      } else {
        emit_result(format, trace, {trace});
      }
    } else if (eval->parsed()) {
      Json req{{"manifest", manifest}, {"attempts", attempts}, {"seed", seed}, {"sampling", sampling},
               {"averaging", averaging}};
      if (!out_dir.empty()) req["out_dir"] = out_dir;
      if (!ks.empty()) req["ks"] = ks;
      if (!rates.empty()) req["compression_rates"] = rates;
      Json result = call(r.rt, "eval", req);
      if (format == Format::kTable) {
        std::cout << result["table"].get<std::string>();
      } else {
        std::vector<Json> recs{result["passk"], result["api_frequency"]};
        if (result.contains("compression")) recs.push_back(result["compression"]);
        result.erase("table");
        emit_result(format, result, recs);
      }
    } else if (filter->parsed()) {
      Json req{{"seed", seed}, {"k", filter_k}};
      if (!attempts_file.empty()) req["attempts_path"] = attempts_file;
      if (!manifest.empty()) req["manifest"] = manifest;
      if (attempts_file.empty() && manifest.empty()) {
        std::cerr << "error: filter needs --attempts-file or --manifest\n\n" << filter->help();
        return cli::kExitUsage;
      }
      if (!out_dir.empty()) req["out_dir"] = out_dir;
      const Json result = call(r.rt, "filter", req);
      emit_result(format, result, {result});
    } else if (synth->parsed()) {
      Json req{{"manifest", manifest}, {"out_path", synth_out}};
      if (!template_id.empty()) req["template"] = template_id;
      if (!op_json.empty()) {
        try {
          req["op"] = Json::parse(op_json);
        } catch (const nlohmann::json::exception&) {
          std::cerr << "error: --op must be JSON\n\n" << synth->help();
          return cli::kExitUsage;
        }
      }
      const Json result = call(r.rt, "synth", req);
      emit_result(format, result, {});
    } else if (rewards->parsed() || grpo->parsed()) {
      Json req{{"traces_path", traces}};
      if (!out_path.empty()) req["out_path"] = out_path;
      if (beta) req["beta"] = *beta;
      if (!normalization.empty()) req["normalization"] = normalization;
      const Json result = call(r.rt, rewards->parsed() ? "score_traces" : "grpo_files", req);
      std::vector<Json> recs;
      if (result.contains("records")) recs = result["records"].get<std::vector<Json>>();
      emit_result(format, result, recs);
    } else if (serve->parsed()) {
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      augloop_service* svc = nullptr;
      int bound = 0;
      check(augloop_service_start(r.rt, &svc, &bound));
      std::cerr << "augloop " << augloop_version() << " listening on "
                << merged["service"]["host"].get<std::string>() << ':' << bound << std::endl;
      int sig = 0;
      sigwait(&set, &sig);
      augloop_service_stop(svc);
    } else if (fixture->parsed()) {
      Json req{{"out_dir", out_dir}, {"seed", seed}};
      if (!sources.empty()) req["sources_dir"] = sources;
      if (clean) req["clean"] = *clean;
      if (adversarial) req["adversarial"] = *adversarial;
      const Json result = call(r.rt, "fixture", req);
      emit_result(format, result, {result});
    }
  } catch (const Failure& f) {
    std::cerr << "error[" << augloop_status_name(f.status) << "]: " << f.message << '\n';
    return cli::exit_code_for_status(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error[Internal]: " << e.what() << '\n';
    return cli::exit_code_for_status(AUGLOOP_INTERNAL);
  }
  return 0;
}
