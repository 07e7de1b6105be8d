// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "eval.hpp"
#include "grpo.hpp"
#include "pipeline.hpp"
#include "trace_io.hpp"

namespace augloop {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;  // empty: no authentication
  std::size_t max_payload_bytes = 64u << 20;
  bool allow_backend_specs = false;  // let /v1/episode name arbitrary backends
  int threads = 8;
};

/// Settings shared by every JSON operation. Mirrors the config file format
/// documented in docs/config.md.
struct RuntimeConfig {
  std::string backend;  // default backend spec
  std::string judge = "rule";
  std::size_t workers = 1;
  EpisodeConfig episode;
  RewardConfig rewards;
  BatchConfig batch;
  ServiceConfig service;

  /// Unknown keys raise Error(kConfigInvalid).
  static RuntimeConfig from_json(const Json& j);
  Json to_json() const;
};

/// Applies an `episode` override object on top of `base`.
EpisodeConfig episode_config_from_json(const Json& j, EpisodeConfig base);
OpVocabulary vocabulary_from_json(const Json& j);

// Each operation takes a request object and returns a result object. All
// failures are Error exceptions with a stable code.

/// {image, op | call, original?} -> {image, sha256, width, height, channels, op}
Json op_augment(const RuntimeConfig& rc, const Json& request);
/// {trace, ground_truth?, judge?} -> RewardBreakdown fields
Json op_rewards(const RuntimeConfig& rc, const Json& request);
/// {traces: [...]} | {groups: [{group_id, traces}]} (+ beta, normalization)
/// -> {records: [...]}
Json op_grpo_batch(const RuntimeConfig& rc, const Json& request);
/// {image | image_path, question, backend?, seed?, episode?} -> {trace}
Json op_episode(const RuntimeConfig& rc, const Json& request, bool allow_backend_specs = true);

/// {traces_path | traces, ground_truth_from?, out_path?} -> {records | written}
Json op_score_traces(const RuntimeConfig& rc, const Json& request);
/// {traces_path | traces, out_path?} -> {records | written}
Json op_grpo_files(const RuntimeConfig& rc, const Json& request);
/// {manifest, out_dir, attempts, seed, sampling?, ks?, averaging?, compression_rates?}
Json op_eval(const RuntimeConfig& rc, const Json& request);
/// {attempts_path | (manifest, k), seed, out_dir}
Json op_filter(const RuntimeConfig& rc, const Json& request);
/// {manifest, out_path, op?, template?}
Json op_synth(const RuntimeConfig& rc, const Json& request);
/// {out_dir, sources_dir?, source_count?, clean?, adversarial?, seed}
Json op_fixture(const RuntimeConfig& rc, const Json& request);

/// Dispatches by operation name (augment, rewards, grpo_batch, episode,
/// score_traces, grpo_files, eval, filter, synth, fixture).
Json dispatch_op(const RuntimeConfig& rc, std::string_view name, const Json& request);

/// `{code, numeric, message}` for an error.
Json error_json(ErrorCode code, std::string_view message);

std::string_view library_version() noexcept;

}  // namespace augloop
