// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "episode.hpp"
#include "json.hpp"
#include "rewards.hpp"

namespace augloop {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kTraceSchema = "augloop.trace.v1";

/// One line of a trace file: an episode plus its bookkeeping and, once
/// scored, its reward fields.
struct TraceRecord {
  std::string item_id;
  int attempt = 0;
  std::uint64_t seed = 0;
  EpisodeTrace trace;
  std::optional<std::string> ground_truth;
  std::optional<std::string> split;
  std::optional<RewardBreakdown> rewards;
  std::optional<std::string> group_id;
  std::vector<double> logp_policy;
  std::vector<double> logp_ref;
};

/// Where attachment pixels go when a record is written. With no store
/// directory, images are embedded as base64 PNG; otherwise they are written
/// once to `<dir>/<sha[0:2]>/<sha>.png` and referenced by relative path.
struct ImageStore {
  std::optional<std::filesystem::path> dir;
  bool embed_pixels = true;  // false: write metadata only
};

Json op_to_json(const AugmentationOp& op);
/// Accepts `{"name": ..., "params": {...}}`. Throws Error(kParamInvalid) or
/// Error(kUnknownOperation).
AugmentationOp op_from_json(const Json& j);

Json image_to_json(const ImageBuffer& image);  // {"width","height","channels","png_b64"}
ImageBuffer image_from_json(const Json& j);

Json rewards_to_json(const RewardBreakdown& r);
RewardBreakdown rewards_from_json(const Json& j);

Json trace_to_json(const TraceRecord& record, const ImageStore& store = {});
/// `store_dir` resolves relative attachment refs. Missing pixels leave
/// Attachment::image null. Throws Error(kStructureInvalid) on schema errors.
TraceRecord trace_from_json(const Json& j, const std::optional<std::filesystem::path>& store_dir = {});

/// Text of a trace record with images as metadata only; the form used for
/// hashing and golden comparisons.
std::string trace_fingerprint(const EpisodeTrace& trace);

std::vector<Json> read_jsonl(const std::filesystem::path& path);
std::vector<Json> parse_jsonl(std::string_view text);
void append_jsonl(const std::filesystem::path& path, const Json& record);
std::string dump_compact(const Json& j);

std::vector<TraceRecord> load_traces(const std::filesystem::path& path,
                                     const std::optional<std::filesystem::path>& store_dir = {});

}  // namespace augloop
