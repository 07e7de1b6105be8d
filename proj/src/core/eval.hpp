// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "rewards.hpp"

namespace augloop {

/// Eval sampling settings. top_k = -1 leaves top-k filtering off.
SamplingParams pass1_sampling();  // temperature 0.1, top_p 0.8
SamplingParams passk_sampling();  // temperature 0.7, top_p 0.95

Json sampling_to_json(const SamplingParams& s);

struct BenchmarkConfig {
  EpisodeConfig episode;
  int attempts = 1;
  std::uint64_t seed = 0;  // per-attempt seeds derive from (seed, item id, attempt)
  std::size_t workers = 1;
  /// Downsample each query by this rate (full resolution kept for recall).
  std::optional<double> compression_rate;
  /// Trace file; existing (item, attempt) pairs are reused, new ones appended.
  std::optional<std::filesystem::path> traces_path;
  /// Attachment store next to the trace file; null embeds base64 pixels.
  std::optional<std::filesystem::path> image_store;
};

/// Runs `attempts` episodes per item. Returns records ordered by manifest
/// position, then attempt. Backend failures stop the run after completed
/// records are saved and rethrow as the original error.
std::vector<TraceRecord> run_benchmark(const std::vector<QAItem>& items, const std::filesystem::path& base_dir,
                                       ModelBackend& backend, const BenchmarkConfig& config);

enum class Averaging { kPooled, kMacro };

struct PassKCell {
  int items = 0;
  std::vector<double> rates;  // aligned with PassKReport::ks
};

struct PassKReport {
  std::vector<int> ks;
  Averaging averaging = Averaging::kPooled;
  std::vector<std::string> split_order;
  std::map<std::string, PassKCell> splits;
  PassKCell pooled;
  PassKCell macro;
  struct ItemVerdicts {
    std::string id;
    std::string split;
    std::vector<double> scores;  // per attempt, in attempt order
  };
  std::vector<ItemVerdicts> items;
  Json header;  // sampling and run settings, copied into the output verbatim

  /// Headline rate for the requested averaging mode.
  double overall(std::size_t k_index) const {
    return (averaging == Averaging::kPooled ? pooled : macro).rates.at(k_index);
  }
  Json to_json() const;
  std::string to_table() const;
};

/// Judges each record's answer window against its ground truth. An item is
/// correct@k when any of its first k attempts scores >= 0.5. Throws
/// Error(kJudgeUnavailable) from the judge and Error(kStructureInvalid) for
/// records without ground truth.
PassKReport score_passk(const std::vector<TraceRecord>& records, Judge& judge, std::vector<int> ks = {1, 5},
                        Averaging averaging = Averaging::kPooled);

/// Per-episode presence columns, in report order.
inline constexpr const char* kApiColumns[] = {"crop",   "resize", "resize_up", "resize_down",
                                              "flip",   "rotate", "denoise",   "edge"};

struct ApiFreqReport {
  int episodes = 0;
  bool zero_denominator = true;
  double direct = 0;  // percentages in [0, 100]
  double fail = 0;
  std::map<std::string, double> ops;
  Json to_json() const;
  std::string to_table() const;
};

/// direct: k == 0. fail: any call with a parse error, or forced termination.
/// An op column counts episodes with at least one call that parsed to it.
ApiFreqReport api_frequency(const std::vector<TraceRecord>& records);

struct CompressionCell {
  double rate = 1;
  bool allow_resize_up = true;
  int episodes = 0;
  double accuracy = 0;        // fraction of episodes judged correct
  double resize_up_rate = 0;  // fraction of episodes calling resize_up
};

struct CompressionReport {
  std::vector<CompressionCell> cells;
  Json to_json() const;
  std::string to_table() const;
};

/// Runs the benchmark once per (rate, arm). The stripped arm removes
/// resize_up from the vocabulary. Throws Error(kInvalidArgument) for rates
/// outside (0, 1].
CompressionReport compression_experiment(const std::vector<QAItem>& items, const std::filesystem::path& base_dir,
                                         ModelBackend& backend, Judge& judge, const std::vector<double>& rates,
                                         const BenchmarkConfig& config, std::vector<bool> arms = {true, false});

}  // namespace augloop
