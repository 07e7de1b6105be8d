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

namespace augloop {

/// Corruptions the synthesizer can apply, each paired with the call that
/// undoes (or works around) it.
enum class Corruption { kNone, kRotate90, kRotate180, kRotate270, kFlipH, kFlipV, kSaltPepper, kLowRes, kPadded };
std::string_view corruption_name(Corruption c) noexcept;

struct FixtureOptions {
  int clean_items = 4;
  int adversarial_items = 16;  // cycles through every corruption
  std::uint64_t seed = 0;
  std::string split = "synthetic";
};

struct FixtureSummary {
  std::filesystem::path manifest;
  int items = 0;
  int clean = 0;
  /// Accuracy an oracle reaches when no operation is available.
  double stripped_rate = 0;
  Json to_json() const;
};

/// Procedural source images, one per answer word, written as `<word>.png`.
std::vector<std::filesystem::path> generate_source_images(const std::filesystem::path& dir, int count,
                                                          std::uint64_t seed);

/// Answer text recorded for a source image: the file stem with `_` and `-`
/// turned into spaces.
std::string answer_from_filename(const std::filesystem::path& path);

/// Builds `<out_dir>/manifest.jsonl` plus corrupted images from `sources`
/// (reused round-robin). Every record carries a `fixture` object with the
/// corruption, the required call (or null), and the hashes of the image
/// as shipped and after the required call.
FixtureSummary synthesize_fixture(const std::vector<std::filesystem::path>& sources,
                                  const std::filesystem::path& out_dir, const FixtureOptions& options);

/// Policy stand-in for harness tests. It answers correctly exactly when the
/// latest image matches the fixture's solved state. When an earlier
/// compression shrank the query it first calls resize_up back to the
/// manifest size (if allowed), then the required call (if allowed), and
/// otherwise answers "unknown". Items are matched by question text.
class OracleBackend final : public ModelBackend {
 public:
  struct Entry {
    std::string answer;
    std::optional<AugmentationOp> required;
    std::string shipped_sha256;
    std::string solved_sha256;
    int width = 0;
    int height = 0;
  };

  explicit OracleBackend(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}
  static OracleBackend from_manifest(const std::filesystem::path& manifest);

  GeneratedSpan generate(const GenerateRequest& request) override;

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace augloop
