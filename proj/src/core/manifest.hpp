// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trace_io.hpp"

namespace augloop {

/// One line of a QA or benchmark manifest:
/// `{"id", "image", "question", "answer", "split"?, "type"?, "fixture"?}`.
/// Relative image paths resolve against the manifest's directory.
struct QAItem {
  std::string id;
  std::string image;
  std::string question;
  std::string answer;
  std::string split = "other";
  std::string type;
  Json fixture;  // null unless produced by the fixture synthesizer

  std::filesystem::path image_path(const std::filesystem::path& base_dir) const;
};

Json qa_to_json(const QAItem& item);
/// Throws Error(kStructureInvalid).
QAItem qa_from_json(const Json& j);

/// Throws Error(kStructureInvalid) on malformed lines or duplicate ids.
std::vector<QAItem> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<QAItem>& items);

}  // namespace augloop
