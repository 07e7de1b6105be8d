// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "manifest.hpp"

#include <fstream>
#include <set>

namespace augloop {

std::filesystem::path QAItem::image_path(const std::filesystem::path& base_dir) const {
  const std::filesystem::path p(image);
  return p.is_absolute() ? p : base_dir / p;
}

Json qa_to_json(const QAItem& item) {
  Json j;
  j["id"] = item.id;
  j["image"] = item.image;
  j["question"] = item.question;
  j["answer"] = item.answer;
  j["split"] = item.split;
  if (!item.type.empty()) j["type"] = item.type;
  if (!item.fixture.is_null()) j["fixture"] = item.fixture;
  return j;
}

QAItem qa_from_json(const Json& j) {
  auto req = [&](const char* key) {
    if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
      throw Error(ErrorCode::kStructureInvalid, std::string("manifest record needs string field '") + key + "'");
    }
    return j[key].get<std::string>();
  };
  QAItem q;
  q.id = req("id");
  q.image = req("image");
  q.question = req("question");
  q.answer = req("answer");
  if (j.contains("split")) q.split = req("split");
  if (j.contains("type")) q.type = req("type");
  if (j.contains("fixture")) q.fixture = j["fixture"];
  return q;
}

std::vector<QAItem> read_manifest(const std::filesystem::path& path) {
  std::vector<QAItem> items;
  std::set<std::string> ids;
  for (const Json& j : read_jsonl(path)) {
    QAItem q = qa_from_json(j);
    if (!ids.insert(q.id).second) {
      throw Error(ErrorCode::kStructureInvalid, "duplicate manifest id '" + q.id + "'");
    }
    items.push_back(std::move(q));
  }
  return items;
}

void write_manifest(const std::filesystem::path& path, const std::vector<QAItem>& items) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  for (const QAItem& q : items) out << dump_compact(qa_to_json(q)) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace augloop
