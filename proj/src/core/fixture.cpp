// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixture.hpp"

#include <algorithm>
#include <random>

#include "rng.hpp"

namespace augloop {

std::string_view corruption_name(Corruption c) noexcept {
  switch (c) {
    case Corruption::kNone: return "none";
    case Corruption::kRotate90: return "rotate90";
    case Corruption::kRotate180: return "rotate180";
    case Corruption::kRotate270: return "rotate270";
    case Corruption::kFlipH: return "flip_horizontal";
    case Corruption::kFlipV: return "flip_vertical";
    case Corruption::kSaltPepper: return "salt_pepper";
    case Corruption::kLowRes: return "low_resolution";
    case Corruption::kPadded: return "padded";
  }
  return "?";
}

Json FixtureSummary::to_json() const {
  Json j;
  j["schema"] = "augloop.fixture.v1";
  j["manifest"] = manifest.string();
  j["items"] = items;
  j["clean"] = clean;
  j["stripped_rate"] = stripped_rate;
  return j;
}

namespace {

constexpr const char* kWords[] = {"alpha", "bravo",  "charlie", "delta",  "echo",    "foxtrot", "golf",
                                  "hotel", "india",  "juliet",  "kilo",   "lima",    "mike",    "november",
                                  "oscar", "papa",   "quebec",  "romeo",  "sierra",  "tango",   "uniform",
                                  "victor", "whiskey", "xray",  "yankee", "zulu"};

constexpr Corruption kCycle[] = {Corruption::kRotate90,   Corruption::kRotate180, Corruption::kRotate270,
                                 Corruption::kFlipH,      Corruption::kFlipV,     Corruption::kSaltPepper,
                                 Corruption::kLowRes,     Corruption::kPadded};

ImageBuffer must(ExecOutcome o) {
  if (!o.ok()) throw Error(o.error().code, o.error().text);
  return o.image();
}

ImageBuffer procedural_image(std::mt19937_64& gen) {
  const int w = 64, h = 40;
  ImageBuffer img(w, h, 3);
  auto pixels = img.pixels();
  auto byte = [&] { return static_cast<std::uint8_t>(gen() & 0xFF); };
  const std::uint8_t bg[3] = {byte(), byte(), byte()};
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = bg[i % 3];
  auto fill = [&](int x0, int y0, int x1, int y1, const std::uint8_t* c) {
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x)
        for (int ch = 0; ch < 3; ++ch) pixels[(static_cast<std::size_t>(y) * w + x) * 3 + ch] = c[ch];
  };
  for (int r = 0; r < 6; ++r) {
    const int x0 = static_cast<int>(gen() % (w - 8)), y0 = static_cast<int>(gen() % (h - 8));
    const int x1 = x0 + 4 + static_cast<int>(gen() % 12), y1 = y0 + 4 + static_cast<int>(gen() % 10);
    const std::uint8_t c[3] = {byte(), byte(), byte()};
    fill(x0, y0, std::min(x1, w), std::min(y1, h), c);
  }
  // Corner marker breaks every rotational and mirror symmetry.
  const std::uint8_t mark[3] = {255, 0, 0};
  const std::uint8_t mark2[3] = {0, 0, 255};
  fill(0, 0, 6, 3, mark);
  fill(0, 3, 3, 6, mark2);
  return img;
}

ImageBuffer salt_pepper(const ImageBuffer& src, std::mt19937_64& gen) {
  ImageBuffer out = src;
  auto px = out.pixels();
  const int w = out.width(), h = out.height(), c = out.channels();
  // One candidate per 3x3 cell, interior only, so no two outliers touch.
  for (int cy = 1; cy + 1 < h; cy += 3) {
    for (int cx = 1; cx + 1 < w; cx += 3) {
      if (uniform01(gen) >= 0.25) continue;
      const std::uint8_t v = (gen() & 1) ? 255 : 0;
      for (int ch = 0; ch < c; ++ch) px[(static_cast<std::size_t>(cy) * w + cx) * c + ch] = v;
    }
  }
  return out;
}

}  // namespace

std::vector<std::filesystem::path> generate_source_images(const std::filesystem::path& dir, int count,
                                                          std::uint64_t seed) {
  constexpr int kWordCount = static_cast<int>(std::size(kWords));
  if (count < 1 || count > kWordCount) {
    throw Error(ErrorCode::kInvalidArgument, "source image count must be in [1, " + std::to_string(kWordCount) + "]");
  }
  std::filesystem::create_directories(dir);
  std::mt19937_64 gen(seed);
  std::vector<std::filesystem::path> out;
  for (int i = 0; i < count; ++i) {
    const auto path = dir / (std::string(kWords[i]) + ".png");
    save_png(procedural_image(gen), path);
    out.push_back(path);
  }
  return out;
}

std::string answer_from_filename(const std::filesystem::path& path) {
  std::string s = path.stem().string();
  std::replace(s.begin(), s.end(), '_', ' ');
  std::replace(s.begin(), s.end(), '-', ' ');
  return s;
}

FixtureSummary synthesize_fixture(const std::vector<std::filesystem::path>& sources,
                                  const std::filesystem::path& out_dir, const FixtureOptions& options) {
  if (sources.empty()) throw Error(ErrorCode::kInvalidArgument, "fixture needs at least one source image");
  if (options.clean_items < 0 || options.adversarial_items < 0 ||
      options.clean_items + options.adversarial_items < 1) {
    throw Error(ErrorCode::kInvalidArgument, "fixture needs at least one item");
  }
  std::filesystem::create_directories(out_dir / "images");
  std::mt19937_64 gen(options.seed);
  std::vector<QAItem> items;
  const int total = options.clean_items + options.adversarial_items;
  for (int i = 0; i < total; ++i) {
    const auto& src_path = sources[static_cast<std::size_t>(i) % sources.size()];
    const ImageBuffer src = load_image(src_path);
    const Corruption corr = i < options.clean_items
                                ? Corruption::kNone
                                : kCycle[static_cast<std::size_t>(i - options.clean_items) % std::size(kCycle)];
    std::optional<AugmentationOp> fix;
    ImageBuffer shipped = src;
    switch (corr) {
      case Corruption::kNone:
        break;
      case Corruption::kRotate90:
        shipped = must(apply_op(src, AugmentationOp::rotate(90), src));
        fix = AugmentationOp::rotate(270);
        break;
      case Corruption::kRotate180:
        shipped = must(apply_op(src, AugmentationOp::rotate(180), src));
        fix = AugmentationOp::rotate(180);
        break;
      case Corruption::kRotate270:
        shipped = must(apply_op(src, AugmentationOp::rotate(270), src));
        fix = AugmentationOp::rotate(90);
        break;
      case Corruption::kFlipH:
        shipped = must(apply_op(src, AugmentationOp::flip(FlipAxis::kHorizontal), src));
        fix = AugmentationOp::flip(FlipAxis::kHorizontal);
        break;
      case Corruption::kFlipV:
        shipped = must(apply_op(src, AugmentationOp::flip(FlipAxis::kVertical), src));
        fix = AugmentationOp::flip(FlipAxis::kVertical);
        break;
      case Corruption::kSaltPepper:
        shipped = salt_pepper(src, gen);
        fix = AugmentationOp::denoise(DenoiseMethod::kMedian, 3);
        break;
      case Corruption::kLowRes:
        shipped = resample_bilinear(src, std::max(1, src.width() / 2), std::max(1, src.height() / 2));
        fix = AugmentationOp::resize_up(Rational(2, 1));
        break;
      case Corruption::kPadded: {
        const int ox = 4 + static_cast<int>(gen() % static_cast<std::uint64_t>(src.width()));
        const int oy = 4 + static_cast<int>(gen() % static_cast<std::uint64_t>(src.height()));
        ImageBuffer canvas(src.width() * 2 + 8, src.height() * 2 + 8, src.channels());
        auto cp = canvas.pixels();
        std::fill(cp.begin(), cp.end(), std::uint8_t{200});
        const auto sp = src.pixels();
        const auto c = static_cast<std::size_t>(src.channels());
        for (int y = 0; y < src.height(); ++y) {
          std::copy_n(sp.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(y) * src.width() * c),
                      static_cast<std::size_t>(src.width()) * c,
                      cp.begin() + static_cast<std::ptrdiff_t>(
                                       (static_cast<std::size_t>(y + oy) * canvas.width() + ox) * c));
        }
        shipped = std::move(canvas);
        fix = AugmentationOp::crop(ox, oy, ox + src.width(), oy + src.height());
        break;
      }
    }
    const ImageBuffer solved = fix ? must(apply_op(shipped, *fix, shipped)) : shipped;

    char id[16];
    std::snprintf(id, sizeof id, "fx-%02d", i);
    QAItem q;
    q.id = id;
    q.image = "images/" + q.id + ".png";
    q.question = "[" + q.id + "] Which word does this picture encode?";
    q.answer = answer_from_filename(src_path);
    q.split = options.split;
    q.type = std::string(corruption_name(corr));
    save_png(shipped, out_dir / q.image);
    Json fx;
    fx["corruption"] = corruption_name(corr);
    fx["required_call"] = fix ? op_to_json(*fix) : Json(nullptr);
    fx["shipped_sha256"] = content_hash(shipped);
    fx["solved_sha256"] = content_hash(solved);
    q.fixture = std::move(fx);
    items.push_back(std::move(q));
  }
  FixtureSummary s;
  s.manifest = out_dir / "manifest.jsonl";
  write_manifest(s.manifest, items);
  s.items = total;
  s.clean = options.clean_items;
  s.stripped_rate = static_cast<double>(options.clean_items) / total;
  Json summary = s.to_json();
  summary["manifest"] = "manifest.jsonl";
  write_file_bytes(out_dir / "fixture.json",
                   [&] {
                     const std::string t = summary.dump(2) + "\n";
                     return std::vector<std::uint8_t>(t.begin(), t.end());
                   }());
  return s;
}

// ---- oracle backend ---------------------------------------------------------------

OracleBackend OracleBackend::from_manifest(const std::filesystem::path& manifest) {
  std::map<std::string, Entry> entries;
  const auto base = manifest.parent_path();
  for (const QAItem& q : read_manifest(manifest)) {
    if (!q.fixture.is_object()) {
      throw Error(ErrorCode::kStructureInvalid, "item '" + q.id + "' has no fixture metadata");
    }
    Entry e;
    e.answer = q.answer;
    const Json& req = q.fixture.value("required_call", Json(nullptr));
    if (!req.is_null()) e.required = op_from_json(req);
    e.shipped_sha256 = q.fixture.value("shipped_sha256", std::string());
    e.solved_sha256 = q.fixture.value("solved_sha256", std::string());
    const ImageBuffer img = load_image(q.image_path(base));
    e.width = img.width();
    e.height = img.height();
    entries.emplace(q.question, std::move(e));
  }
  return OracleBackend(std::move(entries));
}

GeneratedSpan OracleBackend::generate(const GenerateRequest& request) {
  const ChatHistory& h = request.history;
  GeneratedSpan out;
  out.finish_reason = "stop";
  auto answer = [&](const std::string& text, const char* why) {
    out.text = std::string(kThinkOpen) + why + std::string(kThinkClose) + "\n" + std::string(kAnswerOpen) + text +
               std::string(kAnswerClose);
    return out;
  };
  if (h.size() < 2) throw Error(ErrorCode::kBackendUnavailable, "oracle needs a query");
  const std::string& utext = h[1].text;
  const std::string question =
      utext.starts_with(kImagePlaceholder) ? utext.substr(kImagePlaceholder.size()) : utext;
  const auto it = entries_.find(question);
  if (it == entries_.end()) return answer("unknown", "This question is not in my fixture.");
  const Entry& e = it->second;

  const Attachment* latest = nullptr;
  for (const Message& m : h) {
    for (const Attachment& a : m.attachments) latest = &a;
  }
  if (latest && latest->sha256 == e.solved_sha256) return answer(e.answer, "The image is readable now.");

  const bool forced = h.back().role == Role::kUser && h.back().text == kForcedAnswerMessage;
  if (forced) return answer("unknown", "I cannot read the image.");

  auto call = [&](const AugmentationOp& op, const char* why) {
    out.text = std::string(kThinkOpen) + why + std::string(kThinkClose) + "\n" + std::string(kCodeOpen) + "\n" +
               render_call(op) + "\n" + std::string(kCodeClose);
    return out;
  };
  auto already_called = [&](const AugmentationOp& op) {
    const std::string rendered = render_call(op);
    return std::any_of(h.begin(), h.end(), [&](const Message& m) {
      return m.role == Role::kAssistant && m.text.find(rendered) != std::string::npos;
    });
  };

  if (latest && latest->width < e.width && request.available_ops.count(OpKind::kResizeUp)) {
    const AugmentationOp up = AugmentationOp::resize_up(Rational(e.width, latest->width));
    if (!already_called(up)) return call(up, "The image was shrunk; restore its size first.");
  }
  if (e.required && request.available_ops.count(e.required->kind) && !already_called(*e.required)) {
    return call(*e.required, "The image needs one correction before it can be read.");
  }
  return answer("unknown", "I cannot read the image.");
}

}  // namespace augloop
