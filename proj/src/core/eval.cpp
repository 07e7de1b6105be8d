// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include "eval.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "parallel.hpp"
#include "rng.hpp"

namespace augloop {

SamplingParams pass1_sampling() { return SamplingParams{0.1, 0.8, -1, 0}; }
SamplingParams passk_sampling() { return SamplingParams{0.7, 0.95, -1, 0}; }

Json sampling_to_json(const SamplingParams& s) {
  Json j;
  j["temperature"] = s.temperature;
  j["top_p"] = s.top_p;
  j["top_k"] = s.top_k;
  return j;
}

namespace {

std::string fmt_pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string key_of(const std::string& id, int attempt) { return id + '\x1f' + std::to_string(attempt); }

}  // namespace

std::vector<TraceRecord> run_benchmark(const std::vector<QAItem>& items, const std::filesystem::path& base_dir,
                                       ModelBackend& backend, const BenchmarkConfig& config) {
  if (config.attempts < 1) throw Error(ErrorCode::kConfigInvalid, "attempts must be >= 1");
  if (config.compression_rate && !(*config.compression_rate > 0 && *config.compression_rate <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "compression rate must be in (0, 1]");
  }
  config.episode.validate();

  std::map<std::string, TraceRecord> done;
  if (config.traces_path && std::filesystem::exists(*config.traces_path)) {
    for (TraceRecord& r : load_traces(*config.traces_path, config.image_store)) {
      done.emplace(key_of(r.item_id, r.attempt), std::move(r));
    }
  }
  struct Job {
    std::size_t item;
    int attempt;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (int a = 0; a < config.attempts; ++a) {
      if (!done.count(key_of(items[i].id, a))) jobs.push_back({i, a});
    }
  }

  // Query images are decoded once per item.
  std::vector<std::shared_ptr<const ImageBuffer>> images(items.size());
  std::vector<std::shared_ptr<const ImageBuffer>> queries(items.size());
  std::set<std::size_t> needed;
  for (const Job& j : jobs) needed.insert(j.item);
  for (std::size_t i : needed) {
    images[i] = std::make_shared<const ImageBuffer>(load_image(items[i].image_path(base_dir)));
    queries[i] = config.compression_rate
                     ? std::make_shared<const ImageBuffer>(downsample_for_compression(*images[i], *config.compression_rate))
                     : images[i];
  }

  std::mutex mu;
  const ImageStore store{config.image_store, true};
  const std::size_t workers = backend.serialized() ? 1 : config.workers;
  parallel_for(jobs.size(), workers, [&](std::size_t n) {
    const Job& job = jobs[n];
    const QAItem& item = items[job.item];
    EpisodeConfig ec = config.episode;
    ec.sampling.seed = derive_seed(config.seed, item.id, job.attempt);
    EpisodeQuery q;
    q.image = queries[job.item];
    q.question = item.question;
    if (queries[job.item] != images[job.item]) q.full_resolution = images[job.item];
    TraceRecord rec;
    rec.trace = run_episode(backend, q, ec);
    rec.trace.trace_id = item.id + "#" + std::to_string(job.attempt);
    rec.item_id = item.id;
    rec.attempt = job.attempt;
    rec.seed = ec.sampling.seed;
    rec.ground_truth = item.answer;
    rec.split = item.split;
    rec.group_id = item.id;
    std::lock_guard lock(mu);
    if (config.traces_path) append_jsonl(*config.traces_path, trace_to_json(rec, store));
    done.emplace(key_of(item.id, job.attempt), std::move(rec));
  });

  std::vector<TraceRecord> out;
  for (const QAItem& item : items) {
    for (int a = 0; a < config.attempts; ++a) {
      auto it = done.find(key_of(item.id, a));
      if (it != done.end()) out.push_back(std::move(it->second));
    }
  }
  return out;
}

// ---- pass@k -------------------------------------------------------------------

PassKReport score_passk(const std::vector<TraceRecord>& records, Judge& judge, std::vector<int> ks,
                        Averaging averaging) {
  if (ks.empty()) ks = {1};
  for (int k : ks) {
    if (k < 1) throw Error(ErrorCode::kConfigInvalid, "pass@k needs k >= 1");
  }
  PassKReport rep;
  rep.ks = ks;
  rep.averaging = averaging;

  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::pair<int, const TraceRecord*>>> attempts;
  for (const TraceRecord& r : records) {
    if (!r.ground_truth) {
      throw Error(ErrorCode::kStructureInvalid, "record '" + r.trace.trace_id + "' has no ground truth");
    }
    auto [it, inserted] = index.try_emplace(r.item_id, rep.items.size());
    if (inserted) {
      rep.items.push_back({r.item_id, r.split.value_or("other"), {}});
      attempts.emplace_back();
    }
    attempts[it->second].emplace_back(r.attempt, &r);
  }
  for (std::size_t i = 0; i < rep.items.size(); ++i) {
    auto& list = attempts[i];
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [attempt, rec] : list) {
      rep.items[i].scores.push_back(reward_vqa(rec->trace, *rec->ground_truth, judge));
    }
  }

  const std::size_t nk = ks.size();
  auto correct_at = [&](const PassKReport::ItemVerdicts& v, int k) {
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), v.scores.size());
    for (std::size_t a = 0; a < n; ++a) {
      if (v.scores[a] >= 0.5) return true;
    }
    return false;
  };
  std::map<std::string, std::vector<int>> hits;
  for (const auto& v : rep.items) {
    if (!rep.splits.count(v.split)) {
      rep.split_order.push_back(v.split);
      rep.splits[v.split].rates.assign(nk, 0.0);
      hits[v.split].assign(nk, 0);
    }
    ++rep.splits[v.split].items;
    for (std::size_t j = 0; j < nk; ++j) hits[v.split][j] += correct_at(v, ks[j]) ? 1 : 0;
  }
  rep.pooled.rates.assign(nk, 0.0);
  rep.macro.rates.assign(nk, 0.0);
  rep.pooled.items = rep.macro.items = static_cast<int>(rep.items.size());
  std::vector<int> total_hits(nk, 0);
  for (const auto& name : rep.split_order) {
    PassKCell& cell = rep.splits[name];
    for (std::size_t j = 0; j < nk; ++j) {
      cell.rates[j] = static_cast<double>(hits[name][j]) / cell.items;
      total_hits[j] += hits[name][j];
      rep.macro.rates[j] += cell.rates[j] / static_cast<double>(rep.split_order.size());
    }
  }
  for (std::size_t j = 0; j < nk; ++j) {
    rep.pooled.rates[j] = rep.items.empty() ? 0.0 : static_cast<double>(total_hits[j]) / rep.items.size();
  }
  return rep;
}

Json PassKReport::to_json() const {
  auto cell_json = [&](const PassKCell& c) {
    Json j;
    j["items"] = c.items;
    for (std::size_t i = 0; i < ks.size(); ++i) j["pass@" + std::to_string(ks[i])] = c.rates[i];
    return j;
  };
  Json j;
  j["schema"] = "augloop.passk.v1";
  j["run"] = header.is_null() ? Json::object() : header;
  j["ks"] = ks;
  j["averaging"] = averaging == Averaging::kPooled ? "pooled" : "macro";
  Json splits_j = Json::object();
  for (const auto& name : split_order) splits_j[name] = cell_json(splits.at(name));
  j["splits"] = std::move(splits_j);
  j["overall"] = {{"pooled", cell_json(pooled)}, {"macro", cell_json(macro)}};
  Json items_j = Json::array();
  for (const auto& v : items) items_j.push_back({{"id", v.id}, {"split", v.split}, {"scores", v.scores}});
  j["items"] = std::move(items_j);
  return j;
}

std::string PassKReport::to_table() const {
  std::ostringstream out;
  out << pad("split", 16) << pad("items", 8);
  for (int k : ks) out << pad("pass@" + std::to_string(k), 10);
  out << '\n';
  auto row = [&](const std::string& name, const PassKCell& c) {
    out << pad(name, 16) << pad(std::to_string(c.items), 8);
    for (double r : c.rates) out << pad(fmt_pct(r), 10);
    out << '\n';
  };
  for (const auto& name : split_order) row(name, splits.at(name));
  row(averaging == Averaging::kPooled ? "average" : "average(macro)",
      averaging == Averaging::kPooled ? pooled : macro);
  return out.str();
}

// ---- API frequency ---------------------------------------------------------------

ApiFreqReport api_frequency(const std::vector<TraceRecord>& records) {
  ApiFreqReport rep;
  for (const char* c : kApiColumns) rep.ops[c] = 0;
  rep.episodes = static_cast<int>(records.size());
  rep.zero_denominator = records.empty();
  if (records.empty()) return rep;
  int direct = 0, fail = 0;
  std::map<std::string, int> counts;
  for (const TraceRecord& r : records) {
    const EpisodeTrace& t = r.trace;
    if (t.k == 0) ++direct;
    bool failed = t.terminated_by == Termination::kForced;
    std::set<std::string> present;
    for (const CallRecord& c : t.calls) {
      if (c.status == CallStatus::kParseError) failed = true;
      if (!c.op) continue;
      const std::string name(op_kind_name(c.op->kind));
      present.insert(name);
      if (c.op->kind == OpKind::kResizeUp || c.op->kind == OpKind::kResizeDown) present.insert("resize");
    }
    if (failed) ++fail;
    for (const auto& p : present) ++counts[p];
  }
  const double n = static_cast<double>(records.size());
  rep.direct = 100.0 * direct / n;
  rep.fail = 100.0 * fail / n;
  for (const char* c : kApiColumns) rep.ops[c] = 100.0 * counts[c] / n;
  return rep;
}

Json ApiFreqReport::to_json() const {
  Json j;
  j["schema"] = "augloop.apifreq.v1";
  j["episodes"] = episodes;
  j["zero_denominator"] = zero_denominator;
  j["direct"] = direct;
  j["fail"] = fail;
  Json o = Json::object();
  for (const char* c : kApiColumns) o[c] = ops.at(c);
  j["ops"] = std::move(o);
  return j;
}

std::string ApiFreqReport::to_table() const {
  std::ostringstream out;
  out << pad("direct", 9) << pad("fail", 9);
  for (const char* c : kApiColumns) out << pad(c, 13);
  out << '\n';
  if (zero_denominator) {
    out << "(no episodes)\n";
    return out.str();
  }
  char buf[32];
  auto pct = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return std::string(buf);
  };
  out << pad(pct(direct), 9) << pad(pct(fail), 9);
  for (const char* c : kApiColumns) out << pad(pct(ops.at(c)), 13);
  out << '\n';
  return out.str();
}

// ---- compression --------------------------------------------------------------------

CompressionReport compression_experiment(const std::vector<QAItem>& items, const std::filesystem::path& base_dir,
                                         ModelBackend& backend, Judge& judge, const std::vector<double>& rates,
                                         const BenchmarkConfig& config, std::vector<bool> arms) {
  for (double r : rates) {
    if (!(r > 0 && r <= 1)) throw Error(ErrorCode::kInvalidArgument, "compression rate must be in (0, 1]");
  }
  CompressionReport rep;
  for (double rate : rates) {
    for (bool allow : arms) {
      BenchmarkConfig bc = config;
      bc.compression_rate = rate;
      bc.traces_path.reset();
      if (!allow) bc.episode.vocabulary.erase(OpKind::kResizeUp);
      const auto records = run_benchmark(items, base_dir, backend, bc);
      CompressionCell cell;
      cell.rate = rate;
      cell.allow_resize_up = allow;
      cell.episodes = static_cast<int>(records.size());
      int correct = 0, ups = 0;
      for (const TraceRecord& r : records) {
        if (reward_vqa(r.trace, *r.ground_truth, judge) >= 0.5) ++correct;
        const bool up = std::any_of(r.trace.calls.begin(), r.trace.calls.end(), [](const CallRecord& c) {
          return c.op && c.op->kind == OpKind::kResizeUp;
        });
        if (up) ++ups;
      }
      if (cell.episodes > 0) {
        cell.accuracy = static_cast<double>(correct) / cell.episodes;
        cell.resize_up_rate = static_cast<double>(ups) / cell.episodes;
      }
      rep.cells.push_back(cell);
    }
  }
  return rep;
}

Json CompressionReport::to_json() const {
  Json j;
  j["schema"] = "augloop.compression.v1";
  Json cs = Json::array();
  for (const auto& c : cells) {
    cs.push_back({{"rate", c.rate},
                  {"allow_resize_up", c.allow_resize_up},
                  {"episodes", c.episodes},
                  {"accuracy", c.accuracy},
                  {"resize_up_rate", c.resize_up_rate}});
  }
  j["cells"] = std::move(cs);
  return j;
}

std::string CompressionReport::to_table() const {
  std::ostringstream out;
  out << pad("rate", 8) << pad("resize_up", 11) << pad("episodes", 10) << pad("accuracy", 10)
      << pad("up_rate", 10) << '\n';
  for (const auto& c : cells) {
    char rate[16];
    std::snprintf(rate, sizeof rate, "%.2f", c.rate);
    out << pad(rate, 8) << pad(c.allow_resize_up ? "allowed" : "stripped", 11) << pad(std::to_string(c.episodes), 10)
        << pad(fmt_pct(c.accuracy), 10) << pad(fmt_pct(c.resize_up_rate), 10) << '\n';
  }
  return out.str();
}

}  // namespace augloop
