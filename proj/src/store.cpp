// Copyright 2026 The edgebench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "edgebench/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "edgebench/errors.hpp"

namespace edgebench {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---- JSON codecs ----

namespace {

json energy_to_json(const EnergyResult& e) {
  json j = {{"joules", e.joules},
            {"window_s", e.window_s},
            {"mean_power_w", e.mean_power_w},
            {"mode", to_string(e.mode)},
            {"extrapolated", e.extrapolated}};
  if (e.idle_baseline_w) j["idle_baseline_w"] = *e.idle_baseline_w;
  return j;
}

EnergyResult energy_from_json(const json& j) {
  EnergyResult e;
  e.joules = j.at("joules").get<double>();
  e.window_s = j.at("window_s").get<double>();
  e.mean_power_w = j.at("mean_power_w").get<double>();
  e.mode = parse_energy_mode(j.at("mode").get<std::string>());
  e.extrapolated = j.value("extrapolated", false);
  if (j.contains("idle_baseline_w")) e.idle_baseline_w = j["idle_baseline_w"].get<double>();
  return e;
}

json summary_to_json(const Summary& s) {
  return {{"mean", s.mean}, {"stdev", s.stdev}, {"min", s.min}, {"max", s.max}};
}

Summary summary_from_json(const json& j) {
  return {j.at("mean").get<double>(), j.at("stdev").get<double>(), j.at("min").get<double>(),
          j.at("max").get<double>()};
}

json run_json(const RunRecord& r) {
  json events = json::array();
  for (const auto& e : r.events) {
    json ev = {{"t_ns", e.recv_monotonic_ns}, {"text", e.text_fragment}, {"final", e.is_final}};
    if (e.server_reported) {
      ev["eval_count"] = e.server_reported->eval_count;
      ev["eval_duration_ns"] = e.server_reported->eval_duration_ns;
    }
    events.push_back(std::move(ev));
  }
  json j = {
      {"run_id", r.run_id},
      {"config_id", r.config_id},
      {"device_id", r.device_id},
      {"model_id", r.model_id},
      {"runtime_kind", to_string(r.runtime_kind)},
      {"status", r.ok() ? "ok" : "failed"},
      {"failure_reason", r.failure_reason},
      {"submit_monotonic_ns", r.submit_monotonic_ns},
      {"first_token_ns", r.first_token_ns},
      {"last_token_ns", r.last_token_ns},
      {"wall_start_utc_ns", r.wall_start_utc_ns},
      {"token_count", r.token_count},
      {"events", std::move(events)},
  };
  if (r.ok()) {
    j["ttft_s"] = r.ttft_s();
    j["throughput_tps"] = r.throughput_tps();
  }
  if (r.energy) j["energy"] = energy_to_json(*r.energy);
  return j;
}

RunRecord run_from(const json& j) {
  RunRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.config_id = j.at("config_id").get<std::string>();
  r.device_id = j.at("device_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.runtime_kind = parse_runtime_kind(j.at("runtime_kind").get<std::string>(), "runtime_kind");
  const auto status = j.at("status").get<std::string>();
  if (status != "ok" && status != "failed") throw ValidationError("status", "expected ok or failed");
  r.status = status == "ok" ? RunStatus::ok : RunStatus::failed;
  r.failure_reason = j.value("failure_reason", "");
  r.submit_monotonic_ns = j.at("submit_monotonic_ns").get<std::int64_t>();
  r.first_token_ns = j.at("first_token_ns").get<std::int64_t>();
  r.last_token_ns = j.at("last_token_ns").get<std::int64_t>();
  r.wall_start_utc_ns = j.at("wall_start_utc_ns").get<std::int64_t>();
  r.token_count = j.at("token_count").get<std::int64_t>();
  for (const auto& ev : j.at("events")) {
    TokenEvent e;
    e.recv_monotonic_ns = ev.at("t_ns").get<std::int64_t>();
    e.text_fragment = ev.at("text").get<std::string>();
    e.is_final = ev.at("final").get<bool>();
    if (ev.contains("eval_count")) {
      e.server_reported = ServerCounters{ev["eval_count"].get<std::int64_t>(),
                                         ev.value("eval_duration_ns", std::int64_t{0})};
    }
    r.events.push_back(std::move(e));
  }
  if (j.contains("energy")) r.energy = energy_from_json(j["energy"]);
  r.validate();
  return r;
}

json aggregate_json(const AggregateResult& a) {
  json j = {
      {"config_id", a.config_id},
      {"device_id", a.device_id},
      {"model_id", a.model_id},
      {"runtime_kind", to_string(a.runtime_kind)},
      {"status", to_string(a.status)},
      {"n", a.n},
      {"failed_runs", a.failed_runs},
      {"throughput_tps", summary_to_json(a.throughput_tps)},
      {"ttft_s", summary_to_json(a.ttft_s)},
      {"per_run_deviations", a.per_run_deviations},
      {"notes", a.notes},
      {"concurrency", a.concurrency},
  };
  if (a.generation_tps) j["generation_tps"] = summary_to_json(*a.generation_tps);
  if (a.energy_mj_per_mtok) {
    j["energy_mj_per_mtok"] = {{"mean", a.energy_mj_per_mtok->mean},
                               {"stdev", a.energy_mj_per_mtok->stdev}};
  }
  if (a.energy_mode) j["energy_mode"] = to_string(*a.energy_mode);
  if (a.mean_power_w) j["mean_power_w"] = *a.mean_power_w;
  return j;
}

AggregateResult aggregate_from(const json& j) {
  AggregateResult a;
  a.config_id = j.at("config_id").get<std::string>();
  a.device_id = j.at("device_id").get<std::string>();
  a.model_id = j.at("model_id").get<std::string>();
  a.runtime_kind = parse_runtime_kind(j.at("runtime_kind").get<std::string>(), "runtime_kind");
  a.status = parse_aggregate_status(j.at("status").get<std::string>());
  a.n = j.at("n").get<int>();
  a.failed_runs = j.value("failed_runs", 0);
  a.throughput_tps = summary_from_json(j.at("throughput_tps"));
  a.ttft_s = summary_from_json(j.at("ttft_s"));
  if (j.contains("generation_tps")) a.generation_tps = summary_from_json(j["generation_tps"]);
  if (j.contains("energy_mj_per_mtok")) {
    a.energy_mj_per_mtok = MeanStdev{j["energy_mj_per_mtok"].at("mean").get<double>(),
                                     j["energy_mj_per_mtok"].at("stdev").get<double>()};
  }
  if (j.contains("energy_mode")) a.energy_mode = parse_energy_mode(j["energy_mode"].get<std::string>());
  if (j.contains("mean_power_w")) a.mean_power_w = j["mean_power_w"].get<double>();
  a.per_run_deviations = j.value("per_run_deviations", std::vector<double>{});
  a.notes = j.value("notes", std::vector<std::string>{});
  a.concurrency = j.value("concurrency", 1);
  return a;
}

json metadata_json(const StoreMetadata& m) {
  return {{"suite_config_hash", m.suite_config_hash},
          {"artifact_version", m.artifact_version},
          {"created_utc", m.created_utc},
          {"updated_utc", m.updated_utc},
          {"concurrency", m.concurrency}};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <class T, class Decode>
Loaded<T> load_ndjson(const fs::path& path, Decode decode) {
  Loaded<T> out;
  if (!fs::exists(path)) return out;
  const std::string text = read_file(path);
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    if (!terminated) nl = text.size();
    const std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      json j = json::parse(line);
      out.records.push_back(decode(j));
    } catch (const std::exception& e) {
      out.diagnostics.push_back(fmt::format("{}:{}: {}{}", path.string(), line_no,
                                            terminated ? "" : "truncated record: ", e.what()));
    }
  }
  return out;
}

}  // namespace

std::string run_to_json(const RunRecord& run) { return run_json(run).dump(); }

RunRecord run_from_json(std::string_view line) { return run_from(json::parse(line)); }

std::string aggregates_to_json(std::span<const AggregateResult> aggregates,
                               const StoreMetadata& metadata) {
  json arr = json::array();
  for (const auto& a : aggregates) arr.push_back(aggregate_json(a));
  json doc = {{"metadata", metadata_json(metadata)}, {"aggregates", std::move(arr)}};
  return doc.dump(2) + "\n";
}

std::string content_hash(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string iso8601_utc(std::int64_t utc_ns) {
  const std::time_t secs = static_cast<std::time_t>(utc_ns / 1'000'000'000);
  const int millis = static_cast<int>((utc_ns / 1'000'000) % 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900,
                     tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
}

// ---- ResultStore ----

ResultStore::ResultStore(fs::path root) : root_(std::move(root)) {}

void ResultStore::initialize() const {
  std::error_code ec;
  fs::create_directories(exports_dir(), ec);
  if (!ec) fs::create_directories(fixtures_dir(), ec);
  if (ec) throw IoError(fmt::format("cannot create store '{}': {}", root_.string(), ec.message()));
}

bool ResultStore::exists() const { return fs::is_directory(root_); }

void ResultStore::append_line(const fs::path& path, std::string line) const {
  line += '\n';
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw IoError(fmt::format("cannot open '{}': {}", path.string(), std::strerror(errno)));
  }
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw IoError(fmt::format("write to '{}' failed: {}", path.string(), std::strerror(err)));
    }
    written += static_cast<std::size_t>(n);
  }
  ::close(fd);
}

void ResultStore::append_run(const RunRecord& run) const {
  initialize();
  append_line(runs_path(), run_to_json(run));
}

Loaded<RunRecord> ResultStore::load_runs() const {
  return load_ndjson<RunRecord>(runs_path(), [](const json& j) { return run_from(j); });
}

void ResultStore::append_energy(const EnergyAnnotation& a) const {
  initialize();
  json j = {{"run_id", a.run_id},
            {"energy", energy_to_json(a.energy)},
            {"source", a.source},
            {"coverage_gap_ms", a.coverage_gap_ms},
            {"skew_flagged", a.skew_flagged}};
  append_line(energy_path(), j.dump());
}

Loaded<EnergyAnnotation> ResultStore::load_energy() const {
  return load_ndjson<EnergyAnnotation>(energy_path(), [](const json& j) {
    EnergyAnnotation a;
    a.run_id = j.at("run_id").get<std::string>();
    a.energy = energy_from_json(j.at("energy"));
    a.source = j.value("source", "");
    a.coverage_gap_ms = j.value("coverage_gap_ms", std::int64_t{0});
    a.skew_flagged = j.value("skew_flagged", false);
    return a;
  });
}

void ResultStore::write_file(const fs::path& relative, std::string_view contents) const {
  const fs::path target = root_ / relative;
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
  }
  fs::rename(tmp, target, ec);
  if (ec) throw IoError(fmt::format("cannot replace '{}': {}", target.string(), ec.message()));
}

void ResultStore::write_aggregates(std::span<const AggregateResult> aggregates,
                                   const StoreMetadata& metadata) const {
  initialize();
  write_file("aggregates.json", aggregates_to_json(aggregates, metadata));
}

std::vector<AggregateResult> ResultStore::load_aggregates() const {
  std::vector<AggregateResult> out;
  if (!fs::exists(aggregates_path())) return out;
  json doc = json::parse(read_file(aggregates_path()), nullptr, false);
  if (doc.is_discarded() || !doc.contains("aggregates")) {
    throw ParseError(aggregates_path().string(), 0, "not an aggregates document");
  }
  try {
    for (const auto& a : doc["aggregates"]) out.push_back(aggregate_from(a));
  } catch (const json::exception& e) {
    throw ParseError(aggregates_path().string(), 0, e.what());
  }
  return out;
}

std::optional<StoreMetadata> ResultStore::load_metadata() const {
  if (!fs::exists(aggregates_path())) return std::nullopt;
  json doc = json::parse(read_file(aggregates_path()), nullptr, false);
  if (doc.is_discarded() || !doc.contains("metadata")) return std::nullopt;
  const auto& m = doc["metadata"];
  StoreMetadata out;
  out.suite_config_hash = m.value("suite_config_hash", "");
  out.artifact_version = m.value("artifact_version", "");
  out.created_utc = m.value("created_utc", "");
  out.updated_utc = m.value("updated_utc", "");
  out.concurrency = m.value("concurrency", 1);
  return out;
}

std::vector<RunRecord> apply_energy(std::span<const RunRecord> runs,
                                    std::span<const EnergyAnnotation> annotations) {
  std::map<std::string, const EnergyAnnotation*> latest;
  for (const auto& a : annotations) latest[a.run_id] = &a;
  std::vector<RunRecord> out(runs.begin(), runs.end());
  for (auto& r : out) {
    if (auto it = latest.find(r.run_id); it != latest.end()) r.energy = it->second->energy;
  }
  return out;
}

namespace {

const AggregateResult* find_pair(std::span<const AggregateResult> list, const AggregateResult& key) {
  for (const auto& a : list) {
    if (a.config_id == key.config_id && a.model_id == key.model_id) return &a;
  }
  return nullptr;
}

}  // namespace

std::vector<AggregateResult> merge_aggregates(std::span<const AggregateResult> previous,
                                              std::span<const AggregateResult> session,
                                              std::span<const AggregateResult> recomputed) {
  std::vector<AggregateResult> order;
  for (auto list : {previous, session, recomputed}) {
    for (const auto& a : list) {
      if (find_pair(order, a) == nullptr) order.push_back(a);
    }
  }
  std::vector<AggregateResult> out;
  for (const auto& key : order) {
    const AggregateResult* rec = find_pair(recomputed, key);
    const AggregateResult* ses = find_pair(session, key);
    const AggregateResult* prev = find_pair(previous, key);
    const AggregateResult* context = ses != nullptr ? ses : prev;
    if (rec == nullptr) {
      out.push_back(*context);
      continue;
    }
    AggregateResult merged = *rec;
    if (context != nullptr) {
      merged.concurrency = context->concurrency;
      merged.notes.clear();
      for (const auto& note : context->notes) {
        // Energy coverage notes are re-derived from the runs.
        if (note.rfind("energy measured for", 0) == 0) continue;
        merged.notes.push_back(note);
      }
      for (const auto& note : rec->notes) {
        if (std::find(merged.notes.begin(), merged.notes.end(), note) == merged.notes.end()) {
          merged.notes.push_back(note);
        }
      }
    }
    out.push_back(std::move(merged));
  }
  return out;
}

namespace {

std::string rounded(double v) { return fmt::format("{:.11e}", v); }

void compare_summary(const std::string& where, const char* what, const Summary& a, const Summary& b,
                     std::vector<std::string>& diffs) {
  if (rounded(a.mean) != rounded(b.mean) || rounded(a.stdev) != rounded(b.stdev) ||
      rounded(a.min) != rounded(b.min) || rounded(a.max) != rounded(b.max)) {
    diffs.push_back(fmt::format("{}: {} differs (stored mean {}, recomputed {})", where, what,
                                a.mean, b.mean));
  }
}

}  // namespace

bool aggregates_match(std::span<const AggregateResult> stored,
                      std::span<const AggregateResult> recomputed,
                      std::vector<std::string>* mismatches) {
  std::vector<std::string> diffs;
  for (const auto& r : recomputed) {
    const std::string where = r.config_id + "/" + r.model_id;
    const AggregateResult* s = nullptr;
    for (const auto& cand : stored) {
      if (cand.config_id == r.config_id && cand.model_id == r.model_id) s = &cand;
    }
    if (s == nullptr) {
      diffs.push_back(where + ": missing from stored aggregates");
      continue;
    }
    if (s->n != r.n) diffs.push_back(fmt::format("{}: n {} vs {}", where, s->n, r.n));
    compare_summary(where, "throughput_tps", s->throughput_tps, r.throughput_tps, diffs);
    compare_summary(where, "ttft_s", s->ttft_s, r.ttft_s, diffs);
    if (s->energy_mj_per_mtok.has_value() != r.energy_mj_per_mtok.has_value() ||
        (s->energy_mj_per_mtok &&
         (rounded(s->energy_mj_per_mtok->mean) != rounded(r.energy_mj_per_mtok->mean) ||
          rounded(s->energy_mj_per_mtok->stdev) != rounded(r.energy_mj_per_mtok->stdev)))) {
      diffs.push_back(where + ": energy differs");
    }
  }
  if (mismatches != nullptr) mismatches->insert(mismatches->end(), diffs.begin(), diffs.end());
  return diffs.empty();
}

}  // namespace edgebench
