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

#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/bench.hpp"
#include "edgebench/energy.hpp"

namespace edgebench {

inline constexpr std::string_view kArtifactVersion = "0.1.0";

struct StoreMetadata {
  std::string suite_config_hash;
  std::string artifact_version{kArtifactVersion};
  std::string created_utc;
  std::string updated_utc;
  int concurrency = 1;

  friend bool operator==(const StoreMetadata&, const StoreMetadata&) = default;
};

/// Energy computed after the run (e.g. from a meter trace), keyed by run id.
struct EnergyAnnotation {
  std::string run_id;
  EnergyResult energy;
  std::string source;
  std::int64_t coverage_gap_ms = 0;
  bool skew_flagged = false;

  friend bool operator==(const EnergyAnnotation&, const EnergyAnnotation&) = default;
};

template <class T>
struct Loaded {
  std::vector<T> records;
  /// "file:line: message" for every line that failed to load.
  std::vector<std::string> diagnostics;
};

// NDJSON codecs; exposed for tests and tooling.
std::string run_to_json(const RunRecord& run);
RunRecord run_from_json(std::string_view line);
std::string aggregates_to_json(std::span<const AggregateResult> aggregates,
                               const StoreMetadata& metadata);

/// 64-bit FNV-1a as 16 hex digits; used to fingerprint suite files.
std::string content_hash(std::string_view text);
std::string iso8601_utc(std::int64_t utc_ns);

/// On-disk result store:
///   runs.ndjson       append-only run records
///   energy.ndjson     append-only energy annotations
///   aggregates.json   metadata + aggregates, replaced atomically
///   catalog.toml      catalog snapshot used by the run
///   exports/*.csv     figure datasets
///   fixtures/         golden fixture copies
/// Single writer, any number of readers; each append is one write() call.
class ResultStore {
 public:
  explicit ResultStore(std::filesystem::path root);

  /// Creates the directory layout if missing.
  void initialize() const;
  bool exists() const;

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path runs_path() const { return root_ / "runs.ndjson"; }
  std::filesystem::path energy_path() const { return root_ / "energy.ndjson"; }
  std::filesystem::path aggregates_path() const { return root_ / "aggregates.json"; }
  std::filesystem::path catalog_path() const { return root_ / "catalog.toml"; }
  std::filesystem::path exports_dir() const { return root_ / "exports"; }
  std::filesystem::path fixtures_dir() const { return root_ / "fixtures"; }

  void append_run(const RunRecord& run) const;
  Loaded<RunRecord> load_runs() const;

  void append_energy(const EnergyAnnotation& annotation) const;
  Loaded<EnergyAnnotation> load_energy() const;

  void write_aggregates(std::span<const AggregateResult> aggregates,
                        const StoreMetadata& metadata) const;
  /// Empty when no aggregates file exists yet.
  std::vector<AggregateResult> load_aggregates() const;
  std::optional<StoreMetadata> load_metadata() const;

  /// Writes `contents` to a file under the root via a temp file + rename.
  void write_file(const std::filesystem::path& relative, std::string_view contents) const;

 private:
  void append_line(const std::filesystem::path& path, std::string line) const;

  std::filesystem::path root_;
};

/// Copies of `runs` with the latest annotation for each run id applied.
std::vector<RunRecord> apply_energy(std::span<const RunRecord> runs,
                                    std::span<const EnergyAnnotation> annotations);

/// Combines aggregates recomputed from the stored runs with the statuses and
/// notes of the latest suite session and the previously stored document.
/// Pairs with runs take their numbers from `recomputed`; pairs without runs
/// (unsupported, unreachable) keep the session or previous entry. Order:
/// previous, then new session pairs, then any other recomputed pairs.
std::vector<AggregateResult> merge_aggregates(std::span<const AggregateResult> previous,
                                              std::span<const AggregateResult> session,
                                              std::span<const AggregateResult> recomputed);

/// True when the numeric content of every recomputed aggregate matches the
/// stored one after rounding to 12 significant digits. Differences are
/// appended to `mismatches`.
bool aggregates_match(std::span<const AggregateResult> stored,
                      std::span<const AggregateResult> recomputed,
                      std::vector<std::string>* mismatches = nullptr);

}  // namespace edgebench
