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
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgebench/adapters.hpp"
#include "edgebench/catalog.hpp"
#include "edgebench/energy.hpp"

namespace edgebench {

inline constexpr std::string_view kDefaultPrompt =
    "Explain why the sky is blue in two or more paragraphs.";

struct BenchmarkConfig {
  std::string prompt{kDefaultPrompt};
  int max_new_tokens = 100;
  int runs = 5;
  int warmup_runs = 1;
  /// Generation cap for warmup requests; they only need the model resident.
  int warmup_max_new_tokens = 8;
  std::map<std::string, Scalar> decode_params;
  std::chrono::milliseconds cooldown{2000};
  /// A failed timed run is re-issued at most this many times.
  int max_retries = 1;
  /// Endpoints benchmarked in parallel; runs against one endpoint are
  /// always sequential.
  int concurrency = 1;
  Timeouts timeouts;

  void validate() const;
};

enum class RunStatus { ok, failed };

/// One timed streaming request.
struct RunRecord {
  std::string run_id;
  std::string config_id;
  std::string device_id;
  std::string model_id;
  RuntimeKind runtime_kind = RuntimeKind::ollama_native;
  std::int64_t submit_monotonic_ns = 0;
  std::int64_t first_token_ns = 0;
  std::int64_t last_token_ns = 0;
  std::int64_t wall_start_utc_ns = 0;
  std::int64_t token_count = 0;
  std::vector<TokenEvent> events;
  RunStatus status = RunStatus::failed;
  std::string failure_reason;
  std::optional<EnergyResult> energy;

  bool ok() const { return status == RunStatus::ok; }
  double ttft_s() const;
  /// submit -> last token, TTFT included.
  double elapsed_s() const;
  /// token_count / elapsed_s; the canonical throughput.
  double throughput_tps() const;
  /// Decode-phase rate (tokens after the first over first -> last); absent
  /// for single-token runs.
  std::optional<double> generation_tps() const;
  std::optional<double> mj_per_mtok() const;

  /// Throws ValidationError if an ok record breaks an invariant.
  void validate() const;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct Summary {
  double mean = 0.0;
  double stdev = 0.0;
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const Summary&, const Summary&) = default;
};

/// Sample statistics; stdev uses n - 1 and is 0 for a single value.
Summary summarize(std::span<const double> values);

enum class AggregateStatus { ok, failed, unsupported, unreachable };

std::string_view to_string(AggregateStatus s);
AggregateStatus parse_aggregate_status(std::string_view s);

struct MeanStdev {
  double mean = 0.0;
  double stdev = 0.0;

  friend bool operator==(const MeanStdev&, const MeanStdev&) = default;
};

struct AggregateResult {
  std::string config_id;
  std::string device_id;
  std::string model_id;
  RuntimeKind runtime_kind = RuntimeKind::ollama_native;
  AggregateStatus status = AggregateStatus::ok;
  int n = 0;
  int failed_runs = 0;
  Summary throughput_tps;
  Summary ttft_s;
  std::optional<Summary> generation_tps;
  std::optional<MeanStdev> energy_mj_per_mtok;
  std::optional<EnergyMode> energy_mode;
  std::optional<double> mean_power_w;
  /// Per-run throughput minus the mean, in run order.
  std::vector<double> per_run_deviations;
  std::vector<std::string> notes;
  int concurrency = 1;

  friend bool operator==(const AggregateResult&, const AggregateResult&) = default;
};

/// Aggregates the ok runs of one (config, model) pair. Identity fields come
/// from the first run; zero ok runs yields status failed.
AggregateResult aggregate_runs(std::span<const RunRecord> runs);

/// Groups by (config_id, model_id), preserving first-seen order.
std::vector<AggregateResult> recompute_aggregates(std::span<const RunRecord> runs);

/// Where one endpoint lives and which models to run on it.
struct SuiteTarget {
  std::string config_id;
  std::string device_id;
  RuntimeEndpoint endpoint;
  std::vector<std::string> model_ids;
  std::optional<double> constant_power_w;
};

struct RunContext {
  std::string config_id;
  std::string device_id;
  RuntimeKind runtime_kind = RuntimeKind::ollama_native;
  std::string model_id;        // catalog id
  std::string runtime_model;   // name sent to the runtime
  std::optional<double> constant_power_w;
};

RunContext make_run_context(const SuiteTarget& target, const ModelSpec& model);

/// Issues one timed request. Adapter failures come back as status failed.
RunRecord run_once(StreamingClient& client, const RunContext& ctx, const BenchmarkConfig& config);

/// Untimed request(s) that load the model. Returns the first failing
/// completion, or the last successful one.
StreamCompletion warmup(StreamingClient& client, const RunContext& ctx,
                        const BenchmarkConfig& config);

using ClientFactory =
    std::function<std::unique_ptr<StreamingClient>(const RuntimeEndpoint&, const Timeouts&)>;

struct SuiteHooks {
  /// Called for every timed run, ok or failed; serialized across threads.
  std::function<void(const RunRecord&)> on_run;
  std::function<void(std::string_view)> on_progress;
  ClientFactory client_factory;
};

/// Warmup then `runs` sequential timed runs for every (target, model) pair.
/// Throws ConfigError if a device or model id does not resolve.
std::vector<AggregateResult> run_suite(const Catalog& catalog, std::span<const SuiteTarget> targets,
                                       const BenchmarkConfig& config, const SuiteHooks& hooks = {});

}  // namespace edgebench
