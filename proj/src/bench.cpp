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

#include "edgebench/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <future>
#include <mutex>
#include <numeric>
#include <thread>

namespace edgebench {

void BenchmarkConfig::validate() const {
  if (runs < 1) throw ValidationError("benchmark.runs", "must be >= 1");
  if (max_new_tokens < 1) throw ValidationError("benchmark.max_new_tokens", "must be >= 1");
  if (warmup_runs < 0) throw ValidationError("benchmark.warmup_runs", "must be >= 0");
  if (warmup_max_new_tokens < 1) {
    throw ValidationError("benchmark.warmup_max_new_tokens", "must be >= 1");
  }
  if (max_retries < 0) throw ValidationError("benchmark.max_retries", "must be >= 0");
  if (concurrency < 1) throw ValidationError("benchmark.concurrency", "must be >= 1");
  if (cooldown.count() < 0) throw ValidationError("benchmark.cooldown_s", "must be >= 0");
}

double RunRecord::ttft_s() const {
  return static_cast<double>(first_token_ns - submit_monotonic_ns) * 1e-9;
}

double RunRecord::elapsed_s() const {
  return static_cast<double>(last_token_ns - submit_monotonic_ns) * 1e-9;
}

double RunRecord::throughput_tps() const {
  const double elapsed = elapsed_s();
  return elapsed > 0.0 ? static_cast<double>(token_count) / elapsed : 0.0;
}

std::optional<double> RunRecord::generation_tps() const {
  if (token_count < 2 || last_token_ns <= first_token_ns) return std::nullopt;
  return static_cast<double>(token_count - 1) /
         (static_cast<double>(last_token_ns - first_token_ns) * 1e-9);
}

std::optional<double> RunRecord::mj_per_mtok() const {
  if (!energy || token_count < 1) return std::nullopt;
  return energy_per_mtok(*energy, token_count);
}

void RunRecord::validate() const {
  if (!ok()) return;
  const std::string ctx = "run[" + run_id + "]";
  if (!(submit_monotonic_ns <= first_token_ns && first_token_ns <= last_token_ns)) {
    throw ValidationError(ctx, "timestamps must satisfy submit <= first_token <= last_token");
  }
  const auto non_final = std::count_if(events.begin(), events.end(),
                                       [](const TokenEvent& e) { return !e.is_final; });
  if (token_count < 1 || token_count != non_final) {
    throw ValidationError(ctx + ".token_count", "must equal the number of non-final events");
  }
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].recv_monotonic_ns < events[i - 1].recv_monotonic_ns) {
      throw ValidationError(ctx + ".events", "receipt times must be nondecreasing");
    }
  }
  if (events.empty() || !events.back().is_final ||
      std::count_if(events.begin(), events.end(), [](const TokenEvent& e) { return e.is_final; }) != 1) {
    throw ValidationError(ctx + ".events", "exactly one final event, and it must be last");
  }
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(ss / (n - 1.0));
  }
  // Rounding can push the mean of identical values just outside [min, max].
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

std::string_view to_string(AggregateStatus s) {
  switch (s) {
    case AggregateStatus::ok: return "ok";
    case AggregateStatus::failed: return "failed";
    case AggregateStatus::unsupported: return "unsupported";
    case AggregateStatus::unreachable: return "unreachable";
  }
  return "unknown";
}

AggregateStatus parse_aggregate_status(std::string_view s) {
  for (auto v : {AggregateStatus::ok, AggregateStatus::failed, AggregateStatus::unsupported,
                 AggregateStatus::unreachable}) {
    if (to_string(v) == s) return v;
  }
  throw ValidationError("status", fmt::format("unknown aggregate status '{}'", s));
}

AggregateResult aggregate_runs(std::span<const RunRecord> runs) {
  AggregateResult agg;
  if (!runs.empty()) {
    agg.config_id = runs.front().config_id;
    agg.device_id = runs.front().device_id;
    agg.model_id = runs.front().model_id;
    agg.runtime_kind = runs.front().runtime_kind;
  }
  std::vector<double> tps, ttft, gen, mj, power;
  std::optional<EnergyMode> mode;
  for (const auto& r : runs) {
    if (!r.ok()) {
      ++agg.failed_runs;
      continue;
    }
    tps.push_back(r.throughput_tps());
    ttft.push_back(r.ttft_s());
    if (auto g = r.generation_tps()) gen.push_back(*g);
    if (auto e = r.mj_per_mtok()) {
      mj.push_back(*e);
      power.push_back(r.energy->mean_power_w);
      if (!mode) mode = r.energy->mode;
    }
  }
  agg.n = static_cast<int>(tps.size());
  if (agg.n == 0) {
    agg.status = AggregateStatus::failed;
    return agg;
  }
  agg.status = AggregateStatus::ok;
  agg.throughput_tps = summarize(tps);
  agg.ttft_s = summarize(ttft);
  if (!gen.empty()) agg.generation_tps = summarize(gen);
  if (!mj.empty()) {
    const Summary e = summarize(mj);
    agg.energy_mj_per_mtok = MeanStdev{e.mean, e.stdev};
    agg.energy_mode = mode;
    agg.mean_power_w = summarize(power).mean;
    if (mj.size() != tps.size()) {
      agg.notes.push_back(fmt::format("energy measured for {} of {} runs", mj.size(), tps.size()));
    }
  }
  for (double v : tps) agg.per_run_deviations.push_back(v - agg.throughput_tps.mean);
  return agg;
}

std::vector<AggregateResult> recompute_aggregates(std::span<const RunRecord> runs) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<RunRecord>> groups;
  for (const auto& r : runs) {
    auto key = std::make_pair(r.config_id, r.model_id);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r);
  }
  std::vector<AggregateResult> out;
  out.reserve(order.size());
  for (const auto& key : order) out.push_back(aggregate_runs(groups[key]));
  return out;
}

RunContext make_run_context(const SuiteTarget& target, const ModelSpec& model) {
  RunContext ctx;
  ctx.config_id = target.config_id;
  ctx.device_id = target.device_id;
  ctx.runtime_kind = target.endpoint.kind;
  ctx.model_id = model.id;
  ctx.runtime_model = model.model_name_for(target.endpoint.kind);
  ctx.constant_power_w = target.constant_power_w;
  return ctx;
}

namespace {

InferenceRequest make_request(const RunContext& ctx, const BenchmarkConfig& config, int max_tokens) {
  InferenceRequest req;
  req.model_id = ctx.runtime_model;
  req.prompt = config.prompt;
  req.max_new_tokens = max_tokens;
  req.decode_params = config.decode_params;
  return req;
}

std::string describe(const StreamCompletion& c) {
  return fmt::format("{}: {}", to_string(c.failure), c.error);
}

}  // namespace

RunRecord run_once(StreamingClient& client, const RunContext& ctx, const BenchmarkConfig& config) {
  RunRecord rec;
  rec.config_id = ctx.config_id;
  rec.device_id = ctx.device_id;
  rec.model_id = ctx.model_id;
  rec.runtime_kind = ctx.runtime_kind;

  const InferenceRequest req = make_request(ctx, config, config.max_new_tokens);
  rec.wall_start_utc_ns = utc_now_ns();
  rec.submit_monotonic_ns = monotonic_now_ns();
  rec.run_id = fmt::format("{}/{}/{}", ctx.config_id, ctx.model_id, rec.wall_start_utc_ns);
  const StreamCompletion completion =
      client.chat_stream(req, [&rec](const TokenEvent& e) { rec.events.push_back(e); });

  for (const auto& e : rec.events) {
    if (e.is_final) continue;
    if (rec.token_count == 0) rec.first_token_ns = e.recv_monotonic_ns;
    rec.last_token_ns = e.recv_monotonic_ns;
    ++rec.token_count;
  }

  if (!completion.ok()) {
    rec.status = RunStatus::failed;
    rec.failure_reason = describe(completion);
    return rec;
  }
  if (rec.token_count == 0) {
    rec.status = RunStatus::failed;
    rec.failure_reason = "protocol: stream completed without any token";
    return rec;
  }
  rec.status = RunStatus::ok;
  const auto& final_event = rec.events.back();
  if (final_event.server_reported &&
      final_event.server_reported->eval_count != rec.token_count) {
    warn(fmt::format("{}: server eval_count {} differs from {} streamed chunks; using client count",
                     rec.run_id, final_event.server_reported->eval_count, rec.token_count));
  }
  if (ctx.constant_power_w) {
    rec.energy = constant_power_energy(*ctx.constant_power_w, rec.elapsed_s());
  }
  return rec;
}

StreamCompletion warmup(StreamingClient& client, const RunContext& ctx,
                        const BenchmarkConfig& config) {
  StreamCompletion last;
  const int tokens = std::min(config.warmup_max_new_tokens, config.max_new_tokens);
  for (int i = 0; i < config.warmup_runs; ++i) {
    last = client.chat_stream(make_request(ctx, config, tokens), [](const TokenEvent&) {});
    if (!last.ok()) return last;
  }
  return last;
}

namespace {

struct PairJob {
  const SuiteTarget* target = nullptr;
  const ModelSpec* model = nullptr;
};

class SuiteRunner {
 public:
  SuiteRunner(const BenchmarkConfig& config, const SuiteHooks& hooks)
      : config_(config), hooks_(hooks) {}

  std::vector<AggregateResult> run_target(const SuiteTarget& target,
                                          const std::vector<const ModelSpec*>& models) {
    std::vector<AggregateResult> out;
    auto client = hooks_.client_factory ? hooks_.client_factory(target.endpoint, config_.timeouts)
                                        : make_client(target.endpoint, config_.timeouts);
    if (target.endpoint.kind != RuntimeKind::stackflow_stub && !client->health_check()) {
      for (const auto* m : models) {
        auto agg = empty_result(target, *m, AggregateStatus::unreachable);
        agg.notes.push_back(fmt::format("endpoint {} failed its health check", target.endpoint.base_url));
        out.push_back(std::move(agg));
      }
      return out;
    }
    bool first_request = true;
    for (const auto* m : models) {
      out.push_back(run_pair(*client, target, *m, first_request));
    }
    return out;
  }

  int concurrency = 1;

 private:
  AggregateResult empty_result(const SuiteTarget& t, const ModelSpec& m, AggregateStatus s) const {
    AggregateResult agg;
    agg.config_id = t.config_id;
    agg.device_id = t.device_id;
    agg.model_id = m.id;
    agg.runtime_kind = t.endpoint.kind;
    agg.status = s;
    agg.concurrency = concurrency;
    return agg;
  }

  void progress(const std::string& msg) {
    if (!hooks_.on_progress) return;
    std::lock_guard lock(mutex_);
    hooks_.on_progress(msg);
  }

  void emit(const RunRecord& rec) {
    if (!hooks_.on_run) return;
    std::lock_guard lock(mutex_);
    hooks_.on_run(rec);
  }

  AggregateResult run_pair(StreamingClient& client, const SuiteTarget& target,
                           const ModelSpec& model, bool& first_request) {
    const RunContext ctx = make_run_context(target, model);
    std::vector<std::string> notes;
    if (config_.warmup_runs > 0) {
      progress(fmt::format("{} / {}: warmup", ctx.config_id, ctx.model_id));
      const StreamCompletion w = warmup(client, ctx, config_);
      if (!w.ok()) {
        const bool unsupported =
            w.model_not_found() || w.failure == StreamFailure::unsupported;
        auto agg = empty_result(target, model,
                                unsupported ? AggregateStatus::unsupported : AggregateStatus::failed);
        agg.notes.push_back("warmup failed, configuration aborted: " + describe(w));
        if (w.model_not_found() && !w.error_body.empty()) agg.notes.push_back(w.error_body);
        progress(fmt::format("{} / {}: {}", ctx.config_id, ctx.model_id, agg.notes.front()));
        return agg;
      }
      first_request = false;
    } else {
      notes.push_back("no warmup performed; first run may include model load time");
    }

    std::vector<RunRecord> records;
    bool unsupported = false;
    for (int i = 0; i < config_.runs && !unsupported; ++i) {
      for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (!first_request && config_.cooldown.count() > 0) {
          std::this_thread::sleep_for(config_.cooldown);
        }
        first_request = false;
        RunRecord rec = run_once(client, ctx, config_);
        emit(rec);
        progress(fmt::format("{} / {}: run {} {}", ctx.config_id, ctx.model_id, i + 1,
                             rec.ok() ? fmt::format("{:.2f} tok/s", rec.throughput_tps())
                                      : "failed: " + rec.failure_reason));
        const bool ok = rec.ok();
        unsupported = !ok && (rec.failure_reason.rfind("http_status: HTTP 404", 0) == 0 ||
                              rec.failure_reason.rfind("unsupported", 0) == 0);
        records.push_back(std::move(rec));
        if (ok || unsupported) break;
      }
    }
    AggregateResult agg = aggregate_runs(records);
    agg.config_id = ctx.config_id;
    agg.device_id = ctx.device_id;
    agg.model_id = ctx.model_id;
    agg.runtime_kind = ctx.runtime_kind;
    agg.concurrency = concurrency;
    if (agg.n == 0 && unsupported) agg.status = AggregateStatus::unsupported;
    if (agg.n < config_.runs) {
      notes.push_back(fmt::format("{} of {} runs ok", agg.n, config_.runs));
    }
    agg.notes.insert(agg.notes.begin(), notes.begin(), notes.end());
    return agg;
  }

  const BenchmarkConfig& config_;
  const SuiteHooks& hooks_;
  std::mutex mutex_;
};

}  // namespace

std::vector<AggregateResult> run_suite(const Catalog& catalog, std::span<const SuiteTarget> targets,
                                       const BenchmarkConfig& config, const SuiteHooks& hooks) {
  config.validate();
  std::vector<std::vector<const ModelSpec*>> models(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    if (catalog.find_device(t.device_id) == nullptr) {
      throw ConfigError(fmt::format("endpoint '{}': unknown device '{}'", t.config_id, t.device_id));
    }
    for (const auto& id : t.model_ids) {
      const ModelSpec* m = catalog.find_model(id);
      if (m == nullptr) {
        throw ConfigError(fmt::format("endpoint '{}': unknown model '{}'", t.config_id, id));
      }
      models[i].push_back(m);
    }
  }

  SuiteRunner runner(config, hooks);
  runner.concurrency = config.concurrency;
  std::vector<std::vector<AggregateResult>> per_target(targets.size());

  if (config.concurrency <= 1) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      per_target[i] = runner.run_target(targets[i], models[i]);
    }
  } else {
    // Targets sharing a base_url form one sequential group; distinct groups
    // run in parallel, `concurrency` at a time.
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::string, std::size_t> group_of;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      auto [it, inserted] = group_of.try_emplace(targets[i].endpoint.base_url, groups.size());
      if (inserted) groups.emplace_back();
      groups[it->second].push_back(i);
    }
    for (std::size_t start = 0; start < groups.size();
         start += static_cast<std::size_t>(config.concurrency)) {
      std::vector<std::future<void>> batch;
      const std::size_t end =
          std::min(groups.size(), start + static_cast<std::size_t>(config.concurrency));
      for (std::size_t g = start; g < end; ++g) {
        batch.push_back(std::async(std::launch::async, [&, g] {
          for (std::size_t i : groups[g]) per_target[i] = runner.run_target(targets[i], models[i]);
        }));
      }
      for (auto& f : batch) f.get();
    }
  }

  std::vector<AggregateResult> out;
  for (auto& v : per_target) {
    for (auto& a : v) out.push_back(std::move(a));
  }
  return out;
}

}  // namespace edgebench
