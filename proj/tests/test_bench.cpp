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

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <deque>
#include <mutex>

#include "edgebench/bench.hpp"
#include "edgebench/mock_server.hpp"
#include "support.hpp"

using namespace edgebench;

namespace {

/// Scripted client: each call pops the next scripted outcome and emits
/// synthetic timestamps relative to the call time.
struct Script {
  enum Kind { ok, drop, not_found, refuse } kind = ok;
  int tokens = 10;
  std::int64_t ttft_ns = 100'000'000;
  std::int64_t gap_ns = 10'000'000;
  std::int64_t eval_count = -1;  // -1: same as tokens
};

class FakeClient final : public StreamingClient {
 public:
  FakeClient(RuntimeEndpoint e, std::deque<Script> script, bool healthy, std::atomic<int>* calls)
      : endpoint_(std::move(e)), script_(std::move(script)), healthy_(healthy), calls_(calls) {}

  StreamCompletion chat_stream(const InferenceRequest& req, const TokenSink& sink) override {
    ++*calls_;
    last_request_ = req;
    Script s = script_.empty() ? Script{} : script_.front();
    if (!script_.empty()) script_.pop_front();
    StreamCompletion c;
    if (s.kind == Script::not_found) {
      c.failure = StreamFailure::http_status;
      c.http_status = 404;
      c.error = "HTTP 404: model not found";
      c.error_body = "{\"error\":\"model not found\"}";
      return c;
    }
    if (s.kind == Script::refuse) {
      c.failure = StreamFailure::connect;
      return c;
    }
    const int n = std::min(s.tokens, req.max_new_tokens);
    std::int64_t t = monotonic_now_ns() + s.ttft_ns;
    for (int k = 0; k < n; ++k) {
      if (s.kind == Script::drop && k == 2) {
        c.failure = StreamFailure::transport;
        c.error = "dropped";
        return c;
      }
      TokenEvent e;
      e.recv_monotonic_ns = t;
      e.text_fragment = mock_token_text(k);
      sink(e);
      ++c.total_events;
      if (k + 1 < n) t += s.gap_ns;
    }
    TokenEvent fin;
    fin.recv_monotonic_ns = t;
    fin.is_final = true;
    fin.server_reported = ServerCounters{s.eval_count < 0 ? n : s.eval_count, 1};
    sink(fin);
    c.total_events++;
    c.saw_final = true;
    c.transport_ok = true;
    return c;
  }
  bool health_check() override { return healthy_; }
  const RuntimeEndpoint& endpoint() const override { return endpoint_; }

  InferenceRequest last_request_;

 private:
  RuntimeEndpoint endpoint_;
  std::deque<Script> script_;
  bool healthy_;
  std::atomic<int>* calls_;
};

Catalog test_catalog() { return load_catalog(testing::fixture_path("catalog.toml")); }

SuiteTarget target(const std::string& id, std::vector<std::string> models, RuntimeKind kind = RuntimeKind::mock,
                   const std::string& url = "http://127.0.0.1:1") {
  SuiteTarget t;
  t.config_id = id;
  t.device_id = "rpi5";
  t.endpoint = RuntimeEndpoint::with_defaults(kind);
  t.endpoint.base_url = url;
  t.model_ids = std::move(models);
  return t;
}

BenchmarkConfig fast_config() {
  BenchmarkConfig c;
  c.cooldown = std::chrono::milliseconds(0);
  c.max_new_tokens = 10;
  return c;
}

struct Harness {
  std::map<std::string, std::deque<Script>> scripts;  // by base_url
  std::map<std::string, bool> healthy;
  std::atomic<int> calls{0};
  std::vector<RunRecord> runs;
  std::mutex mu;

  SuiteHooks hooks() {
    SuiteHooks h;
    h.client_factory = [this](const RuntimeEndpoint& e, const Timeouts&) -> std::unique_ptr<StreamingClient> {
      if (e.kind == RuntimeKind::stackflow_stub) return make_client(e);
      const bool ok = healthy.count(e.base_url) ? healthy[e.base_url] : true;
      return std::make_unique<FakeClient>(e, scripts[e.base_url], ok, &calls);
    };
    h.on_run = [this](const RunRecord& r) {
      std::lock_guard lock(mu);
      runs.push_back(r);
    };
    return h;
  }
};

}  // namespace

TEST_CASE("bench: summary statistics use the sample stdev") {
  const double v[] = {1, 2, 3, 4};
  const auto s = summarize(v);
  CHECK(s.mean == 2.5);
  CHECK(s.stdev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(s.min == 1);
  CHECK(s.max == 4);
  const double one[] = {7.0};
  CHECK(summarize(one).stdev == 0.0);
}

TEST_CASE("bench: summary invariants (property)") {
  testing::Gen g(31);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> v;
    const double base = g.uniform(-100, 100);
    for (int k = 0; k < g.integer(1, 30); ++k) v.push_back(g.coin(0.3) ? base : g.uniform(-100, 100));
    const auto s = summarize(v);
    CHECK(s.min <= s.mean);
    CHECK(s.mean <= s.max);
    CHECK(s.stdev >= 0.0);
  }
}

TEST_CASE("bench: run record metrics") {
  testing::Gen g(1);
  RunRecord r = g.run("c", "m", 100);
  r.energy.reset();
  r.submit_monotonic_ns = 0;
  r.first_token_ns = 800'000'000;
  r.last_token_ns = 20'600'000'000;
  r.events.front().recv_monotonic_ns = r.first_token_ns;
  CHECK(r.ttft_s() == doctest::Approx(0.8));
  CHECK(r.throughput_tps() == doctest::Approx(100 / 20.6));
  CHECK(*r.generation_tps() == doctest::Approx(99 / 19.8));
  CHECK_FALSE(r.mj_per_mtok().has_value());
  r.energy = constant_power_energy(10.0, r.elapsed_s());
  CHECK(*r.mj_per_mtok() == doctest::Approx(10.0 * 20.6 / 100));
}

TEST_CASE("bench: run records validate their invariants") {
  testing::Gen g(2);
  RunRecord r = g.run("c", "m", 5);
  CHECK_NOTHROW(r.validate());
  RunRecord bad = r;
  bad.token_count = 4;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = r;
  bad.first_token_ns = bad.submit_monotonic_ns - 1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = r;
  std::swap(bad.events[0], bad.events[1]);
  bad.events[1].recv_monotonic_ns = bad.events[0].recv_monotonic_ns - 1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("bench: aggregation and regrouping (property)") {
  testing::Gen g(3);
  for (int i = 0; i < 100; ++i) {
    std::vector<RunRecord> runs;
    for (int k = 0; k < g.integer(1, 20); ++k) {
      runs.push_back(g.run(g.coin() ? "a" : "b", g.coin() ? "x" : "y", static_cast<int>(g.integer(1, 50))));
      if (g.coin(0.2)) runs.back().status = RunStatus::failed;
    }
    const auto aggs = recompute_aggregates(runs);
    int total = 0;
    for (const auto& a : aggs) {
      total += a.n + a.failed_runs;
      std::vector<RunRecord> mine;
      for (const auto& r : runs) {
        if (r.config_id == a.config_id && r.model_id == a.model_id) mine.push_back(r);
      }
      CHECK(aggregate_runs(mine) == a);
      double dev = 0;
      for (double d : a.per_run_deviations) dev += d;
      CHECK(std::abs(dev) <= 1e-9 * std::max(1.0, a.throughput_tps.mean * a.n));
      CHECK((a.n == 0) == (a.status == AggregateStatus::failed));
    }
    CHECK(total == static_cast<int>(runs.size()));
  }
}

TEST_CASE("bench: config validation") {
  BenchmarkConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.runs == 5);
  CHECK(c.max_new_tokens == 100);
  CHECK(c.warmup_runs == 1);
  c.runs = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("bench: suite runs warmup then n timed runs per pair") {
  Harness h;
  const auto catalog = test_catalog();
  const SuiteTarget t = target("cfg", {"qwen2.5-0.5b", "llama3.2-1b"});
  auto cfg = fast_config();
  cfg.runs = 3;
  const auto aggs = run_suite(catalog, std::vector{t}, cfg, h.hooks());
  REQUIRE(aggs.size() == 2);
  CHECK(h.calls == 2 * (1 + 3));
  CHECK(h.runs.size() == 6);
  for (const auto& a : aggs) {
    CHECK(a.status == AggregateStatus::ok);
    CHECK(a.n == 3);
    CHECK(a.notes.empty());
    CHECK(a.throughput_tps.mean == doctest::Approx(10 / 0.19).epsilon(0.05));
  }
  CHECK(h.runs[0].model_id == "qwen2.5-0.5b");
  CHECK(h.runs[0].token_count == 10);
}

TEST_CASE("bench: failed runs are retried once") {
  Harness h;
  h.scripts["http://127.0.0.1:1"] = {Script{}, Script{Script::drop}, Script{}, Script{Script::drop},
                                     Script{Script::drop}, Script{}};
  auto cfg = fast_config();
  cfg.runs = 3;
  const auto aggs = run_suite(test_catalog(), std::vector{target("cfg", {"qwen2.5-0.5b"})}, cfg, h.hooks());
  REQUIRE(aggs.size() == 1);
  // run 1: drop then ok; run 2: drop, drop (gives up); run 3: ok.
  CHECK(aggs[0].n == 2);
  CHECK(aggs[0].failed_runs == 3);
  CHECK(aggs[0].notes == std::vector<std::string>{"2 of 3 runs ok"});
  CHECK(h.runs.size() == 5);
  CHECK(h.runs[0].failure_reason.find("transport") == 0);
}

TEST_CASE("bench: 404 at warmup marks the pair unsupported and skips it") {
  Harness h;
  h.scripts["http://127.0.0.1:1"] = {Script{Script::not_found}, Script{}, Script{}, Script{}};
  auto cfg = fast_config();
  cfg.runs = 2;
  const auto aggs = run_suite(test_catalog(), std::vector{target("cfg", {"llama3.2-3b", "qwen2.5-0.5b"})},
                              cfg, h.hooks());
  REQUIRE(aggs.size() == 2);
  CHECK(aggs[0].status == AggregateStatus::unsupported);
  CHECK(aggs[0].n == 0);
  CHECK(aggs[1].status == AggregateStatus::ok);
  CHECK(h.runs.size() == 2);
}

TEST_CASE("bench: unhealthy endpoint is unreachable, others continue") {
  Harness h;
  h.healthy["http://127.0.0.1:2"] = false;
  auto cfg = fast_config();
  cfg.runs = 1;
  const auto aggs = run_suite(
      test_catalog(),
      std::vector{target("down", {"qwen2.5-0.5b"}, RuntimeKind::mock, "http://127.0.0.1:2"),
                  target("up", {"qwen2.5-0.5b"})},
      cfg, h.hooks());
  REQUIRE(aggs.size() == 2);
  CHECK(aggs[0].status == AggregateStatus::unreachable);
  CHECK(aggs[1].status == AggregateStatus::ok);
}

TEST_CASE("bench: StackFlow endpoints come back unsupported") {
  Harness h;
  auto t = target("m5", {"deepseek-r1-1.5b"}, RuntimeKind::stackflow_stub);
  t.device_id = "m5stack-llm";
  const auto aggs = run_suite(test_catalog(), std::vector{t}, fast_config(), h.hooks());
  REQUIRE(aggs.size() == 1);
  CHECK(aggs[0].status == AggregateStatus::unsupported);
  CHECK(h.runs.empty());
}

TEST_CASE("bench: unknown ids are config errors before any request") {
  Harness h;
  CHECK_THROWS_AS(run_suite(test_catalog(), std::vector{target("x", {"gpt-5"})}, fast_config(), h.hooks()),
                  ConfigError);
  auto t = target("x", {"qwen2.5-0.5b"});
  t.device_id = "pc";
  CHECK_THROWS_AS(run_suite(test_catalog(), std::vector{t}, fast_config(), h.hooks()), ConfigError);
  CHECK(h.calls == 0);
}

TEST_CASE("bench: no-warmup runs are annotated") {
  Harness h;
  auto cfg = fast_config();
  cfg.warmup_runs = 0;
  cfg.runs = 1;
  const auto aggs = run_suite(test_catalog(), std::vector{target("c", {"qwen2.5-0.5b"})}, cfg, h.hooks());
  CHECK(aggs[0].notes.front().find("no warmup performed") == 0);
}

TEST_CASE("bench: eval_count mismatch warns and the client count wins") {
  std::vector<std::string> warnings;
  set_warning_handler([&](std::string_view w) { warnings.emplace_back(w); });
  Harness h;
  Script s;
  s.eval_count = 12;
  h.scripts["http://127.0.0.1:1"] = {Script{}, s};
  auto cfg = fast_config();
  cfg.runs = 1;
  run_suite(test_catalog(), std::vector{target("c", {"qwen2.5-0.5b"})}, cfg, h.hooks());
  set_warning_handler(nullptr);
  REQUIRE(h.runs.size() == 1);
  CHECK(h.runs[0].token_count == 10);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("eval_count 12") != std::string::npos);
}

TEST_CASE("bench: constant power attaches energy to each run") {
  Harness h;
  auto t = target("c", {"qwen2.5-0.5b"});
  t.constant_power_w = 10.0;
  auto cfg = fast_config();
  cfg.runs = 2;
  const auto aggs = run_suite(test_catalog(), std::vector{t}, cfg, h.hooks());
  REQUIRE(aggs[0].energy_mj_per_mtok.has_value());
  CHECK(*aggs[0].energy_mode == EnergyMode::constant_power);
  CHECK(aggs[0].energy_mj_per_mtok->mean ==
        doctest::Approx(10.0 / aggs[0].throughput_tps.mean).epsilon(1e-6));
}

TEST_CASE("bench: endpoints on different URLs run in parallel with concurrency > 1") {
  Harness h;
  Script slow;
  slow.ttft_ns = 0;
  auto cfg = fast_config();
  cfg.runs = 1;
  cfg.warmup_runs = 0;
  cfg.concurrency = 2;
  std::vector<SuiteTarget> targets = {
      target("a", {"qwen2.5-0.5b"}, RuntimeKind::mock, "http://127.0.0.1:1"),
      target("b", {"qwen2.5-0.5b"}, RuntimeKind::mock, "http://127.0.0.1:2"),
      target("c", {"qwen2.5-0.5b"}, RuntimeKind::mock, "http://127.0.0.1:1")};
  const auto aggs = run_suite(test_catalog(), targets, cfg, h.hooks());
  REQUIRE(aggs.size() == 3);
  // Output order follows the targets regardless of scheduling.
  CHECK(aggs[0].config_id == "a");
  CHECK(aggs[1].config_id == "b");
  CHECK(aggs[2].config_id == "c");
  for (const auto& a : aggs) CHECK(a.concurrency == 2);
}

TEST_CASE("bench: warmup absorbs the mock's first-request load") {
  MockProfile p{"qwen2.5:0.5b", 100.0, 50.0};
  p.first_request_load_ms = 1000.0;
  MockServer server({p});
  const int port = server.start();
  auto t = target("mock", {"qwen2.5-0.5b"}, RuntimeKind::mock, "http://127.0.0.1:" + std::to_string(port));

  std::vector<RunRecord> runs;
  SuiteHooks hooks;
  hooks.on_run = [&](const RunRecord& r) { runs.push_back(r); };
  auto cfg = fast_config();
  cfg.runs = 2;
  cfg.max_new_tokens = 20;
  cfg.cooldown = std::chrono::milliseconds(100);
  run_suite(test_catalog(), std::vector{t}, cfg, hooks);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].ttft_s() < 0.3);

  // Without warmup the first timed run carries the load.
  MockServer cold({p});
  t.endpoint.base_url = "http://127.0.0.1:" + std::to_string(cold.start());
  runs.clear();
  cfg.warmup_runs = 0;
  const auto aggs = run_suite(test_catalog(), std::vector{t}, cfg, hooks);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].ttft_s() > 1.0);
  CHECK(runs[1].ttft_s() < 0.3);
  CHECK(aggs[0].notes.front().find("no warmup") == 0);
}
