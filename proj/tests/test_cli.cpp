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

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "edgebench/cli.hpp"
#include "edgebench/mock_server.hpp"
#include "edgebench/store.hpp"
#include "support.hpp"

using namespace edgebench;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "edgebench");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// A suite file pointing at `port` with fast settings.
std::string mock_suite(int port, const std::string& extra_endpoint = "") {
  return "catalog = \"" + testing::fixture_path("catalog.toml") + "\"\n" +
         "models = [\"qwen2.5-0.5b\", \"llama3.2-3b\"]\n"
         "[benchmark]\nruns = 2\nmax_new_tokens = 10\ncooldown_s = 0.0\n"
         "[[endpoint]]\nid = \"mock\"\ndevice = \"rpi5\"\nkind = \"mock\"\n"
         "base_url = \"http://127.0.0.1:" + std::to_string(port) + "\"\n" + extra_endpoint;
}

bool single_error_line(const std::string& err, const std::string& cls) {
  const auto pos = err.find("error: " + cls + ": ");
  return pos != std::string::npos && err.find('\n', pos) == err.size() - 1;
}

}  // namespace

TEST_CASE("cli: validate-fixture passes on the shipped fixtures") {
  testing::TempDir dir("validate");
  const auto r = cli({"validate-fixture", "--store", dir.str()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("[FAIL]") == std::string::npos);
  CHECK(r.out.find("[PASS] persisted fixture render") != std::string::npos);
  CHECK(std::filesystem::exists(dir.path() / "fixtures" / "table3.csv"));
}

TEST_CASE("cli: validate-fixture fails with exit 3 on a corrupted fixture") {
  testing::TempDir dir("badfix");
  for (const char* f : {"catalog.toml", "table3_expected.txt"}) {
    std::filesystem::copy_file(testing::fixture_path(f), dir.path() / f);
  }
  std::string table = slurp(testing::fixture_path("table3.csv"));
  table.replace(table.find(",33.24,"), 7, ",3.24,");
  write(dir.path() / "table3.csv", table);
  const auto r = cli({"validate-fixture", "--fixtures", dir.str()});
  CHECK(r.code == kExitAcceptance);
  CHECK(r.out.find("[FAIL] efficiency gains") != std::string::npos);
  CHECK(single_error_line(r.err, "acceptance"));
}

TEST_CASE("cli: run against the mock populates the store and report is deterministic") {
  testing::TempDir dir("run");
  MockServer server({MockProfile{"qwen2.5:0.5b", 20.0, 200.0}});
  const int port = server.start();
  write(dir.path() / "suite.toml", mock_suite(port));
  const std::string store = (dir.path() / "store").string();

  const auto r = cli({"run", "--config", (dir.path() / "suite.toml").string(), "--store", store});
  INFO(r.err);
  CHECK(r.code == kExitOk);
  ResultStore s(store);
  const auto runs = s.load_runs();
  CHECK(runs.diagnostics.empty());
  CHECK(runs.records.size() == 2);
  const auto aggs = s.load_aggregates();
  REQUIRE(aggs.size() == 2);
  CHECK(aggs[0].status == AggregateStatus::ok);
  // llama3.2:3b has no mock profile: a 404, rendered as "--".
  CHECK(aggs[1].status == AggregateStatus::unsupported);
  CHECK(std::filesystem::exists(s.catalog_path()));
  CHECK(s.load_metadata()->suite_config_hash.size() == 16);
  CHECK(aggregates_match(aggs, recompute_aggregates(runs.records)));

  const auto a = cli({"report", "--store", store});
  const auto b = cli({"report", "--store", store});
  CHECK(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out.find("--") != std::string::npos);

  // Overrides: one run, fewer tokens, one model.
  const auto again = cli({"run", "--config", (dir.path() / "suite.toml").string(), "--store", store,
                          "--runs", "1", "--num-predict", "4", "--model", "qwen2.5-0.5b",
                          "--constant-power-w", "10"});
  CHECK(again.code == kExitOk);
  const auto more = s.load_runs().records;
  REQUIRE(more.size() == 3);
  CHECK(more.back().token_count == 4);
  CHECK(more.back().energy.has_value());
}

TEST_CASE("cli: store defaults to EDGEBENCH_STORE") {
  testing::TempDir dir("envstore");
  ::setenv("EDGEBENCH_STORE", dir.str().c_str(), 1);
  const auto r = cli({"report"});
  ::unsetenv("EDGEBENCH_STORE");
  CHECK(r.code == kExitOk);
  CHECK(r.out == "Model  Size  Metric\n");
  const auto missing = cli({"report"});
  CHECK(missing.code == kExitConfig);
  CHECK(single_error_line(missing.err, "config"));
}

TEST_CASE("cli: unreachable endpoint exits 2 after persisting") {
  testing::TempDir dir("unreach");
  write(dir.path() / "suite.toml", mock_suite(9));
  const auto r = cli({"run", "--config", (dir.path() / "suite.toml").string(), "--store",
                      (dir.path() / "store").string()});
  CHECK(r.code == kExitTransport);
  CHECK(r.err.find("error: transport:") != std::string::npos);
  ResultStore s(dir.path() / "store");
  const auto aggs = s.load_aggregates();
  REQUIRE(aggs.size() == 2);
  CHECK(aggs[0].status == AggregateStatus::unreachable);
}

TEST_CASE("cli: flags are validated before any side effect") {
  testing::TempDir dir("flags");
  write(dir.path() / "suite.toml", mock_suite(9));
  const std::string suite = (dir.path() / "suite.toml").string();
  const std::string store = (dir.path() / "store").string();
  auto r = cli({"run", "--config", suite, "--store", store, "--runs", "0"});
  CHECK(r.code == kExitConfig);
  CHECK(single_error_line(r.err, "validation"));
  r = cli({"run", "--config", suite, "--store", store, "--endpoint", "nope"});
  CHECK(r.code == kExitConfig);
  r = cli({"run", "--config", suite, "--store", store, "--model", "gpt"});
  CHECK(r.code == kExitConfig);
  r = cli({"run", "--store", store});
  CHECK(r.code == kExitConfig);
  CHECK(single_error_line(r.err, "config"));
  CHECK_FALSE(std::filesystem::exists(store));
  r = cli({"frobnicate"});
  CHECK(r.code == kExitConfig);
  r = cli({"--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("validate-fixture") != std::string::npos);
}

TEST_CASE("cli: ingest-power attaches trace energy and recomputes") {
  testing::TempDir dir("ingest");
  MockServer server({MockProfile{"qwen2.5:0.5b", 20.0, 100.0}});
  write(dir.path() / "suite.toml", mock_suite(server.start()));
  const std::string store = (dir.path() / "store").string();
  REQUIRE(cli({"run", "--config", (dir.path() / "suite.toml").string(), "--store", store, "--model",
               "qwen2.5-0.5b"}).code == kExitOk);
  ResultStore s(store);
  const auto runs = s.load_runs().records;
  REQUIRE(runs.size() == 2);

  // Flat 8 W trace covering both runs.
  std::string csv = "timestamp_utc_ms,watts\n";
  const std::int64_t t0 = runs.front().wall_start_utc_ns / 1'000'000 - 1000;
  const std::int64_t t1 = runs.back().wall_start_utc_ns / 1'000'000 + 5000;
  for (std::int64_t t = t0; t <= t1; t += 250) csv += std::to_string(t) + ",8.0\n";
  write(dir.path() / "trace.csv", csv);

  auto r = cli({"ingest-power", "--store", store, "--power-trace", (dir.path() / "trace.csv").string()});
  INFO(r.err);
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("annotated 2 run(s)") != std::string::npos);
  auto aggs = s.load_aggregates();
  REQUIRE(aggs[0].energy_mj_per_mtok.has_value());
  CHECK(*aggs[0].energy_mode == EnergyMode::trace_integrated);
  // MJ/Mtok is averaged per run, so the oracle is the mean of 8 W / per-run rate.
  double oracle = 0.0;
  for (const auto& run : runs) oracle += 8.0 / run.throughput_tps() / static_cast<double>(runs.size());
  CHECK(aggs[0].energy_mj_per_mtok->mean == doctest::Approx(oracle).epsilon(1e-6));

  // A later constant-power annotation supersedes the trace.
  r = cli({"ingest-power", "--store", store, "--constant-power-w", "4"});
  CHECK(r.code == kExitOk);
  aggs = s.load_aggregates();
  CHECK(*aggs[0].energy_mode == EnergyMode::constant_power);
  CHECK(*aggs[0].mean_power_w == doctest::Approx(4.0));

  r = cli({"ingest-power", "--store", store});
  CHECK(r.code == kExitConfig);
  write(dir.path() / "far.csv", "timestamp_utc_ms,watts\n1000,1\n2000,1\n");
  r = cli({"ingest-power", "--store", store, "--power-trace", (dir.path() / "far.csv").string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("misses trace coverage") != std::string::npos);
}

TEST_CASE("cli: metrics over the published table") {
  const auto r = cli({"metrics", "--golden", testing::fixture_path("table3.csv"), "--model",
                      "deepseek-r1-1.5b", "--objective", "throughput_tps:max", "--objective",
                      "mj_per_mtok:min", "--gain", "rpi5:rpi5-hat"});
  CHECK(r.code == kExitOk);
  const auto frontier = r.out.substr(r.out.find("# frontier"));
  CHECK(frontier.find("m5stack-llm,") != std::string::npos);
  CHECK(frontier.find("jetson-gpu,") != std::string::npos);
  CHECK(frontier.find("rpi5,") == std::string::npos);
  CHECK(r.out.find("deepseek-r1-1.5b,33.24,3.47,9.58") != std::string::npos);
  CHECK(cli({"metrics", "--golden", testing::fixture_path("table3.csv"), "--gain", "rpi5"}).code ==
        kExitConfig);
}

TEST_CASE("cli: export writes the dataset and a sidecar note") {
  testing::TempDir dir("export");
  const auto out = dir.path() / "surface.csv";
  auto r = cli({"export", "--golden", testing::fixture_path("table3.csv"), "--figure", "throughput_surface",
                "--out", out.string()});
  CHECK(r.code == kExitOk);
  CHECK(slurp(out).rfind("config,deepseek-r1-1.5b,qwen2.5-instruct-1.5b\n", 0) == 0);
  CHECK(slurp(out.string() + ".notes.txt").find("llama3.2-1b") != std::string::npos);

  r = cli({"export", "--golden", testing::fixture_path("table3.csv"), "--figure",
           "power_vs_throughput_bubble", "--power", "m5stack-llm=1.4", "--out", out.string()});
  CHECK(r.code == kExitOk);
  CHECK(slurp(out).find("m5stack-llm,deepseek-r1-1.5b,1.4,2.42,37.908") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(out.string() + ".notes.txt"));

  r = cli({"export", "--store", dir.str(), "--figure", "density_surface"});
  CHECK(r.code == kExitOk);
  CHECK(slurp(dir.path() / "exports" / "density_surface.csv") == "config\n");
  CHECK(cli({"export", "--store", dir.str(), "--figure", "pie"}).code == kExitConfig);
}
