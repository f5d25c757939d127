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

#include "edgebench/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include "edgebench/bench.hpp"
#include "edgebench/catalog.hpp"
#include "edgebench/energy.hpp"
#include "edgebench/fixture_checks.hpp"
#include "edgebench/golden.hpp"
#include "edgebench/metrics.hpp"
#include "edgebench/mock_server.hpp"
#include "edgebench/report.hpp"
#include "edgebench/store.hpp"
#include "edgebench/suite.hpp"

namespace edgebench {

namespace fs = std::filesystem;

int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::transport:
    case ErrorClass::protocol:
      return kExitTransport;
    case ErrorClass::acceptance:
      return kExitAcceptance;
    default:
      return kExitConfig;
  }
}

namespace {

struct Options {
  std::string config;
  std::string store;
  std::string catalog;
  std::string golden;
  std::string fixtures;
  std::vector<std::string> endpoints;
  std::vector<std::string> models;
  std::optional<int> runs;
  std::optional<int> num_predict;
  std::string power_trace;
  std::optional<double> constant_power_w;
  double meter_offset_ms = 0.0;
  double max_skew_ms = 500.0;
  bool extrapolate = false;
  std::optional<double> idle_w;
  std::vector<std::string> objectives;
  std::vector<std::string> gains;
  std::vector<std::string> power_overrides;
  std::string ttft_unit = "s";
  std::string figure;
  std::string out_path;
  std::string bind = "127.0.0.1:11435";
};

std::string fixtures_dir(const Options& o) {
  if (!o.fixtures.empty()) return o.fixtures;
  if (const char* env = std::getenv("EDGEBENCH_FIXTURES")) return env;
  return EDGEBENCH_DEFAULT_FIXTURES_DIR;
}

std::string store_dir(const Options& o) {
  if (!o.store.empty()) return o.store;
  if (const char* env = std::getenv("EDGEBENCH_STORE")) return env;
  throw ConfigError("no store given (use --store or EDGEBENCH_STORE)");
}

bool contains(const std::vector<std::string>& list, const std::string& s) {
  return std::find(list.begin(), list.end(), s) != list.end();
}

/// Catalog for read-side commands: explicit flag, else the store snapshot,
/// else the shipped catalog.
Catalog resolve_catalog(const Options& o, const ResultStore* store) {
  if (!o.catalog.empty()) return load_catalog(o.catalog);
  if (store != nullptr && fs::exists(store->catalog_path())) {
    return load_catalog(store->catalog_path().string());
  }
  return load_catalog((fs::path(fixtures_dir(o)) / "catalog.toml").string());
}

std::vector<CellResult> resolve_cells(const Options& o, const ResultStore* store) {
  if (!o.golden.empty()) return cells_from_golden(load_golden(o.golden));
  const auto aggregates = store->load_aggregates();
  return cells_from_aggregates(aggregates);
}

TtftUnit parse_ttft_unit(const std::string& s) {
  if (s == "s") return TtftUnit::seconds;
  if (s == "ms") return TtftUnit::milliseconds;
  throw ValidationError("--ttft-unit", "expected s or ms, got '" + s + "'");
}

void write_text_file(const fs::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    f << text;
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write '" + path.string() + "': " + ec.message());
}

std::string now_iso() { return iso8601_utc(utc_now_ns()); }

StoreMetadata next_metadata(const ResultStore& store, const std::string& hash, int concurrency) {
  StoreMetadata m = store.load_metadata().value_or(StoreMetadata{});
  if (m.created_utc.empty()) m.created_utc = now_iso();
  m.updated_utc = now_iso();
  if (!hash.empty()) m.suite_config_hash = hash;
  m.artifact_version = std::string(kArtifactVersion);
  m.concurrency = concurrency;
  return m;
}

/// Recomputes aggregates from every stored run (energy applied) and merges
/// in session statuses and previous notes.
std::vector<AggregateResult> refresh_aggregates(const ResultStore& store,
                                                std::span<const AggregateResult> session,
                                                std::ostream& err) {
  auto runs = store.load_runs();
  auto energy = store.load_energy();
  for (const auto& d : runs.diagnostics) err << "warning: " << d << "\n";
  for (const auto& d : energy.diagnostics) err << "warning: " << d << "\n";
  const auto annotated = apply_energy(runs.records, energy.records);
  const auto recomputed = recompute_aggregates(annotated);
  const auto previous = store.load_aggregates();
  return merge_aggregates(previous, session, recomputed);
}

// ---- subcommands ----

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.config.empty()) throw ConfigError("run requires --config");
  SuiteConfig suite = load_suite(o.config);
  const ResultStore store(store_dir(o));
  if (o.runs) suite.benchmark.runs = *o.runs;
  if (o.num_predict) suite.benchmark.max_new_tokens = *o.num_predict;
  suite.benchmark.validate();

  std::vector<SuiteTarget> targets;
  for (auto t : suite.targets) {
    if (!o.endpoints.empty() && !contains(o.endpoints, t.config_id)) continue;
    if (!o.models.empty()) {
      std::vector<std::string> kept;
      for (const auto& m : t.model_ids) {
        if (contains(o.models, m)) kept.push_back(m);
      }
      t.model_ids = std::move(kept);
      if (t.model_ids.empty()) continue;
    }
    if (o.constant_power_w) t.constant_power_w = *o.constant_power_w;
    targets.push_back(std::move(t));
  }
  for (const auto& id : o.endpoints) {
    const bool known = std::any_of(suite.targets.begin(), suite.targets.end(),
                                   [&](const SuiteTarget& t) { return t.config_id == id; });
    if (!known) throw ValidationError("--endpoint", "no endpoint '" + id + "' in the suite");
  }
  if (targets.empty()) throw ValidationError("--model", "nothing selected to run");
  if (o.constant_power_w && !(*o.constant_power_w > 0)) {
    throw ValidationError("--constant-power-w", "must be > 0");
  }

  const Catalog catalog =
      suite.catalog_path.empty()
          ? load_catalog((fs::path(fixtures_dir(o)) / "catalog.toml").string())
          : load_catalog(suite.catalog_path);
  for (const auto& t : targets) {
    if (catalog.find_device(t.device_id) == nullptr) {
      throw ConfigError(fmt::format("endpoint {}: unknown device '{}'", t.config_id, t.device_id));
    }
    for (const auto& m : t.model_ids) {
      if (catalog.find_model(m) == nullptr) {
        throw ConfigError(fmt::format("endpoint {}: unknown model '{}'", t.config_id, m));
      }
    }
  }

  store.initialize();
  store.write_file("catalog.toml", serialize_catalog(catalog));

  std::mutex err_mu;
  SuiteHooks hooks;
  hooks.on_run = [&](const RunRecord& r) { store.append_run(r); };
  hooks.on_progress = [&](std::string_view msg) {
    std::lock_guard lock(err_mu);
    err << msg << "\n";
  };
  const auto session = run_suite(catalog, targets, suite.benchmark, hooks);

  const auto aggregates = refresh_aggregates(store, session, err);
  store.write_aggregates(aggregates, next_metadata(store, suite.hash, suite.benchmark.concurrency));

  const auto cells = cells_from_aggregates(aggregates);
  out << render_table(cells, &catalog);

  int unreachable = 0;
  for (const auto& a : session) {
    if (a.status == AggregateStatus::unreachable) ++unreachable;
  }
  if (unreachable > 0) {
    err << fmt::format("error: transport: {} configuration(s) unreachable\n", unreachable);
    return kExitTransport;
  }
  return kExitOk;
}

int cmd_ingest_power(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.power_trace.empty() == !o.constant_power_w.has_value()) {
    throw ConfigError("ingest-power requires exactly one of --power-trace or --constant-power-w");
  }
  if (o.constant_power_w && !(*o.constant_power_w > 0)) {
    throw ValidationError("--constant-power-w", "must be > 0");
  }
  if (o.idle_w && !(*o.idle_w >= 0)) throw ValidationError("--idle-w", "must be >= 0");
  if (o.max_skew_ms < 0) throw ValidationError("--max-skew-ms", "must be >= 0");
  const ResultStore store(store_dir(o));
  if (!fs::exists(store.runs_path())) throw ConfigError("store has no runs: " + store.root().string());

  std::optional<PowerTrace> trace;
  if (!o.power_trace.empty()) trace = load_power_csv(o.power_trace);
  AlignmentOptions align;
  align.meter_offset = std::chrono::milliseconds(static_cast<std::int64_t>(o.meter_offset_ms));
  align.max_skew = std::chrono::milliseconds(static_cast<std::int64_t>(o.max_skew_ms));
  align.allow_extrapolation = o.extrapolate;

  const auto runs = store.load_runs();
  for (const auto& d : runs.diagnostics) err << "warning: " << d << "\n";
  std::vector<EnergyAnnotation> annotations;
  int skipped = 0;
  for (const auto& r : runs.records) {
    if (!r.ok()) continue;
    if (!o.endpoints.empty() && !contains(o.endpoints, r.config_id)) continue;
    if (!o.models.empty() && !contains(o.models, r.model_id)) continue;
    EnergyAnnotation a;
    a.run_id = r.run_id;
    const std::int64_t duration_ns = r.last_token_ns - r.submit_monotonic_ns;
    if (trace) {
      try {
        const auto aligned = integrate_run_window(*trace, r.wall_start_utc_ns, duration_ns, align);
        a.energy = aligned.energy;
        a.coverage_gap_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(aligned.coverage_gap).count();
        a.skew_flagged = aligned.skew_flagged;
        a.source = o.power_trace;
      } catch (const Error& e) {
        ++skipped;
        err << fmt::format("warning: {}: {}\n", r.run_id, e.what());
        continue;
      }
    } else {
      a.energy = constant_power_energy(*o.constant_power_w, duration_ns * 1e-9);
      a.source = fmt::format("constant {} W", *o.constant_power_w);
    }
    if (o.idle_w) a.energy = subtract_idle(a.energy, *o.idle_w);
    annotations.push_back(std::move(a));
  }
  if (annotations.empty()) {
    throw ValidationError("--power-trace", "no stored run could be matched to the power data");
  }
  for (const auto& a : annotations) store.append_energy(a);

  const auto aggregates = refresh_aggregates(store, {}, err);
  const auto meta = store.load_metadata();
  store.write_aggregates(aggregates,
                         next_metadata(store, "", meta ? meta->concurrency : 1));
  out << fmt::format("annotated {} run(s), skipped {}\n", annotations.size(), skipped);
  return kExitOk;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

void print_vectors(std::ostream& out, std::span<const MetricVector> vs) {
  out << "config,device,model,runtime,throughput_tps,ttft_s,mj_per_mtok,tps_per_m3,power_w,"
         "volume_m3\n";
  for (const auto& v : vs) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", v.key.config_id, v.key.device_id,
                       v.key.model_id, to_string(v.key.runtime_kind), v.throughput_tps, v.ttft_s,
                       fmt_opt(v.mj_per_mtok), fmt_opt(v.tps_per_m3), fmt_opt(v.power_w),
                       v.volume_m3);
  }
}

int cmd_metrics(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<Objective> objectives;
  for (const auto& s : o.objectives) objectives.push_back(parse_objective(s));
  std::vector<std::pair<std::string, std::string>> gains;
  for (const auto& g : o.gains) {
    const auto colon = g.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == g.size()) {
      throw ValidationError("--gain", "expected baseline:accelerated, got '" + g + "'");
    }
    gains.emplace_back(g.substr(0, colon), g.substr(colon + 1));
  }
  std::optional<ResultStore> store;
  if (o.golden.empty()) store.emplace(store_dir(o));
  const Catalog catalog = resolve_catalog(o, store ? &*store : nullptr);
  auto cells = resolve_cells(o, store ? &*store : nullptr);
  std::vector<MetricVector> vectors;
  for (const auto& v : metric_vectors(cells, catalog)) {
    if (!o.models.empty() && !contains(o.models, v.key.model_id)) continue;
    if (!o.endpoints.empty() && !contains(o.endpoints, v.key.config_id)) continue;
    vectors.push_back(v);
  }

  print_vectors(out, vectors);
  if (!objectives.empty()) {
    const auto result = pareto_frontier_available(vectors, objectives);
    out << "\n# frontier\n";
    print_vectors(out, result.frontier);
    for (const auto& n : result.notes) err << "note: " << n << "\n";
  }
  for (const auto& [base, accel] : gains) {
    out << fmt::format("\n# gain {} over {}\nmodel,baseline_mj,accel_mj,gain\n", accel, base);
    for (const auto& row : efficiency_gains(vectors, base, accel)) {
      out << fmt::format("{},{},{},{:.2f}\n", row.model_id, row.baseline_mj, row.accel_mj, row.gain);
    }
  }
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream&) {
  TableOptions opts;
  opts.ttft_unit = parse_ttft_unit(o.ttft_unit);
  std::optional<ResultStore> store;
  if (o.golden.empty()) store.emplace(store_dir(o));
  const Catalog catalog = resolve_catalog(o, store ? &*store : nullptr);
  const auto cells = resolve_cells(o, store ? &*store : nullptr);
  out << render_table(cells, &catalog, opts);
  return kExitOk;
}

int cmd_export(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.figure.empty()) throw ConfigError("export requires --figure");
  const FigureKind kind = parse_figure_kind(o.figure);
  std::map<std::string, double> overrides;
  for (const auto& p : o.power_overrides) {
    const auto eq = p.find('=');
    double w = 0.0;
    try {
      if (eq == std::string::npos) throw std::invalid_argument(p);
      w = std::stod(p.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("--power", "expected config=watts, got '" + p + "'");
    }
    if (!(w > 0)) throw ValidationError("--power", "watts must be > 0");
    overrides[p.substr(0, eq)] = w;
  }
  std::optional<ResultStore> store;
  if (o.golden.empty() || o.out_path.empty()) store.emplace(store_dir(o));
  const Catalog catalog = resolve_catalog(o, store ? &*store : nullptr);
  const auto cells = resolve_cells(o, o.golden.empty() ? &*store : nullptr);
  const FigureExport fig = export_figure_data(cells, catalog, kind, overrides);

  const fs::path path = o.out_path.empty()
                            ? store->exports_dir() / (std::string(to_string(kind)) + ".csv")
                            : fs::path(o.out_path);
  write_text_file(path, fig.csv);
  const fs::path notes = path.string() + ".notes.txt";
  if (!fig.exclusions.empty()) {
    std::string text;
    for (const auto& e : fig.exclusions) text += e + "\n";
    write_text_file(notes, text);
    err << fmt::format("{} exclusion(s) listed in {}\n", fig.exclusions.size(), notes.string());
  } else if (fs::exists(notes)) {
    fs::remove(notes);
  }
  out << path.string() << "\n";
  return kExitOk;
}

int cmd_mock_serve(const Options& o, std::ostream& out, std::ostream&) {
  if (o.config.empty()) throw ConfigError("mock-serve requires --config");
  const auto profiles = load_mock_profiles(o.config);
  const auto [host, port] = parse_bind_address(o.bind);
  MockServer server(profiles);
  out << fmt::format("serving {} profile(s) on http://{}:{}\n", profiles.size(), host, port)
      << std::flush;
  server.listen_blocking(host, port);
  return kExitOk;
}

int cmd_validate_fixture(const Options& o, std::ostream& out, std::ostream& err) {
  const std::string dir = fixtures_dir(o);
  auto checks = run_fixture_checks(dir);

  // With a store, persist the fixture there and check the persisted copy
  // renders identically.
  if (!o.store.empty() || std::getenv("EDGEBENCH_STORE") != nullptr) {
    const ResultStore store(store_dir(o));
    CheckResult c{"persisted fixture render", false, ""};
    try {
      const GoldenFixture golden = load_golden((fs::path(dir) / "table3.csv").string());
      const Catalog catalog = load_catalog((fs::path(dir) / "catalog.toml").string());
      store.initialize();
      store.write_file("fixtures/table3.csv", format_golden_csv(golden));
      const GoldenFixture back = load_golden((store.fixtures_dir() / "table3.csv").string());
      std::ifstream in(fs::path(dir) / "table3_expected.txt", std::ios::binary);
      std::stringstream expected;
      expected << in.rdbuf();
      c = check_golden_render(back, catalog, expected.str());
      c.name = "persisted fixture render";
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    checks.push_back(c);
  }

  int failures = 0;
  for (const auto& c : checks) {
    out << fmt::format("[{}] {}: {}\n", c.pass ? "PASS" : "FAIL", c.name, c.detail);
    if (!c.pass) ++failures;
  }
  if (failures > 0) {
    err << fmt::format("error: acceptance: {} of {} fixture checks failed\n", failures,
                       checks.size());
    return kExitAcceptance;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Edge LLM inference benchmark harness", "edgebench"};
  app.require_subcommand(1);

  auto add_store = [&](CLI::App* sc) {
    sc->add_option("--store", o.store, "Result store directory (default: $EDGEBENCH_STORE)");
  };
  auto add_filters = [&](CLI::App* sc) {
    sc->add_option("--endpoint", o.endpoints, "Restrict to these endpoint/config ids");
    sc->add_option("--model", o.models, "Restrict to these model ids");
  };
  auto add_sources = [&](CLI::App* sc) {
    sc->add_option("--golden", o.golden, "Read results from a golden fixture CSV instead of the store");
    sc->add_option("--catalog", o.catalog, "Catalog file (default: store snapshot, then shipped)");
    sc->add_option("--fixtures", o.fixtures, "Fixture directory");
  };

  auto* run = app.add_subcommand("run", "Benchmark every endpoint/model pair and persist results");
  run->add_option("--config", o.config, "Suite file")->required();
  add_store(run);
  add_filters(run);
  run->add_option("--runs", o.runs, "Timed runs per pair");
  run->add_option("--num-predict", o.num_predict, "Tokens to generate per run");
  run->add_option("--constant-power-w", o.constant_power_w, "Attach constant-power energy");
  run->add_option("--fixtures", o.fixtures, "Fixture directory (default catalog)");

  auto* ingest = app.add_subcommand("ingest-power", "Attach power data to stored runs");
  add_store(ingest);
  add_filters(ingest);
  ingest->add_option("--power-trace", o.power_trace, "CSV: timestamp_utc_ms,watts");
  ingest->add_option("--constant-power-w", o.constant_power_w, "Mean power in watts");
  ingest->add_option("--meter-offset-ms", o.meter_offset_ms, "Meter clock minus host clock");
  ingest->add_option("--max-skew-ms", o.max_skew_ms, "Tolerated coverage gap")->capture_default_str();
  ingest->add_flag("--extrapolate", o.extrapolate, "Clamp windows beyond the trace");
  ingest->add_option("--idle-w", o.idle_w, "Subtract this idle draw (labelled)");

  auto* metrics = app.add_subcommand("metrics", "Composite metrics, Pareto frontier and gains");
  add_store(metrics);
  add_filters(metrics);
  add_sources(metrics);
  metrics->add_option("--objective", o.objectives, "field:max or field:min");
  metrics->add_option("--gain", o.gains, "baseline:accelerated config ids");

  auto* report = app.add_subcommand("report", "Render the results table");
  add_store(report);
  add_sources(report);
  report->add_option("--ttft-unit", o.ttft_unit, "s or ms")->capture_default_str();

  auto* exp = app.add_subcommand("export", "Write figure-ready CSV data");
  add_store(exp);
  add_sources(exp);
  exp->add_option("--figure", o.figure,
                  "power_vs_throughput_bubble, density_surface, energy_surface, throughput_surface");
  exp->add_option("--out", o.out_path, "Output CSV (default: <store>/exports/<figure>.csv)");
  exp->add_option("--power", o.power_overrides, "config=watts power for bubbles");

  auto* mock = app.add_subcommand("mock-serve", "Serve the Ollama chat protocol from mock profiles");
  mock->add_option("--config", o.config, "Mock profile file")->required();
  mock->add_option("--bind", o.bind, "host:port")->capture_default_str();

  auto* validate = app.add_subcommand("validate-fixture", "Replay the golden-fixture checks");
  validate->add_option("--fixtures", o.fixtures, "Fixture directory (default: $EDGEBENCH_FIXTURES)");
  add_store(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: config: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(o, out, err);
    if (ingest->parsed()) return cmd_ingest_power(o, out, err);
    if (metrics->parsed()) return cmd_metrics(o, out, err);
    if (report->parsed()) return cmd_report(o, out, err);
    if (exp->parsed()) return cmd_export(o, out, err);
    if (mock->parsed()) return cmd_mock_serve(o, out, err);
    if (validate->parsed()) return cmd_validate_fixture(o, out, err);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << to_string(e.error_class()) << ": " << msg << "\n";
    return exit_code_for(e.error_class());
  } catch (const std::exception& e) {
    err << "error: io: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace edgebench
