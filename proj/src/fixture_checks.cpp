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

#include "edgebench/fixture_checks.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "edgebench/energy.hpp"
#include "edgebench/metrics.hpp"
#include "edgebench/report.hpp"

namespace edgebench {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<MetricVector> golden_vectors(const GoldenFixture& golden, const Catalog& catalog) {
  const auto cells = cells_from_golden(golden);
  return metric_vectors(cells, catalog);
}

CheckResult failed(std::string name, std::string detail) {
  return {std::move(name), false, std::move(detail)};
}

template <class F>
CheckResult guarded(std::string name, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return failed(std::move(name), e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

const std::vector<NarrativePower>& narrative_powers() {
  static const std::vector<NarrativePower> powers = {
      {"m5stack-llm", 1.4, 1.4},
      {"rpi5", 11.0, 11.0},
      {"rpi5-hat", 6.0, 6.0},
      {"jetson-orin-nano", 12.0, 13.0},
  };
  return powers;
}

CheckResult check_golden_grid(const GoldenFixture& golden) {
  return guarded("golden grid", [&] {
    golden.validate();
    const auto unsupported = std::count_if(golden.cells.begin(), golden.cells.end(),
                                           [](const GoldenCell& c) { return !c.supported; });
    return CheckResult{"golden grid", true,
                       fmt::format("{} cells, {} unsupported", golden.cells.size(), unsupported)};
  });
}

CheckResult check_implied_power(const GoldenFixture& golden) {
  const std::string name = "implied power";
  return guarded(name, [&] {
    std::map<std::string, std::vector<double>> by_device;
    for (const auto& c : golden.cells) {
      if (!c.supported) continue;
      const double p = implied_power_w(*c.throughput_tps, *c.mj_per_mtok);
      if (!std::isfinite(p) || p <= 0) {
        return failed(name, fmt::format("{}/{}: implied power {} W", c.config_id, c.model_id, p));
      }
      by_device[c.device_id].push_back(p);
    }
    std::string detail;
    bool pass = true;
    for (const auto& np : narrative_powers()) {
      const auto it = by_device.find(np.device_id);
      if (it == by_device.end()) return failed(name, "no supported cells for " + np.device_id);
      const double med = median(it->second);
      const double lo = np.low_w * (1.0 - kPowerTolerance);
      const double hi = np.high_w * (1.0 + kPowerTolerance);
      const bool ok = med >= lo && med <= hi;
      pass = pass && ok;
      detail += fmt::format("{}{} median {:.2f} W in [{:.2f}, {:.2f}]{}", detail.empty() ? "" : "; ",
                            np.device_id, med, lo, hi, ok ? "" : " FAILED");
    }
    return CheckResult{name, pass, detail};
  });
}

CheckResult check_efficiency_gains(const GoldenFixture& golden, const Catalog& catalog) {
  const std::string name = "efficiency gains";
  return guarded(name, [&] {
    const auto points = golden_vectors(golden, catalog);
    struct Expect {
      const char* base;
      const char* accel;
      const char* model;
      double gain;
      double tol;
    };
    const Expect expects[] = {
        {"rpi5", "rpi5-hat", "deepseek-r1-1.5b", 9.58, 0.05},
        {"rpi5", "rpi5-hat", "qwen2.5-instruct-1.5b", 40.13, 0.2},
        {"jetson-cpu", "jetson-gpu", "deepseek-r1-1.5b", 1.82, 0.01},
        {"jetson-cpu", "jetson-gpu", "qwen2.5-1.5b", 1.24, 0.01},
    };
    bool pass = true;
    std::string detail;
    for (const auto& e : expects) {
      const auto rows = efficiency_gains(points, e.base, e.accel);
      const auto it = std::find_if(rows.begin(), rows.end(),
                                   [&](const GainRow& r) { return r.model_id == e.model; });
      if (it == rows.end()) return failed(name, fmt::format("no {} gain for {}", e.accel, e.model));
      const bool ok = std::abs(it->gain - e.gain) <= e.tol;
      pass = pass && ok;
      detail += fmt::format("{}{} {}/{} {:.3f}{}", detail.empty() ? "" : "; ", e.model, e.base,
                            e.accel, it->gain, ok ? "" : fmt::format(" (want {}±{})", e.gain, e.tol));
    }
    return CheckResult{name, pass, detail};
  });
}

CheckResult check_density(const GoldenFixture& golden, const Catalog& catalog) {
  const std::string name = "throughput density";
  return guarded(name, [&] {
    const GoldenCell* cell = golden.find("m5stack-llm", "llama3.2-1b");
    const DeviceProfile* dev = catalog.find_device("m5stack-llm");
    if (cell == nullptr || dev == nullptr || !cell->throughput_tps) {
      return failed(name, "m5stack-llm/llama3.2-1b not available");
    }
    const double d = throughput_density(*cell->throughput_tps, volume_m3(*dev));
    const bool ok = d >= 90000.0 && std::abs(d - 90746.0) <= 0.01 * 90746.0;
    return CheckResult{name, ok, fmt::format("m5stack-llm/llama3.2-1b {:.0f} Tps/m3", d)};
  });
}

CheckResult check_volumes(const Catalog& catalog) {
  const std::string name = "device volumes";
  return guarded(name, [&] {
    const std::pair<const char*, double> expects[] = {
        {"m5stack-llm", 38}, {"rpi5", 81}, {"rpi5-hat", 95}, {"jetson-orin-nano", 166}};
    bool pass = true;
    std::string detail;
    for (const auto& [id, cm3] : expects) {
      const DeviceProfile* dev = catalog.find_device(id);
      if (dev == nullptr) return failed(name, std::string("missing device ") + id);
      const double rounded = std::round(volume_cm3(*dev));
      const bool ok = std::abs(rounded - cm3) <= 1.0;
      pass = pass && ok;
      detail += fmt::format("{}{} {:.0f} cm3{}", detail.empty() ? "" : "; ", id, rounded,
                            ok ? "" : " FAILED");
    }
    return CheckResult{name, pass, detail};
  });
}

CheckResult check_deepseek_frontier(const GoldenFixture& golden, const Catalog& catalog) {
  const std::string name = "deepseek frontier";
  return guarded(name, [&] {
    std::vector<MetricVector> column;
    for (const auto& v : golden_vectors(golden, catalog)) {
      if (v.key.model_id == "deepseek-r1-1.5b") column.push_back(v);
    }
    const Objective objectives[] = {{MetricField::throughput_tps, Direction::maximize},
                                    {MetricField::mj_per_mtok, Direction::minimize}};
    std::vector<std::string> ids;
    for (const auto& v : pareto_frontier(column, objectives)) ids.push_back(v.key.config_id);
    std::sort(ids.begin(), ids.end());
    const std::vector<std::string> want = {"jetson-gpu", "m5stack-llm"};
    return CheckResult{name, ids == want, fmt::format("frontier {{{}}}", fmt::join(ids, ", "))};
  });
}

CheckResult check_golden_render(const GoldenFixture& golden, const Catalog& catalog,
                                const std::string& expected_text) {
  const std::string name = "table render";
  return guarded(name, [&] {
    const auto cells = cells_from_golden(golden);
    const std::string rendered = render_table(cells, &catalog);
    const bool exact = rendered == expected_text;
    const bool ok = exact || normalize_whitespace(rendered) == normalize_whitespace(expected_text);
    return CheckResult{name, ok,
                       ok ? (exact ? "byte-identical" : "identical after whitespace normalization")
                          : "rendered table differs from expected"};
  });
}

CheckResult check_golden_roundtrip(const GoldenFixture& golden) {
  const std::string name = "fixture round-trip";
  return guarded(name, [&] {
    const GoldenFixture again = parse_golden_csv(format_golden_csv(golden), "<round-trip>");
    return CheckResult{name, again == golden, again == golden ? "lossless" : "cells differ"};
  });
}

std::vector<CheckResult> run_fixture_checks(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::vector<CheckResult> out;
  std::optional<Catalog> catalog;
  std::optional<GoldenFixture> golden;
  std::string expected;
  try {
    catalog = load_catalog((root / "catalog.toml").string());
  } catch (const std::exception& e) {
    out.push_back(failed("load catalog", e.what()));
  }
  try {
    golden = load_golden((root / "table3.csv").string());
  } catch (const std::exception& e) {
    out.push_back(failed("load fixture", e.what()));
  }
  try {
    expected = read_text(root / "table3_expected.txt");
  } catch (const std::exception& e) {
    out.push_back(failed("load expected table", e.what()));
  }
  if (!catalog || !golden) return out;

  out.push_back(check_golden_grid(*golden));
  out.push_back(check_implied_power(*golden));
  out.push_back(check_efficiency_gains(*golden, *catalog));
  out.push_back(check_density(*golden, *catalog));
  out.push_back(check_volumes(*catalog));
  out.push_back(check_deepseek_frontier(*golden, *catalog));
  if (!expected.empty()) out.push_back(check_golden_render(*golden, *catalog, expected));
  out.push_back(check_golden_roundtrip(*golden));
  return out;
}

}  // namespace edgebench
