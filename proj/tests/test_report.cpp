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

#include <algorithm>
#include <fstream>
#include <sstream>

#include "edgebench/golden.hpp"
#include "edgebench/report.hpp"
#include "support.hpp"

using namespace edgebench;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Published {
  GoldenFixture golden = load_golden(testing::fixture_path("table3.csv"));
  Catalog catalog = load_catalog(testing::fixture_path("catalog.toml"));
  std::vector<CellResult> cells = cells_from_golden(golden);
};

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("golden: grid shape and unsupported cells") {
  Published p;
  CHECK_NOTHROW(p.golden.validate());
  CHECK(p.golden.cells.size() == 35);
  CHECK(p.golden.config_order() ==
        std::vector<std::string>{"m5stack-llm", "rpi5", "rpi5-hat", "jetson-cpu", "jetson-gpu"});
  CHECK(p.golden.model_order().size() == 7);
  const std::pair<const char*, const char*> dashes[] = {
      {"m5stack-llm", "qwen2.5-0.5b"},       {"rpi5-hat", "qwen2.5-0.5b"},
      {"m5stack-llm", "qwen2.5-1.5b"},       {"m5stack-llm", "qwen2.5-coder-1.5b"},
      {"rpi5-hat", "llama3.2-1b"},           {"m5stack-llm", "llama3.2-3b"}};
  int unsupported = 0;
  for (const auto& c : p.golden.cells) unsupported += c.supported ? 0 : 1;
  CHECK(unsupported == 6);
  for (auto [cfg, model] : dashes) {
    const GoldenCell* c = p.golden.find(cfg, model);
    REQUIRE(c != nullptr);
    CHECK_FALSE(c->supported);
    CHECK_FALSE(c->throughput_tps.has_value());
  }
  const GoldenCell* c = p.golden.find("jetson-gpu", "deepseek-r1-1.5b");
  CHECK(*c->throughput_tps == 9.59);
  CHECK(*c->ttft_reported == 1.38);
  CHECK(*c->mj_per_mtok == 1.15);
  CHECK(GoldenFixture::kTtftUnitAmbiguous);
}

TEST_CASE("golden: CSV round-trip and broken grids") {
  Published p;
  CHECK(parse_golden_csv(format_golden_csv(p.golden)) == p.golden);
  GoldenFixture missing = p.golden;
  missing.cells.pop_back();
  CHECK_THROWS_AS(missing.validate(), ValidationError);
  GoldenFixture half = p.golden;
  half.cells[0].mj_per_mtok.reset();
  CHECK_THROWS_AS(half.validate(), ValidationError);
  CHECK_THROWS_AS(parse_golden_csv("a,b\n1,2\n"), ParseError);
}

TEST_CASE("report: published table renders the checked-in text") {
  Published p;
  const std::string expected = slurp(testing::fixture_path("table3_expected.txt"));
  const std::string rendered = render_table(p.cells, &p.catalog);
  CHECK(rendered == expected);
  CHECK(normalize_whitespace(rendered) == normalize_whitespace(expected));
  CHECK(rendered.find("--") != std::string::npos);
  CHECK(rendered.find("TTFT (as reported)") != std::string::npos);
}

TEST_CASE("report: empty and single-cell tables") {
  CHECK(render_table({}, nullptr) == "Model  Size  Metric\n");
  CellResult c;
  c.key = {"cfg", "rpi5", "m", RuntimeKind::mock};
  c.size_label = "1B";
  c.throughput_tps = 4.854;
  c.ttft = 0.8031;
  c.mj_per_mtok = 2.0;
  const auto lines = lines_of(render_table(std::vector{c}, nullptr));
  REQUIRE(lines.size() == 4);
  CHECK(lines[1].find("4.85") != std::string::npos);
  CHECK(lines[2].find("TTFT (s)") != std::string::npos);
  CHECK(lines[2].find("0.80") != std::string::npos);
  TableOptions ms;
  ms.ttft_unit = TtftUnit::milliseconds;
  CHECK(render_table(std::vector{c}, nullptr, ms).find("803.10") != std::string::npos);
  c.mj_per_mtok.reset();
  CHECK(render_table(std::vector{c}, nullptr).find("n/a") != std::string::npos);
}

TEST_CASE("report: normalize_whitespace") {
  CHECK(normalize_whitespace("a   b\t c  \n\n  d \n") == "a b c\nd\n");
}

TEST_CASE("export: bubble rows from the published table") {
  Published p;
  const std::map<std::string, double> power = {
      {"m5stack-llm", 1.4}, {"rpi5", 11.0}, {"rpi5-hat", 6.0}, {"jetson-cpu", 12.5}, {"jetson-gpu", 12.5}};
  const auto fig = export_figure_data(p.cells, p.catalog, FigureKind::power_vs_throughput_bubble, power);
  const auto lines = lines_of(fig.csv);
  CHECK(lines[0] == "config,model,power_w,throughput_tps,volume_cm3");
  CHECK(lines.size() == 1 + 29);
  CHECK(std::find(lines.begin(), lines.end(), "m5stack-llm,deepseek-r1-1.5b,1.4,2.42,37.908") !=
        lines.end());
  // Without overrides the power is implied from throughput and energy.
  const auto implied = export_figure_data(p.cells, p.catalog, FigureKind::power_vs_throughput_bubble);
  CHECK(implied.csv.find("m5stack-llm,deepseek-r1-1.5b,1.379") != std::string::npos);
}

TEST_CASE("export: surfaces keep models supported on every configuration") {
  Published p;
  const auto fig = export_figure_data(p.cells, p.catalog, FigureKind::density_surface);
  const auto lines = lines_of(fig.csv);
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "config,deepseek-r1-1.5b,qwen2.5-instruct-1.5b");
  // llama3.2-1b is "--" on rpi5-hat in the published table.
  CHECK(std::any_of(fig.exclusions.begin(), fig.exclusions.end(), [](const std::string& e) {
    return e.find("llama3.2-1b") != std::string::npos && e.find("rpi5-hat") != std::string::npos;
  }));
  CHECK(fig.exclusions.size() == 5);
  CHECK(lines[1].rfind("m5stack-llm,", 0) == 0);

  // m5stack/llama-1B density, the figure's peak.
  const double d = throughput_density(3.44, volume_m3(*p.catalog.find_device("m5stack-llm")));
  CHECK(d == doctest::Approx(90746).epsilon(0.001));

  const auto energy = export_figure_data(p.cells, p.catalog, FigureKind::energy_surface);
  CHECK(lines_of(energy.csv)[2] == "rpi5,33.24,35.31");
}

TEST_CASE("export: empty input gives a header-only dataset") {
  Catalog empty;
  CHECK(export_figure_data({}, empty, FigureKind::power_vs_throughput_bubble).csv ==
        "config,model,power_w,throughput_tps,volume_cm3\n");
  CHECK(export_figure_data({}, empty, FigureKind::throughput_surface).csv == "config\n");
  CHECK(parse_figure_kind("energy_surface") == FigureKind::energy_surface);
  CHECK_THROWS_AS(parse_figure_kind("pie"), ValidationError);
}

TEST_CASE("report: measured aggregates become cells") {
  AggregateResult a;
  a.config_id = "mock";
  a.device_id = "rpi5";
  a.model_id = "qwen2.5-0.5b";
  a.n = 5;
  a.throughput_tps = {4.85, 0.01, 4.84, 4.86};
  a.ttft_s = {0.8, 0.001, 0.79, 0.81};
  a.energy_mj_per_mtok = MeanStdev{2.0, 0.0};
  a.mean_power_w = 9.7;
  AggregateResult u = a;
  u.model_id = "llama3.2-3b";
  u.status = AggregateStatus::unsupported;
  u.n = 0;
  const auto cells = cells_from_aggregates(std::vector{a, u});
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].supported);
  CHECK(*cells[0].power_w == 9.7);
  CHECK_FALSE(cells[1].supported);
  const auto text = render_table(cells, nullptr);
  CHECK(text.find("--") != std::string::npos);
}
