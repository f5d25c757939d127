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

#include "edgebench/golden.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "edgebench/errors.hpp"

namespace edgebench {

namespace {

constexpr std::string_view kHeader =
    "config_id,device_id,runtime_kind,model_id,size,throughput_tps,ttft_reported,mj_per_mtok,"
    "supported";

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> optional_number(const std::string& text, const std::string& source,
                                      int line, std::string_view column) {
  if (text.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ParseError(source, line, fmt::format("column {}: invalid number '{}'", column, text));
}

std::string format_optional(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

}  // namespace

std::vector<std::string> GoldenFixture::config_order() const {
  std::vector<std::string> out;
  for (const auto& c : cells) {
    if (std::find(out.begin(), out.end(), c.config_id) == out.end()) out.push_back(c.config_id);
  }
  return out;
}

std::vector<std::string> GoldenFixture::model_order() const {
  std::vector<std::string> out;
  for (const auto& c : cells) {
    if (std::find(out.begin(), out.end(), c.model_id) == out.end()) out.push_back(c.model_id);
  }
  return out;
}

const GoldenCell* GoldenFixture::find(std::string_view config_id, std::string_view model_id) const {
  for (const auto& c : cells) {
    if (c.config_id == config_id && c.model_id == model_id) return &c;
  }
  return nullptr;
}

void GoldenFixture::validate() const {
  const auto configs = config_order();
  const auto models = model_order();
  if (configs.size() != kConfigs || models.size() != kModels || cells.size() != kModels * kConfigs) {
    throw ValidationError("golden", fmt::format("expected {} models x {} configurations, got {} x {} ({} cells)",
                                                kModels, kConfigs, models.size(), configs.size(),
                                                cells.size()));
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& c : cells) {
    const std::string field = fmt::format("golden[{}/{}]", c.config_id, c.model_id);
    if (!seen.emplace(c.config_id, c.model_id).second) throw ValidationError(field, "duplicate cell");
    const bool any = c.throughput_tps || c.ttft_reported || c.mj_per_mtok;
    const bool all = c.throughput_tps && c.ttft_reported && c.mj_per_mtok;
    if (c.supported && !all) throw ValidationError(field, "supported cell missing a metric");
    if (!c.supported && any) throw ValidationError(field, "unsupported cell carries values");
    if (c.supported && !(*c.throughput_tps > 0.0 && *c.mj_per_mtok > 0.0)) {
      throw ValidationError(field, "throughput and energy must be positive");
    }
  }
}

GoldenFixture parse_golden_csv(std::string_view text, std::string source) {
  GoldenFixture fx;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kHeader) throw ParseError(source, line_no, "unexpected header");
      header = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 9) {
      throw ParseError(source, line_no, fmt::format("expected 9 columns, got {}", cols.size()));
    }
    GoldenCell c;
    c.config_id = cols[0];
    c.device_id = cols[1];
    try {
      c.runtime_kind = parse_runtime_kind(cols[2], "runtime_kind");
    } catch (const ValidationError& e) {
      throw ParseError(source, line_no, e.what());
    }
    c.model_id = cols[3];
    c.size_label = cols[4];
    c.throughput_tps = optional_number(cols[5], source, line_no, "throughput_tps");
    c.ttft_reported = optional_number(cols[6], source, line_no, "ttft_reported");
    c.mj_per_mtok = optional_number(cols[7], source, line_no, "mj_per_mtok");
    if (cols[8] == "true") {
      c.supported = true;
    } else if (cols[8] == "false") {
      c.supported = false;
    } else {
      throw ParseError(source, line_no, "column supported: expected true or false");
    }
    fx.cells.push_back(std::move(c));
  }
  if (!header) throw ParseError(source, 0, "missing header");
  return fx;
}

GoldenFixture load_golden(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open golden fixture '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_golden_csv(buf.str(), path);
}

std::string format_golden_csv(const GoldenFixture& fx) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& c : fx.cells) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", c.config_id, c.device_id,
                       to_string(c.runtime_kind), c.model_id, c.size_label,
                       format_optional(c.throughput_tps), format_optional(c.ttft_reported),
                       format_optional(c.mj_per_mtok), c.supported ? "true" : "false");
  }
  return out;
}

}  // namespace edgebench
