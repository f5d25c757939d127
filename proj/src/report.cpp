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

#include "edgebench/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <sstream>

#include "edgebench/errors.hpp"

namespace edgebench {

std::vector<CellResult> cells_from_aggregates(std::span<const AggregateResult> aggregates) {
  std::vector<CellResult> out;
  out.reserve(aggregates.size());
  for (const auto& a : aggregates) {
    CellResult c;
    c.key = {a.config_id, a.device_id, a.model_id, a.runtime_kind};
    c.ttft_unit = TtftUnit::seconds;
    c.supported = a.status != AggregateStatus::unsupported;
    if (a.status == AggregateStatus::ok && a.n > 0) {
      c.throughput_tps = a.throughput_tps.mean;
      c.ttft = a.ttft_s.mean;
      if (a.energy_mj_per_mtok) c.mj_per_mtok = a.energy_mj_per_mtok->mean;
      c.power_w = a.mean_power_w;
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CellResult> cells_from_golden(const GoldenFixture& fixture) {
  std::vector<CellResult> out;
  out.reserve(fixture.cells.size());
  for (const auto& g : fixture.cells) {
    CellResult c;
    c.key = {g.config_id, g.device_id, g.model_id, g.runtime_kind};
    c.supported = g.supported;
    c.size_label = g.size_label;
    c.throughput_tps = g.throughput_tps;
    c.ttft = g.ttft_reported;
    c.ttft_unit = TtftUnit::reported;
    c.mj_per_mtok = g.mj_per_mtok;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<MetricVector> metric_vectors(std::span<const CellResult> cells, const Catalog& catalog) {
  std::vector<MetricVector> out;
  for (const auto& c : cells) {
    if (!c.supported || !c.throughput_tps) continue;
    const DeviceProfile* device = catalog.find_device(c.key.device_id);
    if (device == nullptr) continue;
    MetricVector v;
    v.key = c.key;
    v.throughput_tps = *c.throughput_tps;
    v.ttft_s = c.ttft.value_or(0.0);
    if (c.ttft && c.ttft_unit == TtftUnit::milliseconds) v.ttft_s = *c.ttft / 1000.0;
    v.mj_per_mtok = c.mj_per_mtok;
    v.volume_m3 = volume_m3(*device);
    v.tps_per_m3 = throughput_density(v.throughput_tps, v.volume_m3);
    if (c.power_w) {
      v.power_w = c.power_w;
    } else if (c.mj_per_mtok) {
      v.power_w = implied_power_w(v.throughput_tps, *c.mj_per_mtok);
    }
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

template <class Get>
std::vector<std::string> first_seen(std::span<const CellResult> cells, Get get) {
  std::vector<std::string> out;
  for (const auto& c : cells) {
    const std::string& v = get(c);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

const CellResult* find_cell(std::span<const CellResult> cells, std::string_view config,
                            std::string_view model) {
  for (const auto& c : cells) {
    if (c.key.config_id == config && c.key.model_id == model) return &c;
  }
  return nullptr;
}

std::string render_value(const CellResult* c, std::optional<double> value) {
  if (c == nullptr || !c->supported) return "--";
  if (!value) return "n/a";
  return fmt::format("{:.2f}", *value);
}

std::string_view ttft_label(TtftUnit unit) {
  switch (unit) {
    case TtftUnit::seconds: return "TTFT (s)";
    case TtftUnit::milliseconds: return "TTFT (ms)";
    case TtftUnit::reported: return "TTFT (as reported)";
  }
  return "TTFT";
}

}  // namespace

std::string render_table(std::span<const CellResult> cells, const Catalog* catalog,
                         const TableOptions& options) {
  const auto configs = first_seen(cells, [](const CellResult& c) -> const std::string& {
    return c.key.config_id;
  });
  const auto models = first_seen(cells, [](const CellResult& c) -> const std::string& {
    return c.key.model_id;
  });
  // Golden cells keep their published TTFT; measured ones use the option.
  const bool all_reported =
      !cells.empty() && std::all_of(cells.begin(), cells.end(), [](const CellResult& c) {
        return c.ttft_unit == TtftUnit::reported;
      });
  const TtftUnit row_unit = all_reported ? TtftUnit::reported : options.ttft_unit;

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Model", "Size", "Metric"};
  header.insert(header.end(), configs.begin(), configs.end());
  rows.push_back(std::move(header));

  for (const auto& model : models) {
    std::string size;
    for (const auto& c : cells) {
      if (c.key.model_id == model && !c.size_label.empty()) {
        size = c.size_label;
        break;
      }
    }
    if (size.empty() && catalog != nullptr) {
      if (const ModelSpec* m = catalog->find_model(model)) size = m->size_label();
    }
    if (size.empty()) size = "?";

    std::vector<std::string> tput{model, size, "Throughput (tok/s)"};
    std::vector<std::string> ttft{"", "", std::string(ttft_label(row_unit))};
    std::vector<std::string> energy{"", "", "Energy (MJ/Mtok)"};
    for (const auto& config : configs) {
      const CellResult* c = find_cell(cells, config, model);
      tput.push_back(render_value(c, c ? c->throughput_tps : std::nullopt));
      std::optional<double> t = c ? c->ttft : std::nullopt;
      if (t && c->ttft_unit == TtftUnit::seconds && row_unit == TtftUnit::milliseconds) *t *= 1000.0;
      if (t && c->ttft_unit == TtftUnit::milliseconds && row_unit == TtftUnit::seconds) *t /= 1000.0;
      ttft.push_back(render_value(c, t));
      energy.push_back(render_value(c, c ? c->mj_per_mtok : std::nullopt));
    }
    rows.push_back(std::move(tput));
    rows.push_back(std::move(ttft));
    rows.push_back(std::move(energy));
  }

  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], r[i].size());
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i > 0) line += "  ";
      line += fmt::format("{:<{}}", r[i], widths[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line, out;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::string word, norm;
    while (words >> word) {
      if (!norm.empty()) norm += ' ';
      norm += word;
    }
    if (!norm.empty()) out += norm + '\n';
  }
  return out;
}

std::string_view to_string(FigureKind kind) {
  switch (kind) {
    case FigureKind::power_vs_throughput_bubble: return "power_vs_throughput_bubble";
    case FigureKind::density_surface: return "density_surface";
    case FigureKind::energy_surface: return "energy_surface";
    case FigureKind::throughput_surface: return "throughput_surface";
  }
  return "unknown";
}

FigureKind parse_figure_kind(std::string_view name) {
  for (auto k : {FigureKind::power_vs_throughput_bubble, FigureKind::density_surface,
                 FigureKind::energy_surface, FigureKind::throughput_surface}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("figure", fmt::format("unknown figure '{}'", name));
}

namespace {

FigureExport export_bubble(std::span<const CellResult> cells, const Catalog& catalog,
                           const std::map<std::string, double>& power_override_w) {
  FigureExport out;
  out.csv = "config,model,power_w,throughput_tps,volume_cm3\n";
  for (const auto& c : cells) {
    const std::string cell = c.key.config_id + "/" + c.key.model_id;
    if (!c.supported) continue;
    if (!c.throughput_tps) {
      out.exclusions.push_back(cell + ": throughput not measured");
      continue;
    }
    const DeviceProfile* device = catalog.find_device(c.key.device_id);
    if (device == nullptr) {
      out.exclusions.push_back(cell + ": device '" + c.key.device_id + "' not in catalog");
      continue;
    }
    std::optional<double> power;
    if (auto it = power_override_w.find(c.key.config_id); it != power_override_w.end()) {
      power = it->second;
    } else if (c.power_w) {
      power = c.power_w;
    } else if (c.mj_per_mtok) {
      power = implied_power_w(*c.throughput_tps, *c.mj_per_mtok);
    }
    if (!power) {
      out.exclusions.push_back(cell + ": power not measured");
      continue;
    }
    out.csv += fmt::format("{},{},{},{},{}\n", c.key.config_id, c.key.model_id, *power,
                           *c.throughput_tps, volume_cm3(*device));
  }
  return out;
}

FigureExport export_surface(std::span<const CellResult> cells, const Catalog& catalog,
                            FigureKind kind) {
  FigureExport out;
  const auto configs = first_seen(cells, [](const CellResult& c) -> const std::string& {
    return c.key.config_id;
  });
  const auto models = first_seen(cells, [](const CellResult& c) -> const std::string& {
    return c.key.model_id;
  });

  auto value_of = [&](const CellResult& c) -> std::optional<double> {
    switch (kind) {
      case FigureKind::throughput_surface: return c.throughput_tps;
      case FigureKind::energy_surface: return c.mj_per_mtok;
      case FigureKind::density_surface: {
        const DeviceProfile* d = catalog.find_device(c.key.device_id);
        if (d == nullptr || !c.throughput_tps) return std::nullopt;
        return throughput_density(*c.throughput_tps, volume_m3(*d));
      }
      default: return std::nullopt;
    }
  };

  std::vector<std::string> kept;
  for (const auto& model : models) {
    std::string reason;
    for (const auto& config : configs) {
      const CellResult* c = find_cell(cells, config, model);
      if (c == nullptr || !c->supported) {
        reason = fmt::format("{}: not supported on {}", model, config);
        break;
      }
      if (!value_of(*c)) {
        reason = fmt::format("{}: {} missing on {}", model, to_string(kind), config);
        break;
      }
    }
    if (reason.empty()) {
      kept.push_back(model);
    } else {
      out.exclusions.push_back(reason);
    }
  }

  out.csv = "config";
  for (const auto& m : kept) out.csv += "," + m;
  out.csv += '\n';
  if (kept.empty()) return out;
  for (const auto& config : configs) {
    out.csv += config;
    for (const auto& m : kept) out.csv += fmt::format(",{}", *value_of(*find_cell(cells, config, m)));
    out.csv += '\n';
  }
  return out;
}

}  // namespace

FigureExport export_figure_data(std::span<const CellResult> cells, const Catalog& catalog,
                                FigureKind kind,
                                const std::map<std::string, double>& power_override_w) {
  if (kind == FigureKind::power_vs_throughput_bubble) {
    return export_bubble(cells, catalog, power_override_w);
  }
  return export_surface(cells, catalog, kind);
}

}  // namespace edgebench
