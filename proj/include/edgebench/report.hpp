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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/bench.hpp"
#include "edgebench/catalog.hpp"
#include "edgebench/golden.hpp"
#include "edgebench/metrics.hpp"

namespace edgebench {

enum class TtftUnit {
  seconds,
  milliseconds,
  /// Printed as published, no conversion (golden fixture).
  reported,
};

/// Mean results of one (configuration, model) cell, independent of whether
/// they were measured here or transcribed from the published table.
struct CellResult {
  ConfigKey key;
  bool supported = true;
  std::string size_label;  // empty: look up in the catalog
  std::optional<double> throughput_tps;
  std::optional<double> ttft;  // in `ttft_unit`
  TtftUnit ttft_unit = TtftUnit::seconds;
  std::optional<double> mj_per_mtok;
  /// Measured mean power, when known.
  std::optional<double> power_w;
};

std::vector<CellResult> cells_from_aggregates(std::span<const AggregateResult> aggregates);
std::vector<CellResult> cells_from_golden(const GoldenFixture& fixture);

/// Metric vectors for supported cells with a throughput. Volume comes from
/// the catalog device (cells with unknown devices are skipped); power is
/// measured power or else throughput x MJ/Mtok.
std::vector<MetricVector> metric_vectors(std::span<const CellResult> cells, const Catalog& catalog);

enum class TableLayout { per_model_rows };

struct TableOptions {
  TableLayout layout = TableLayout::per_model_rows;
  /// Unit for cells measured in seconds; golden cells always print as
  /// reported.
  TtftUnit ttft_unit = TtftUnit::seconds;
};

/// Rows grouped by model then metric (throughput, TTFT, energy), one column
/// per configuration. Unsupported cells render "--", unmeasured "n/a".
std::string render_table(std::span<const CellResult> cells, const Catalog* catalog,
                         const TableOptions& options = {});

/// Collapses whitespace runs and drops blank lines, for layout-insensitive
/// comparison of rendered tables.
std::string normalize_whitespace(std::string_view text);

enum class FigureKind { power_vs_throughput_bubble, density_surface, energy_surface, throughput_surface };

std::string_view to_string(FigureKind kind);
FigureKind parse_figure_kind(std::string_view name);

struct FigureExport {
  std::string csv;
  /// One line per excluded cell/model and why.
  std::vector<std::string> exclusions;
};

/// Bubble: config,model,power_w,throughput_tps,volume_cm3 per supported
/// cell. Surfaces: one row per configuration, one column per model supported
/// on every configuration. `power_override_w` replaces power per config.
FigureExport export_figure_data(std::span<const CellResult> cells, const Catalog& catalog,
                                FigureKind kind,
                                const std::map<std::string, double>& power_override_w = {});

}  // namespace edgebench
