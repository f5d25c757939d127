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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/catalog.hpp"

namespace edgebench {

/// Identifies one benchmarked configuration cell. `config_id` separates
/// configurations that share a device and runtime (e.g. Jetson CPU vs GPU).
struct ConfigKey {
  std::string config_id;
  std::string device_id;
  std::string model_id;
  RuntimeKind runtime_kind = RuntimeKind::ollama_native;

  friend bool operator==(const ConfigKey&, const ConfigKey&) = default;
};

struct MetricVector {
  ConfigKey key;
  double throughput_tps = 0.0;
  double ttft_s = 0.0;
  std::optional<double> mj_per_mtok;
  std::optional<double> tps_per_m3;
  std::optional<double> power_w;
  double volume_m3 = 0.0;

  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

/// Tokens per second per cubic metre of device.
double throughput_density(double throughput_tps, double volume_m3);

/// How many times less energy the accelerated configuration spends.
double efficiency_gain(double baseline_mj, double accel_mj);

enum class MetricField { throughput_tps, ttft_s, mj_per_mtok, tps_per_m3, power_w, volume_m3 };
enum class Direction { maximize, minimize };

std::string_view to_string(MetricField f);
MetricField parse_metric_field(std::string_view name);

std::optional<double> field_value(const MetricVector& v, MetricField f);

struct Objective {
  MetricField field = MetricField::throughput_tps;
  Direction direction = Direction::maximize;
};

/// Parses "field:max" / "field:min".
Objective parse_objective(std::string_view text);

/// p dominates q: no worse on every objective and strictly better on one.
bool dominates(const MetricVector& p, const MetricVector& q, std::span<const Objective> objectives);

/// Non-dominated subset in input order; equal vectors are all kept. Throws
/// ValidationError if a point lacks an objective field or no objective is
/// given.
std::vector<MetricVector> pareto_frontier(std::span<const MetricVector> points,
                                          std::span<const Objective> objectives);

struct FrontierResult {
  std::vector<MetricVector> frontier;
  /// Points skipped because an objective metric was not measured.
  std::vector<MetricVector> excluded;
  std::vector<std::string> notes;
};

/// Like pareto_frontier but drops points missing an objective, with a note
/// for each; nothing is imputed.
FrontierResult pareto_frontier_available(std::span<const MetricVector> points,
                                         std::span<const Objective> objectives);

struct GainRow {
  std::string model_id;
  double baseline_mj = 0.0;
  double accel_mj = 0.0;
  double gain = 0.0;
};

/// Per-model gains of `accel_config` over `baseline_config`, for models
/// with energy measured on both.
std::vector<GainRow> efficiency_gains(std::span<const MetricVector> points,
                                      std::string_view baseline_config,
                                      std::string_view accel_config);

}  // namespace edgebench
