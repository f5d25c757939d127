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

#include "edgebench/metrics.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <numeric>

#include "edgebench/errors.hpp"

namespace edgebench {

double throughput_density(double throughput_tps, double volume_m3) {
  if (!(volume_m3 > 0.0)) throw ValidationError("volume_m3", "must be positive");
  return throughput_tps / volume_m3;
}

double efficiency_gain(double baseline_mj, double accel_mj) {
  if (!(baseline_mj > 0.0)) throw ValidationError("baseline_mj", "must be positive");
  if (!(accel_mj > 0.0)) throw ValidationError("accel_mj", "must be positive");
  return baseline_mj / accel_mj;
}

std::string_view to_string(MetricField f) {
  switch (f) {
    case MetricField::throughput_tps: return "throughput_tps";
    case MetricField::ttft_s: return "ttft_s";
    case MetricField::mj_per_mtok: return "mj_per_mtok";
    case MetricField::tps_per_m3: return "tps_per_m3";
    case MetricField::power_w: return "power_w";
    case MetricField::volume_m3: return "volume_m3";
  }
  return "unknown";
}

MetricField parse_metric_field(std::string_view name) {
  for (auto f : {MetricField::throughput_tps, MetricField::ttft_s, MetricField::mj_per_mtok,
                 MetricField::tps_per_m3, MetricField::power_w, MetricField::volume_m3}) {
    if (to_string(f) == name) return f;
  }
  throw ValidationError("objective", fmt::format("unknown metric '{}'", name));
}

std::optional<double> field_value(const MetricVector& v, MetricField f) {
  switch (f) {
    case MetricField::throughput_tps: return v.throughput_tps;
    case MetricField::ttft_s: return v.ttft_s;
    case MetricField::mj_per_mtok: return v.mj_per_mtok;
    case MetricField::tps_per_m3: return v.tps_per_m3;
    case MetricField::power_w: return v.power_w;
    case MetricField::volume_m3: return v.volume_m3;
  }
  return std::nullopt;
}

Objective parse_objective(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ValidationError("objective", fmt::format("'{}' is not field:max or field:min", text));
  }
  Objective o;
  o.field = parse_metric_field(text.substr(0, colon));
  const auto dir = text.substr(colon + 1);
  if (dir == "max") {
    o.direction = Direction::maximize;
  } else if (dir == "min") {
    o.direction = Direction::minimize;
  } else {
    throw ValidationError("objective", fmt::format("direction '{}' is not max or min", dir));
  }
  return o;
}

namespace {

// Objective values oriented so that smaller is better.
std::vector<double> oriented(const MetricVector& v, std::span<const Objective> objectives) {
  std::vector<double> out;
  out.reserve(objectives.size());
  for (const auto& o : objectives) {
    const auto x = field_value(v, o.field);
    if (!x) {
      throw ValidationError(
          fmt::format("{}/{}.{}", v.key.config_id, v.key.model_id, to_string(o.field)),
          "objective metric missing");
    }
    out.push_back(o.direction == Direction::minimize ? *x : -*x);
  }
  return out;
}

bool dominates_oriented(const std::vector<double>& p, const std::vector<double>& q) {
  bool strictly_better = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > q[i]) return false;
    if (p[i] < q[i]) strictly_better = true;
  }
  return strictly_better;
}

}  // namespace

bool dominates(const MetricVector& p, const MetricVector& q, std::span<const Objective> objectives) {
  return dominates_oriented(oriented(p, objectives), oriented(q, objectives));
}

std::vector<MetricVector> pareto_frontier(std::span<const MetricVector> points,
                                          std::span<const Objective> objectives) {
  if (objectives.empty()) throw ValidationError("objectives", "at least one objective required");
  std::vector<std::vector<double>> vals;
  vals.reserve(points.size());
  for (const auto& p : points) vals.push_back(oriented(p, objectives));

  // After a lexicographic sort any dominator of a point precedes it, so each
  // point only needs checking against the frontier found so far.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });

  std::vector<std::size_t> front;
  for (std::size_t idx : order) {
    const bool dominated = std::any_of(front.begin(), front.end(), [&](std::size_t f) {
      return dominates_oriented(vals[f], vals[idx]);
    });
    if (!dominated) front.push_back(idx);
  }
  std::sort(front.begin(), front.end());
  std::vector<MetricVector> out;
  out.reserve(front.size());
  for (std::size_t i : front) out.push_back(points[i]);
  return out;
}

FrontierResult pareto_frontier_available(std::span<const MetricVector> points,
                                         std::span<const Objective> objectives) {
  FrontierResult out;
  std::vector<MetricVector> usable;
  for (const auto& p : points) {
    std::vector<std::string> missing;
    for (const auto& o : objectives) {
      if (!field_value(p, o.field)) missing.emplace_back(to_string(o.field));
    }
    if (missing.empty()) {
      usable.push_back(p);
    } else {
      out.notes.push_back(fmt::format("{}/{} excluded: {} not measured", p.key.config_id,
                                      p.key.model_id, fmt::join(missing, ", ")));
      out.excluded.push_back(p);
    }
  }
  out.frontier = pareto_frontier(usable, objectives);
  return out;
}

std::vector<GainRow> efficiency_gains(std::span<const MetricVector> points,
                                      std::string_view baseline_config,
                                      std::string_view accel_config) {
  std::vector<GainRow> out;
  for (const auto& base : points) {
    if (base.key.config_id != baseline_config || !base.mj_per_mtok) continue;
    for (const auto& acc : points) {
      if (acc.key.config_id != accel_config || acc.key.model_id != base.key.model_id ||
          !acc.mj_per_mtok) {
        continue;
      }
      out.push_back({base.key.model_id, *base.mj_per_mtok, *acc.mj_per_mtok,
                     efficiency_gain(*base.mj_per_mtok, *acc.mj_per_mtok)});
    }
  }
  return out;
}

}  // namespace edgebench
