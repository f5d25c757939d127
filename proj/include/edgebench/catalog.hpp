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
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/kv_config.hpp"

namespace edgebench {

enum class RuntimeKind { ollama_native, hailo_ollama, stackflow_stub, mock };

std::string_view to_string(RuntimeKind kind);
/// Throws ValidationError naming `field` for unknown names.
RuntimeKind parse_runtime_kind(std::string_view name, std::string_view field = "kind");

struct PowerRange {
  double low_w = 0.0;
  double high_w = 0.0;

  bool contains(double watts) const { return watts >= low_w && watts <= high_w; }
  friend bool operator==(const PowerRange&, const PowerRange&) = default;
};

/// Physical and electrical identity of an edge platform. Dimensions are the
/// bounding box in millimetres.
struct DeviceProfile {
  std::string id;
  std::string name;
  double width_mm = 0.0;
  double depth_mm = 0.0;
  double height_mm = 0.0;
  double price_usd = 0.0;
  std::string cpu_desc;
  std::optional<std::string> accelerator_desc;
  std::optional<double> accelerator_tops;
  std::optional<PowerRange> nominal_power_range_w;

  /// Throws ValidationError on the first violated invariant.
  void validate() const;

  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

/// Bounding-box volume in cubic metres.
double volume_m3(const DeviceProfile& device);

inline double volume_cm3(const DeviceProfile& device) { return volume_m3(device) * 1e6; }

struct Quantisation {
  static constexpr std::string_view kQ4KM = "Q4_K_M";

  std::string label{kQ4KM};

  bool is_q4_k_m() const { return label == kQ4KM; }
  friend bool operator==(const Quantisation&, const Quantisation&) = default;
};

struct ModelSpec {
  std::string id;
  std::string family;
  double param_count_b = 0.0;
  Quantisation quantisation;
  /// Name each runtime expects for this model.
  std::map<RuntimeKind, std::string> runtime_model_ids;

  void validate() const;
  /// Runtime-specific name, falling back to `id`.
  const std::string& model_name_for(RuntimeKind kind) const;
  /// "1.5B", "0.5B", "3B".
  std::string size_label() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Immutable after load.
struct Catalog {
  std::vector<DeviceProfile> devices;
  std::vector<ModelSpec> models;

  const DeviceProfile* find_device(std::string_view id) const;
  const ModelSpec* find_model(std::string_view id) const;

  friend bool operator==(const Catalog&, const Catalog&) = default;
};

Catalog parse_catalog(std::string_view text, std::string source = "<catalog>");
Catalog catalog_from_table(const kv::Table& root, const std::string& source);
Catalog load_catalog(const std::string& path);
std::string serialize_catalog(const Catalog& catalog);

}  // namespace edgebench
