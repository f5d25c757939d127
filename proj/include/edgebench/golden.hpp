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
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/catalog.hpp"

namespace edgebench {

/// One published (configuration, model) result. Values are absent exactly
/// where the model is unsupported on that configuration.
struct GoldenCell {
  std::string config_id;
  std::string device_id;
  RuntimeKind runtime_kind = RuntimeKind::ollama_native;
  std::string model_id;
  std::string size_label;
  std::optional<double> throughput_tps;
  /// As printed; the published unit label for this column is ambiguous.
  std::optional<double> ttft_reported;
  std::optional<double> mj_per_mtok;
  bool supported = true;

  friend bool operator==(const GoldenCell&, const GoldenCell&) = default;
};

struct GoldenFixture {
  static constexpr bool kTtftUnitAmbiguous = true;
  static constexpr std::size_t kModels = 7;
  static constexpr std::size_t kConfigs = 5;

  std::vector<GoldenCell> cells;

  std::vector<std::string> config_order() const;
  std::vector<std::string> model_order() const;
  const GoldenCell* find(std::string_view config_id, std::string_view model_id) const;

  /// Full 7 x 5 grid; supported cells carry all three metrics and
  /// unsupported cells none.
  void validate() const;

  friend bool operator==(const GoldenFixture&, const GoldenFixture&) = default;
};

/// Columns: config_id,device_id,runtime_kind,model_id,size,throughput_tps,
/// ttft_reported,mj_per_mtok,supported. Lines starting with '#' are comments.
GoldenFixture parse_golden_csv(std::string_view text, std::string source = "<golden>");
GoldenFixture load_golden(const std::string& path);
std::string format_golden_csv(const GoldenFixture& fixture);

}  // namespace edgebench
