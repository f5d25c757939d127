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

#include <string>
#include <vector>

#include "edgebench/catalog.hpp"
#include "edgebench/golden.hpp"

namespace edgebench {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Mean power draw quoted in the discussion of results, per device.
struct NarrativePower {
  std::string device_id;
  double low_w = 0.0;
  double high_w = 0.0;
};

const std::vector<NarrativePower>& narrative_powers();

/// Relative tolerance for the implied-power comparison.
inline constexpr double kPowerTolerance = 0.25;

// Individual checks over the transcribed results table.
CheckResult check_golden_grid(const GoldenFixture& golden);
CheckResult check_implied_power(const GoldenFixture& golden);
CheckResult check_efficiency_gains(const GoldenFixture& golden, const Catalog& catalog);
CheckResult check_density(const GoldenFixture& golden, const Catalog& catalog);
CheckResult check_volumes(const Catalog& catalog);
CheckResult check_deepseek_frontier(const GoldenFixture& golden, const Catalog& catalog);
CheckResult check_golden_render(const GoldenFixture& golden, const Catalog& catalog,
                                const std::string& expected_text);
CheckResult check_golden_roundtrip(const GoldenFixture& golden);

/// Loads catalog.toml, table3.csv and table3_expected.txt from `dir` and
/// runs every check above. Load failures become failed checks.
std::vector<CheckResult> run_fixture_checks(const std::string& dir);

}  // namespace edgebench
