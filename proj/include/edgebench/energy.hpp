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

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgebench {

struct PowerSample {
  std::int64_t t_utc_ns = 0;
  double watts = 0.0;

  friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

/// Timestamped wall-power readings from an external meter.
class PowerTrace {
 public:
  PowerTrace() = default;
  /// Throws ValidationError unless timestamps strictly increase and every
  /// reading is finite and nonnegative.
  PowerTrace(std::vector<PowerSample> samples, std::string source);

  const std::vector<PowerSample>& samples() const { return samples_; }
  const std::string& source() const { return source_; }
  bool empty() const { return samples_.empty(); }
  std::int64_t start_ns() const { return samples_.front().t_utc_ns; }
  std::int64_t end_ns() const { return samples_.back().t_utc_ns; }

 private:
  std::vector<PowerSample> samples_;
  std::string source_;
};

/// CSV with header `timestamp_utc_ms,watts`.
PowerTrace parse_power_csv(std::string_view text, std::string source = "<trace>");
PowerTrace load_power_csv(const std::string& path);
std::string format_power_csv(const PowerTrace& trace);

enum class EnergyMode { trace_integrated, constant_power };

std::string_view to_string(EnergyMode mode);
EnergyMode parse_energy_mode(std::string_view name);

struct EnergyResult {
  double joules = 0.0;
  double window_s = 0.0;
  double mean_power_w = 0.0;
  EnergyMode mode = EnergyMode::constant_power;
  /// Window edges fell outside the trace and were clamped to the nearest
  /// sample.
  bool extrapolated = false;
  /// Set when an idle baseline was subtracted; absent for wall totals.
  std::optional<double> idle_baseline_w;

  friend bool operator==(const EnergyResult&, const EnergyResult&) = default;
};

struct IntegrationOptions {
  bool allow_extrapolation = false;
};

/// Trapezoidal integral of the trace over [t0, t1] (UTC ns), linearly
/// interpolating at the window edges. Throws ValidationError for an empty
/// trace, t0 >= t1, or a window outside coverage without extrapolation.
EnergyResult integrate(const PowerTrace& trace, std::int64_t t0_ns, std::int64_t t1_ns,
                       IntegrationOptions options = {});

/// Operator-entered mean wattage held over the window.
EnergyResult constant_power_energy(double watts, double window_s);

/// Labelled variant that removes idle draw; never applied by default.
EnergyResult subtract_idle(const EnergyResult& total, double idle_w);

/// Joules per token, which equals MJ per million tokens.
double energy_per_mtok(const EnergyResult& energy, std::int64_t tokens);

/// Mean power implied by a (throughput, MJ/Mtok) pair.
double implied_power_w(double throughput_tps, double mj_per_mtok);

/// Maps a run's host-clock window onto the meter trace.
struct AlignmentOptions {
  /// Meter clock minus host clock.
  std::chrono::milliseconds meter_offset{0};
  /// Coverage gaps up to this size are clamped and flagged.
  std::chrono::milliseconds max_skew{500};
  bool allow_extrapolation = false;
};

struct AlignedEnergy {
  EnergyResult energy;
  /// Gap between window and trace coverage, 0 when fully covered.
  std::chrono::nanoseconds coverage_gap{0};
  bool skew_flagged = false;
};

/// Integrates over the host-clock window [start, start + duration].
/// Gaps beyond max_skew throw unless extrapolation is allowed, in which case
/// the result is flagged.
AlignedEnergy integrate_run_window(const PowerTrace& trace, std::int64_t wall_start_utc_ns,
                                   std::int64_t duration_ns, const AlignmentOptions& options);

}  // namespace edgebench
