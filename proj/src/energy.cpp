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

#include "edgebench/energy.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "edgebench/errors.hpp"

namespace edgebench {

PowerTrace::PowerTrace(std::vector<PowerSample> samples, std::string source)
    : samples_(std::move(samples)), source_(std::move(source)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.watts) || s.watts < 0.0) {
      throw ValidationError(fmt::format("{}[{}].watts", source_, i), "must be finite and >= 0");
    }
    if (i > 0 && s.t_utc_ns <= samples_[i - 1].t_utc_ns) {
      throw ValidationError(fmt::format("{}[{}].timestamp_utc_ms", source_, i),
                            "timestamps must strictly increase");
    }
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view text, const std::string& source, int line, const char* what) {
  const std::string s(trim(text));
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ParseError(source, line, fmt::format("invalid {} '{}'", what, s));
}

}  // namespace

PowerTrace parse_power_csv(std::string_view text, std::string source) {
  std::vector<PowerSample> samples;
  int line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "timestamp_utc_ms,watts") {
        throw ParseError(source, line_no, "expected header 'timestamp_utc_ms,watts'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError(source, line_no, "expected two columns");
    }
    const double ms = parse_double(line.substr(0, comma), source, line_no, "timestamp");
    const double watts = parse_double(line.substr(comma + 1), source, line_no, "watts");
    if (!samples.empty() && std::llround(ms * 1e6) <= samples.back().t_utc_ns) {
      throw ParseError(source, line_no, "timestamps must strictly increase");
    }
    samples.push_back({static_cast<std::int64_t>(std::llround(ms * 1e6)), watts});
  }
  if (!header_seen) throw ParseError(source, 0, "missing header 'timestamp_utc_ms,watts'");
  return PowerTrace(std::move(samples), std::move(source));
}

PowerTrace load_power_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open power trace '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_power_csv(buf.str(), path);
}

std::string format_power_csv(const PowerTrace& trace) {
  std::string out = "timestamp_utc_ms,watts\n";
  for (const auto& s : trace.samples()) {
    if (s.t_utc_ns % 1'000'000 == 0) {
      out += fmt::format("{},{}\n", s.t_utc_ns / 1'000'000, s.watts);
    } else {
      out += fmt::format("{},{}\n", static_cast<double>(s.t_utc_ns) / 1e6, s.watts);
    }
  }
  return out;
}

std::string_view to_string(EnergyMode mode) {
  return mode == EnergyMode::trace_integrated ? "trace_integrated" : "constant_power";
}

EnergyMode parse_energy_mode(std::string_view name) {
  if (name == "trace_integrated") return EnergyMode::trace_integrated;
  if (name == "constant_power") return EnergyMode::constant_power;
  throw ValidationError("energy.mode", fmt::format("unknown mode '{}'", name));
}

namespace {

// Power at t; clamps to the end samples outside coverage.
double power_at(const std::vector<PowerSample>& s, std::int64_t t) {
  if (t <= s.front().t_utc_ns) return s.front().watts;
  if (t >= s.back().t_utc_ns) return s.back().watts;
  auto hi = std::lower_bound(s.begin(), s.end(), t,
                             [](const PowerSample& p, std::int64_t v) { return p.t_utc_ns < v; });
  if (hi->t_utc_ns == t) return hi->watts;
  auto lo = hi - 1;
  const double frac = static_cast<double>(t - lo->t_utc_ns) /
                      static_cast<double>(hi->t_utc_ns - lo->t_utc_ns);
  return lo->watts + frac * (hi->watts - lo->watts);
}

}  // namespace

EnergyResult integrate(const PowerTrace& trace, std::int64_t t0, std::int64_t t1,
                       IntegrationOptions options) {
  if (trace.empty()) throw ValidationError("power_trace", "trace is empty");
  if (t0 >= t1) throw ValidationError("window", "t0 must be before t1");
  const auto& s = trace.samples();
  const bool outside = t0 < trace.start_ns() || t1 > trace.end_ns();
  if (outside && !options.allow_extrapolation) {
    throw ValidationError(
        "window", fmt::format("[{}, {}] ns is outside trace coverage [{}, {}] ns", t0, t1,
                              trace.start_ns(), trace.end_ns()));
  }

  double joules = 0.0;
  std::int64_t prev_t = t0;
  double prev_w = power_at(s, t0);
  auto it = std::upper_bound(s.begin(), s.end(), t0,
                             [](std::int64_t v, const PowerSample& p) { return v < p.t_utc_ns; });
  for (; it != s.end() && it->t_utc_ns < t1; ++it) {
    joules += 0.5 * (prev_w + it->watts) * static_cast<double>(it->t_utc_ns - prev_t) * 1e-9;
    prev_t = it->t_utc_ns;
    prev_w = it->watts;
  }
  const double end_w = power_at(s, t1);
  joules += 0.5 * (prev_w + end_w) * static_cast<double>(t1 - prev_t) * 1e-9;

  EnergyResult out;
  out.joules = joules;
  out.window_s = static_cast<double>(t1 - t0) * 1e-9;
  out.mean_power_w = joules / out.window_s;
  out.mode = EnergyMode::trace_integrated;
  out.extrapolated = outside;
  return out;
}

EnergyResult constant_power_energy(double watts, double window_s) {
  if (!(watts >= 0.0) || !std::isfinite(watts)) {
    throw ValidationError("constant_power_w", "must be finite and >= 0");
  }
  if (!(window_s > 0.0)) throw ValidationError("window", "must be positive");
  EnergyResult out;
  out.joules = watts * window_s;
  out.window_s = window_s;
  out.mean_power_w = watts;
  out.mode = EnergyMode::constant_power;
  return out;
}

EnergyResult subtract_idle(const EnergyResult& total, double idle_w) {
  if (!(idle_w >= 0.0)) throw ValidationError("idle_w", "must be >= 0");
  EnergyResult out = total;
  out.mean_power_w = std::max(0.0, total.mean_power_w - idle_w);
  out.joules = out.mean_power_w * total.window_s;
  out.idle_baseline_w = idle_w;
  return out;
}

double energy_per_mtok(const EnergyResult& energy, std::int64_t tokens) {
  if (tokens < 1) throw ValidationError("tokens", "must be >= 1");
  return energy.joules / static_cast<double>(tokens);
}

double implied_power_w(double throughput_tps, double mj_per_mtok) {
  return throughput_tps * mj_per_mtok;
}

AlignedEnergy integrate_run_window(const PowerTrace& trace, std::int64_t wall_start_utc_ns,
                                   std::int64_t duration_ns, const AlignmentOptions& options) {
  if (trace.empty()) throw ValidationError("power_trace", "trace is empty");
  const std::int64_t offset =
      std::chrono::duration_cast<std::chrono::nanoseconds>(options.meter_offset).count();
  const std::int64_t t0 = wall_start_utc_ns + offset;
  const std::int64_t t1 = t0 + duration_ns;
  const std::int64_t gap =
      std::max<std::int64_t>({0, trace.start_ns() - t0, t1 - trace.end_ns()});

  AlignedEnergy out;
  out.coverage_gap = std::chrono::nanoseconds(gap);
  const auto max_skew = std::chrono::duration_cast<std::chrono::nanoseconds>(options.max_skew);
  if (gap > max_skew.count() && !options.allow_extrapolation) {
    throw ValidationError(
        "power_trace",
        fmt::format("run window misses trace coverage by {} ms (tolerance {} ms)",
                    gap / 1'000'000, options.max_skew.count()));
  }
  out.skew_flagged = gap > max_skew.count();
  out.energy = integrate(trace, t0, t1, IntegrationOptions{/*allow_extrapolation=*/true});
  return out;
}

}  // namespace edgebench
