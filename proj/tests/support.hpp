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

// Seeded generators for property tests, plus small helpers shared by the
// test binaries.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "edgebench/bench.hpp"
#include "edgebench/metrics.hpp"

namespace edgebench::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
  /// Values from a small grid so ties and duplicates are common.
  double grid(int steps, double scale) { return static_cast<double>(integer(0, steps)) * scale; }

  MetricVector metric_vector(int index, bool coarse) {
    MetricVector v;
    v.key.config_id = "c" + std::to_string(index);
    v.key.device_id = "d" + std::to_string(index % 4);
    v.key.model_id = "m";
    v.throughput_tps = coarse ? grid(6, 1.0) + 0.5 : uniform(0.1, 50.0);
    v.ttft_s = coarse ? grid(6, 0.5) : uniform(0.0, 20.0);
    v.mj_per_mtok = coarse ? grid(6, 0.25) + 0.1 : uniform(0.1, 40.0);
    v.volume_m3 = uniform(1e-5, 1e-3);
    v.tps_per_m3 = v.throughput_tps / v.volume_m3;
    v.power_w = v.throughput_tps * *v.mj_per_mtok;
    return v;
  }

  /// An ok run with `tokens` events and plausible timestamps.
  RunRecord run(const std::string& config, const std::string& model, int tokens) {
    RunRecord r;
    r.config_id = config;
    r.device_id = "rpi5";
    r.model_id = model;
    r.runtime_kind = RuntimeKind::ollama_native;
    r.status = RunStatus::ok;
    r.submit_monotonic_ns = integer(1'000'000'000, 2'000'000'000);
    r.wall_start_utc_ns = 1'760'000'000'000'000'000 + integer(0, 1'000'000'000'000);
    std::int64_t t = r.submit_monotonic_ns + integer(50'000'000, 3'000'000'000);
    r.first_token_ns = t;
    for (int k = 0; k < tokens; ++k) {
      TokenEvent e;
      e.recv_monotonic_ns = t;
      e.text_fragment = "tok" + std::to_string(k);
      r.events.push_back(e);
      if (k + 1 < tokens) t += integer(1'000'000, 400'000'000);
    }
    TokenEvent fin;
    fin.recv_monotonic_ns = t;
    fin.is_final = true;
    fin.server_reported = ServerCounters{tokens, integer(1, 1'000'000'000)};
    r.events.push_back(fin);
    r.last_token_ns = t;
    r.token_count = tokens;
    r.run_id = config + "/" + model + "/" + std::to_string(r.wall_start_utc_ns);
    if (coin()) {
      const double w = uniform(0.5, 20.0);
      r.energy = constant_power_energy(w, r.elapsed_s());
    }
    return r;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Creates a fresh directory under the system temp dir; removed on scope
/// exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("edgebench-" + tag + "-" + std::to_string(stamp));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline std::string fixture_path(const std::string& name) {
  return (std::filesystem::path(EDGEBENCH_DEFAULT_FIXTURES_DIR) / name).string();
}

}  // namespace edgebench::testing
