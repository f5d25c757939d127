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
#include <string_view>
#include <vector>

#include "edgebench/bench.hpp"
#include "edgebench/catalog.hpp"

namespace edgebench {

/// A benchmark suite file: which catalog, which endpoints, which models and
/// the measurement protocol.
///
///   catalog = "catalog.toml"          # relative to the suite file; optional
///   models = ["qwen2.5-0.5b"]         # default for endpoints without a list
///
///   [benchmark]
///   runs = 5
///   cooldown_s = 2.0
///   [benchmark.decode_params]
///   temperature = 0.0
///
///   [[endpoint]]
///   id = "rpi5"
///   device = "rpi5"
///   kind = "ollama_native"
///   base_url = "http://10.0.0.5:11434"
struct SuiteConfig {
  std::string source;
  std::string catalog_path;
  std::vector<std::string> models;
  BenchmarkConfig benchmark;
  std::vector<SuiteTarget> targets;
  /// Fingerprint of the suite file text.
  std::string hash;
};

SuiteConfig parse_suite(std::string_view text, const std::string& source);
SuiteConfig load_suite(const std::string& path);

}  // namespace edgebench
