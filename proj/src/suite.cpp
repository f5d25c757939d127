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

#include "edgebench/suite.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "edgebench/errors.hpp"
#include "edgebench/kv_config.hpp"
#include "edgebench/store.hpp"

namespace edgebench {

namespace {

std::chrono::milliseconds seconds_field(kv::FieldReader& r, std::string_view key,
                                        std::chrono::milliseconds fallback) {
  const auto v = r.optional_number(key);
  if (!v) return fallback;
  if (!std::isfinite(*v) || *v < 0) throw ValidationError(r.field_path(key), "must be >= 0");
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(*v * 1000.0)));
}

int int_field(kv::FieldReader& r, std::string_view key, int fallback) {
  const auto v = r.optional_integer(key);
  return v ? static_cast<int>(*v) : fallback;
}

std::vector<std::string> string_list(const kv::Array& arr, const std::string& field) {
  std::vector<std::string> out;
  for (const auto& v : arr) {
    if (!v.is_string()) throw ValidationError(field, "expected an array of strings");
    out.push_back(v.as_string());
  }
  return out;
}

Scalar to_scalar(const kv::Value& v, const std::string& field) {
  if (v.is_bool()) return v.as_bool();
  if (v.is_integer()) return v.as_integer();
  if (v.is_float()) return v.as_number();
  if (v.is_string()) return v.as_string();
  throw ValidationError(field, "decode parameters must be scalars");
}

BenchmarkConfig benchmark_from(const kv::Table& t, const std::string& source) {
  BenchmarkConfig cfg;
  kv::FieldReader r(t, "benchmark", source);
  if (auto p = r.optional_string("prompt")) cfg.prompt = *p;
  cfg.max_new_tokens = int_field(r, "max_new_tokens", cfg.max_new_tokens);
  cfg.runs = int_field(r, "runs", cfg.runs);
  cfg.warmup_runs = int_field(r, "warmup_runs", cfg.warmup_runs);
  cfg.warmup_max_new_tokens = int_field(r, "warmup_max_new_tokens", cfg.warmup_max_new_tokens);
  cfg.cooldown = seconds_field(r, "cooldown_s", cfg.cooldown);
  cfg.max_retries = int_field(r, "max_retries", cfg.max_retries);
  cfg.concurrency = int_field(r, "concurrency", cfg.concurrency);
  cfg.timeouts.connect = seconds_field(r, "connect_timeout_s", cfg.timeouts.connect);
  cfg.timeouts.inter_chunk = seconds_field(r, "inter_chunk_timeout_s", cfg.timeouts.inter_chunk);
  cfg.timeouts.health = seconds_field(r, "health_timeout_s", cfg.timeouts.health);
  if (const kv::Table* dp = r.optional_table("decode_params")) {
    for (std::size_t i = 0; i < dp->size(); ++i) {
      const auto& key = dp->keys()[i];
      cfg.decode_params[key] = to_scalar(dp->at(i), "benchmark.decode_params." + key);
    }
  }
  r.reject_unknown();
  cfg.validate();
  return cfg;
}

}  // namespace

SuiteConfig parse_suite(std::string_view text, const std::string& source) {
  const kv::Table root = kv::parse(text, source);
  SuiteConfig suite;
  suite.source = source;
  suite.hash = content_hash(text);

  kv::FieldReader r(root, "", source);
  suite.catalog_path = r.optional_string("catalog").value_or("");
  if (!suite.catalog_path.empty() && std::filesystem::path(suite.catalog_path).is_relative()) {
    const auto dir = std::filesystem::path(source).parent_path();
    if (!dir.empty()) suite.catalog_path = (dir / suite.catalog_path).string();
  }
  if (const kv::Array* m = r.optional_array("models")) suite.models = string_list(*m, "models");

  if (const kv::Table* b = r.optional_table("benchmark")) {
    suite.benchmark = benchmark_from(*b, source);
  }

  const kv::Array* endpoints = r.optional_array("endpoint");
  if (endpoints == nullptr || endpoints->empty()) {
    throw ConfigError(fmt::format("{}: at least one [[endpoint]] is required", source));
  }
  for (std::size_t i = 0; i < endpoints->size(); ++i) {
    const auto& v = (*endpoints)[i];
    const std::string ctx = fmt::format("endpoint[{}]", i);
    if (!v.is_table()) throw ValidationError(ctx, "expected a table");
    kv::FieldReader e(v.as_table(), ctx, source);
    SuiteTarget t;
    t.config_id = e.require_string("id");
    t.device_id = e.require_string("device");
    const RuntimeKind kind = parse_runtime_kind(e.require_string("kind"), e.field_path("kind"));
    t.endpoint = RuntimeEndpoint::with_defaults(kind);
    if (auto url = e.optional_string("base_url")) t.endpoint.base_url = *url;
    if (auto path = e.optional_string("chat_path")) t.endpoint.chat_path = *path;
    if (kind != RuntimeKind::stackflow_stub) parse_base_url(t.endpoint.base_url);
    if (const kv::Array* m = e.optional_array("models")) {
      t.model_ids = string_list(*m, e.field_path("models"));
    } else {
      t.model_ids = suite.models;
    }
    t.constant_power_w = e.optional_number("constant_power_w");
    if (t.constant_power_w && !(*t.constant_power_w > 0)) {
      throw ValidationError(e.field_path("constant_power_w"), "must be > 0");
    }
    e.reject_unknown();
    if (t.model_ids.empty()) {
      throw ValidationError(e.field_path("models"), "no models for this endpoint");
    }
    for (const auto& prev : suite.targets) {
      if (prev.config_id == t.config_id) {
        throw ValidationError(e.field_path("id"), "duplicate endpoint id '" + t.config_id + "'");
      }
    }
    suite.targets.push_back(std::move(t));
  }
  r.reject_unknown();
  return suite;
}

SuiteConfig load_suite(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open suite file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_suite(buf.str(), path);
}

}  // namespace edgebench
