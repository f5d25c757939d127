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

#include "edgebench/catalog.hpp"

#include <fmt/format.h>

#include <cmath>
#include <set>

namespace edgebench {

std::string_view to_string(RuntimeKind kind) {
  switch (kind) {
    case RuntimeKind::ollama_native: return "ollama_native";
    case RuntimeKind::hailo_ollama: return "hailo_ollama";
    case RuntimeKind::stackflow_stub: return "stackflow_stub";
    case RuntimeKind::mock: return "mock";
  }
  return "unknown";
}

RuntimeKind parse_runtime_kind(std::string_view name, std::string_view field) {
  for (auto k : {RuntimeKind::ollama_native, RuntimeKind::hailo_ollama,
                 RuntimeKind::stackflow_stub, RuntimeKind::mock}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError(std::string(field),
                        fmt::format("unknown runtime kind '{}'", name));
}

namespace {

void require_positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(field, fmt::format("must be positive, got {}", v));
  }
}

}  // namespace

void DeviceProfile::validate() const {
  const std::string ctx = "device[" + id + "]";
  if (id.empty()) throw ValidationError("device.id", "must not be empty");
  require_positive(width_mm, ctx + ".width_mm");
  require_positive(depth_mm, ctx + ".depth_mm");
  require_positive(height_mm, ctx + ".height_mm");
  if (!(price_usd >= 0.0)) {
    throw ValidationError(ctx + ".price_usd", "must be nonnegative");
  }
  if (accelerator_tops && !(*accelerator_tops >= 0.0)) {
    throw ValidationError(ctx + ".accelerator_tops", "must be nonnegative");
  }
  if (nominal_power_range_w) {
    require_positive(nominal_power_range_w->low_w, ctx + ".nominal_power_range_w");
    require_positive(nominal_power_range_w->high_w, ctx + ".nominal_power_range_w");
    if (nominal_power_range_w->low_w > nominal_power_range_w->high_w) {
      throw ValidationError(ctx + ".nominal_power_range_w", "low exceeds high");
    }
  }
}

double volume_m3(const DeviceProfile& d) {
  return d.width_mm * d.depth_mm * d.height_mm * 1e-9;
}

void ModelSpec::validate() const {
  const std::string ctx = "model[" + id + "]";
  if (id.empty()) throw ValidationError("model.id", "must not be empty");
  require_positive(param_count_b, ctx + ".param_count_b");
  if (runtime_model_ids.empty()) {
    throw ValidationError(ctx + ".runtime_model_ids", "must not be empty");
  }
  if (quantisation.label.empty()) {
    throw ValidationError(ctx + ".quantisation", "must not be empty");
  }
}

const std::string& ModelSpec::model_name_for(RuntimeKind kind) const {
  auto it = runtime_model_ids.find(kind);
  return it == runtime_model_ids.end() ? id : it->second;
}

std::string ModelSpec::size_label() const { return fmt::format("{}B", param_count_b); }

const DeviceProfile* Catalog::find_device(std::string_view id) const {
  for (const auto& d : devices) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

const ModelSpec* Catalog::find_model(std::string_view id) const {
  for (const auto& m : models) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

namespace {

DeviceProfile read_device(const kv::Table& t, std::size_t index, const std::string& source) {
  kv::FieldReader r(t, fmt::format("device[{}]", index), source);
  DeviceProfile d;
  d.id = r.require_string("id");
  d.name = r.optional_string("name").value_or(d.id);
  d.width_mm = r.require_number("width_mm");
  d.depth_mm = r.require_number("depth_mm");
  d.height_mm = r.require_number("height_mm");
  d.price_usd = r.optional_number("price_usd").value_or(0.0);
  d.cpu_desc = r.optional_string("cpu_desc").value_or("");
  d.accelerator_desc = r.optional_string("accelerator_desc");
  d.accelerator_tops = r.optional_number("accelerator_tops");
  if (const kv::Array* range = r.optional_array("nominal_power_range_w")) {
    if (range->size() != 2 || !(*range)[0].is_number() || !(*range)[1].is_number()) {
      throw ValidationError(r.field_path("nominal_power_range_w"),
                            "expected [low, high] in watts");
    }
    d.nominal_power_range_w = PowerRange{(*range)[0].as_number(), (*range)[1].as_number()};
  }
  r.reject_unknown();
  d.validate();
  return d;
}

ModelSpec read_model(const kv::Table& t, std::size_t index, const std::string& source) {
  kv::FieldReader r(t, fmt::format("model[{}]", index), source);
  ModelSpec m;
  m.id = r.require_string("id");
  m.family = r.optional_string("family").value_or("");
  m.param_count_b = r.require_number("param_count_b");
  if (auto q = r.optional_string("quantisation")) m.quantisation.label = *q;
  if (const kv::Table* ids = r.optional_table("runtime_model_ids")) {
    for (std::size_t i = 0; i < ids->size(); ++i) {
      const std::string field = r.field_path("runtime_model_ids." + ids->keys()[i]);
      RuntimeKind kind = parse_runtime_kind(ids->keys()[i], field);
      if (!ids->at(i).is_string()) throw ValidationError(field, "expected string");
      m.runtime_model_ids[kind] = ids->at(i).as_string();
    }
  }
  r.reject_unknown();
  m.validate();
  return m;
}

}  // namespace

Catalog catalog_from_table(const kv::Table& root, const std::string& source) {
  Catalog c;
  kv::FieldReader top(root, "", source);
  if (const kv::Array* devices = top.optional_array("device")) {
    for (std::size_t i = 0; i < devices->size(); ++i) {
      if (!(*devices)[i].is_table()) throw ValidationError("device", "expected [[device]] tables");
      c.devices.push_back(read_device((*devices)[i].as_table(), i, source));
    }
  }
  if (const kv::Array* models = top.optional_array("model")) {
    for (std::size_t i = 0; i < models->size(); ++i) {
      if (!(*models)[i].is_table()) throw ValidationError("model", "expected [[model]] tables");
      c.models.push_back(read_model((*models)[i].as_table(), i, source));
    }
  }
  top.reject_unknown();

  std::set<std::string> seen;
  for (const auto& d : c.devices) {
    if (!seen.insert(d.id).second) {
      throw ValidationError("device[" + d.id + "].id", "duplicate device id");
    }
  }
  seen.clear();
  for (const auto& m : c.models) {
    if (!seen.insert(m.id).second) {
      throw ValidationError("model[" + m.id + "].id", "duplicate model id");
    }
  }
  return c;
}

Catalog parse_catalog(std::string_view text, std::string source) {
  return catalog_from_table(kv::parse(text, source), source);
}

Catalog load_catalog(const std::string& path) {
  return catalog_from_table(kv::parse_file(path), path);
}

std::string serialize_catalog(const Catalog& catalog) {
  kv::Table root;
  kv::Array devices;
  for (const auto& d : catalog.devices) {
    kv::Table t;
    t.insert("id", d.id);
    t.insert("name", d.name);
    t.insert("width_mm", d.width_mm);
    t.insert("depth_mm", d.depth_mm);
    t.insert("height_mm", d.height_mm);
    t.insert("price_usd", d.price_usd);
    t.insert("cpu_desc", d.cpu_desc);
    if (d.accelerator_desc) t.insert("accelerator_desc", *d.accelerator_desc);
    if (d.accelerator_tops) t.insert("accelerator_tops", *d.accelerator_tops);
    if (d.nominal_power_range_w) {
      t.insert("nominal_power_range_w",
               kv::Array{d.nominal_power_range_w->low_w, d.nominal_power_range_w->high_w});
    }
    devices.emplace_back(std::move(t));
  }
  kv::Array models;
  for (const auto& m : catalog.models) {
    kv::Table t;
    t.insert("id", m.id);
    t.insert("family", m.family);
    t.insert("param_count_b", m.param_count_b);
    t.insert("quantisation", m.quantisation.label);
    kv::Table ids;
    for (const auto& [kind, name] : m.runtime_model_ids) {
      ids.insert(std::string(to_string(kind)), name);
    }
    t.insert("runtime_model_ids", std::move(ids));
    models.emplace_back(std::move(t));
  }
  if (!devices.empty()) root.insert("device", std::move(devices));
  if (!models.empty()) root.insert("model", std::move(models));
  return kv::serialize(root);
}

}  // namespace edgebench
