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

// Reader/writer for the TOML subset used by catalog, suite and mock-profile
// files: [table] and [[array-of-tables]] headers, dotted and quoted keys,
// basic and literal strings, integers, floats, booleans, arrays and inline
// tables. Multi-line strings, dates and hex/octal literals are not accepted.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edgebench/errors.hpp"

namespace edgebench::kv {

class Value;
using Array = std::vector<Value>;

/// Insertion-ordered key/value table.
class Table {
 public:
  Table();
  ~Table();
  Table(const Table&);
  Table(Table&&) noexcept;
  Table& operator=(const Table&);
  Table& operator=(Table&&) noexcept;

  const Value* find(std::string_view key) const;
  Value* find(std::string_view key);
  bool contains(std::string_view key) const { return find(key) != nullptr; }

  /// Throws std::invalid_argument if `key` already exists.
  Value& insert(std::string key, Value value);
  /// Inserts or replaces.
  Value& set(std::string key, Value value);

  const std::vector<std::string>& keys() const { return keys_; }
  const Value& at(std::size_t i) const;
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }

  friend bool operator==(const Table& a, const Table& b);

 private:
  std::vector<std::string> keys_;
  std::vector<Value> values_;
};

class Value {
 public:
  using Storage =
      std::variant<bool, std::int64_t, double, std::string, Array, Table>;

  Value() : data_(Table{}) {}
  Value(bool b) : data_(b) {}
  Value(int i) : data_(std::int64_t{i}) {}
  Value(std::int64_t i) : data_(i) {}
  Value(double d) : data_(d) {}
  Value(const char* s) : data_(std::string(s)) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(Array a) : data_(std::move(a)) {}
  Value(Table t) : data_(std::move(t)) {}

  bool is_bool() const { return std::holds_alternative<bool>(data_); }
  bool is_integer() const { return std::holds_alternative<std::int64_t>(data_); }
  bool is_float() const { return std::holds_alternative<double>(data_); }
  bool is_number() const { return is_integer() || is_float(); }
  bool is_string() const { return std::holds_alternative<std::string>(data_); }
  bool is_array() const { return std::holds_alternative<Array>(data_); }
  bool is_table() const { return std::holds_alternative<Table>(data_); }

  bool as_bool() const { return std::get<bool>(data_); }
  std::int64_t as_integer() const { return std::get<std::int64_t>(data_); }
  /// Integers widen to double.
  double as_number() const;
  const std::string& as_string() const { return std::get<std::string>(data_); }
  const Array& as_array() const { return std::get<Array>(data_); }
  Array& as_array() { return std::get<Array>(data_); }
  const Table& as_table() const { return std::get<Table>(data_); }
  Table& as_table() { return std::get<Table>(data_); }

  std::string_view type_name() const;

  /// Line on which the value started; 0 for values built in code.
  int line() const { return line_; }
  void set_line(int line) { line_ = line; }

  const Storage& storage() const { return data_; }

  friend bool operator==(const Value& a, const Value& b) {
    return a.data_ == b.data_;
  }

 private:
  Storage data_;
  int line_ = 0;
};

/// Parses `text`; `source` names the input in error messages.
Table parse(std::string_view text, std::string source = "<input>");
Table parse_file(const std::string& path);

/// Serializes so that parse(serialize(t)) == t. Sub-tables nested inside
/// array-of-table elements are written inline.
std::string serialize(const Table& root);

/// Typed field access over one table with errors that carry the field path
/// and the source line.
class FieldReader {
 public:
  FieldReader(const Table& table, std::string context, std::string source = {});

  const std::string& require_string(std::string_view key);
  std::optional<std::string> optional_string(std::string_view key);
  double require_number(std::string_view key);
  std::optional<double> optional_number(std::string_view key);
  std::int64_t require_integer(std::string_view key);
  std::optional<std::int64_t> optional_integer(std::string_view key);
  std::optional<bool> optional_bool(std::string_view key);
  const Array* optional_array(std::string_view key);
  const Table* optional_table(std::string_view key);

  /// Throws ValidationError for any key that no accessor asked for.
  void reject_unknown() const;

  std::string field_path(std::string_view key) const;

 private:
  const Value* lookup(std::string_view key);
  [[noreturn]] void type_error(std::string_view key, const Value& v,
                               std::string_view expected) const;

  const Table& table_;
  std::string context_;
  std::string source_;
  std::vector<std::string> seen_;
};

}  // namespace edgebench::kv
