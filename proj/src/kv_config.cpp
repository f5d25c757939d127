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

#include "edgebench/kv_config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace edgebench {

std::string_view to_string(ErrorClass c) {
  switch (c) {
    case ErrorClass::config: return "config";
    case ErrorClass::validation: return "validation";
    case ErrorClass::parse: return "parse";
    case ErrorClass::io: return "io";
    case ErrorClass::transport: return "transport";
    case ErrorClass::protocol: return "protocol";
    case ErrorClass::acceptance: return "acceptance";
  }
  return "unknown";
}

ParseError::ParseError(std::string source, int line, const std::string& message)
    : Error(ErrorClass::parse,
            line > 0 ? fmt::format("{}:{}: {}", source, line, message)
                     : fmt::format("{}: {}", source, message)),
      source_(std::move(source)),
      line_(line) {}

}  // namespace edgebench

namespace edgebench::kv {

Table::Table() = default;
Table::~Table() = default;
Table::Table(const Table&) = default;
Table::Table(Table&&) noexcept = default;
Table& Table::operator=(const Table&) = default;
Table& Table::operator=(Table&&) noexcept = default;

const Value* Table::find(std::string_view key) const {
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    if (keys_[i] == key) return &values_[i];
  }
  return nullptr;
}

Value* Table::find(std::string_view key) {
  return const_cast<Value*>(std::as_const(*this).find(key));
}

Value& Table::insert(std::string key, Value value) {
  if (find(key) != nullptr) {
    throw std::invalid_argument("duplicate key '" + key + "'");
  }
  keys_.push_back(std::move(key));
  values_.push_back(std::move(value));
  return values_.back();
}

Value& Table::set(std::string key, Value value) {
  if (Value* existing = find(key)) {
    *existing = std::move(value);
    return *existing;
  }
  return insert(std::move(key), std::move(value));
}

const Value& Table::at(std::size_t i) const { return values_.at(i); }

// Key order is presentation only.
bool operator==(const Table& a, const Table& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Value* other = b.find(a.keys_[i]);
    if (other == nullptr || !(*other == a.values_[i])) return false;
  }
  return true;
}

double Value::as_number() const {
  if (is_integer()) return static_cast<double>(as_integer());
  return std::get<double>(data_);
}

std::string_view Value::type_name() const {
  switch (data_.index()) {
    case 0: return "boolean";
    case 1: return "integer";
    case 2: return "float";
    case 3: return "string";
    case 4: return "array";
    default: return "table";
  }
}

namespace {

bool is_bare_key_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '-';
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

class Parser {
 public:
  Parser(std::string_view text, std::string source)
      : text_(text), source_(std::move(source)) {}

  Table run() {
    Table root;
    Table* current = &root;
    std::string current_path;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        current = parse_header(root, current_path);
      } else {
        parse_keyval(*current, current_path);
      }
      expect_line_end();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(source_, line_, msg);
  }

  bool eof() const { return pos_ >= text_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }
  char get() {
    char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r' && peek(1) == '\n') ++pos_;
      if (peek() == '\n') {
        get();
      } else {
        break;
      }
    }
  }

  // Whitespace, comments and newlines inside arrays.
  void skip_ws_multiline() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        get();
      } else {
        break;
      }
    }
  }

  void expect_line_end() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (peek() == '\r') ++pos_;
    if (peek() != '\n') fail(fmt::format("unexpected '{}' after value", peek()));
    get();
  }

  std::string parse_simple_key() {
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    std::string key;
    while (!eof() && is_bare_key_char(peek())) key += text_[pos_++];
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::vector<std::string> parse_key() {
    std::vector<std::string> parts;
    while (true) {
      skip_ws();
      parts.push_back(parse_simple_key());
      skip_ws();
      if (peek() != '.') break;
      ++pos_;
    }
    return parts;
  }

  static std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
      if (!out.empty()) out += '.';
      out += p;
    }
    return out;
  }

  // Walks/creates intermediate tables. Arrays of tables resolve to their
  // last element. `path` accumulates an identity string for duplicate checks.
  Table* descend(Table* table, const std::string& part, std::string& path) {
    Value* v = table->find(part);
    if (v == nullptr) {
      v = &table->insert(part, Value(Table{}));
      v->set_line(line_);
    }
    path += "." + part;
    if (v->is_table()) return &v->as_table();
    if (v->is_array() && !v->as_array().empty() &&
        v->as_array().back().is_table()) {
      path += fmt::format("#{}", v->as_array().size() - 1);
      return &v->as_array().back().as_table();
    }
    fail(fmt::format("key '{}' is a {}, not a table", part, v->type_name()));
  }

  Table* parse_header(Table& root, std::string& current_path) {
    get();  // '['
    const bool array_of_tables = peek() == '[';
    if (array_of_tables) get();
    auto parts = parse_key();
    skip_ws();
    if (get() != ']') fail("expected ']' to close table header");
    if (array_of_tables && get() != ']') fail("expected ']]' to close array header");

    Table* table = &root;
    std::string path;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      table = descend(table, parts[i], path);
    }
    const std::string& last = parts.back();
    if (array_of_tables) {
      Value* v = table->find(last);
      if (v == nullptr) {
        v = &table->insert(last, Value(Array{}));
        v->set_line(line_);
      } else if (!v->is_array()) {
        fail(fmt::format("'{}' already defined as a {}", join(parts), v->type_name()));
      }
      auto& arr = v->as_array();
      if (!arr.empty() && !arr.front().is_table()) {
        fail(fmt::format("'{}' is a static array, not an array of tables", join(parts)));
      }
      arr.emplace_back(Table{});
      arr.back().set_line(line_);
      current_path = fmt::format("{}.{}#{}", path, last, arr.size() - 1);
      return &arr.back().as_table();
    }
    Value* v = table->find(last);
    std::string full = path + "." + last;
    if (v == nullptr) {
      v = &table->insert(last, Value(Table{}));
      v->set_line(line_);
    } else if (!v->is_table()) {
      fail(fmt::format("'{}' already defined as a {}", join(parts), v->type_name()));
    }
    if (!defined_tables_.insert(full).second) {
      fail(fmt::format("table '{}' defined twice", join(parts)));
    }
    current_path = full;
    return &v->as_table();
  }

  void parse_keyval(Table& table, const std::string& table_path) {
    const int key_line = line_;
    auto parts = parse_key();
    skip_ws();
    if (peek() != '=') fail(fmt::format("expected '=' after key '{}'", join(parts)));
    ++pos_;
    skip_ws();
    Value value = parse_value();
    value.set_line(key_line);

    Table* target = &table;
    std::string path = table_path;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      target = descend(target, parts[i], path);
    }
    if (target->contains(parts.back())) {
      fail(fmt::format("duplicate key '{}'", join(parts)));
    }
    target->insert(parts.back(), std::move(value));
  }

  Value parse_value() {
    const int start_line = line_;
    Value v = parse_value_inner();
    v.set_line(start_line);
    return v;
  }

  Value parse_value_inner() {
    const char c = peek();
    if (c == '"') {
      if (peek(1) == '"' && peek(2) == '"') fail("multi-line strings are not supported");
      return Value(parse_basic_string());
    }
    if (c == '\'') return Value(parse_literal_string());
    if (c == '[') return parse_array();
    if (c == '{') return parse_inline_table();
    if (text_.substr(pos_, 4) == "true" && !is_bare_key_char(peek(4))) {
      pos_ += 4;
      return Value(true);
    }
    if (text_.substr(pos_, 5) == "false" && !is_bare_key_char(peek(5))) {
      pos_ += 5;
      return Value(false);
    }
    if (c == '+' || c == '-' || (c >= '0' && c <= '9')) return parse_number();
    if (eof() || c == '\n') fail("missing value");
    fail(fmt::format("unexpected character '{}' at start of value", c));
  }

  std::string parse_basic_string() {
    get();  // opening quote
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = get();
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) fail("unterminated escape");
      char e = get();
      switch (e) {
        case 'b': out += '\b'; break;
        case 't': out += '\t'; break;
        case 'n': out += '\n'; break;
        case 'f': out += '\f'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'u':
        case 'U': {
          const int digits = e == 'u' ? 4 : 8;
          if (pos_ + digits > text_.size()) fail("truncated unicode escape");
          std::uint32_t cp = 0;
          for (int i = 0; i < digits; ++i) {
            char h = get();
            cp <<= 4;
            if (h >= '0' && h <= '9') cp |= static_cast<std::uint32_t>(h - '0');
            else if (h >= 'a' && h <= 'f') cp |= static_cast<std::uint32_t>(h - 'a' + 10);
            else if (h >= 'A' && h <= 'F') cp |= static_cast<std::uint32_t>(h - 'A' + 10);
            else fail("invalid unicode escape");
          }
          append_utf8(out, cp);
          break;
        }
        default: fail(fmt::format("invalid escape '\\{}'", e));
      }
    }
    return out;
  }

  std::string parse_literal_string() {
    get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated literal string");
      char c = get();
      if (c == '\'') break;
      out += c;
    }
    return out;
  }

  Value parse_number() {
    std::string token;
    while (!eof()) {
      char c = peek();
      if ((c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.' ||
          c == 'e' || c == 'E' || c == '_') {
        if (c != '_') token += c;
        ++pos_;
      } else {
        break;
      }
    }
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    try {
      std::size_t used = 0;
      if (is_float) {
        double d = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return Value(d);
      }
      long long i = std::stoll(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      return Value(static_cast<std::int64_t>(i));
    } catch (const std::logic_error&) {
      fail(fmt::format("invalid number '{}'", token));
    }
  }

  Value parse_array() {
    get();  // '['
    Array arr;
    while (true) {
      skip_ws_multiline();
      if (peek() == ']') {
        get();
        break;
      }
      if (eof()) fail("unterminated array");
      arr.push_back(parse_value());
      skip_ws_multiline();
      if (peek() == ',') {
        get();
        continue;
      }
      if (peek() == ']') {
        get();
        break;
      }
      fail("expected ',' or ']' in array");
    }
    return Value(std::move(arr));
  }

  Value parse_inline_table() {
    get();  // '{'
    Table table;
    skip_ws();
    if (peek() == '}') {
      get();
      return Value(std::move(table));
    }
    while (true) {
      skip_ws();
      parse_keyval(table, fmt::format("<inline@{}:{}>", line_, pos_));
      skip_ws();
      char c = eof() ? '\0' : get();
      if (c == '}') break;
      if (c != ',') fail("expected ',' or '}' in inline table");
    }
    return Value(std::move(table));
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::set<std::string> defined_tables_;
};

// ---- writer ----

bool is_bare_key(std::string_view key) {
  return !key.empty() && std::all_of(key.begin(), key.end(), is_bare_key_char);
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          out += fmt::format("\\u{:04X}", static_cast<unsigned>(c));
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

std::string format_key(std::string_view key) {
  return is_bare_key(key) ? std::string(key) : quote(key);
}

std::string format_double(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  std::string s = fmt::format("{}", d);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

bool is_table_array(const Value& v) {
  return v.is_array() && !v.as_array().empty() &&
         std::all_of(v.as_array().begin(), v.as_array().end(),
                     [](const Value& e) { return e.is_table(); });
}

std::string inline_value(const Value& v);

std::string inline_table(const Table& t) {
  if (t.empty()) return "{}";
  std::string out = "{ ";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_key(t.keys()[i]) + " = " + inline_value(t.at(i));
  }
  return out + " }";
}

std::string inline_value(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return quote(x);
        } else if constexpr (std::is_same_v<T, Array>) {
          std::string out = "[";
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i > 0) out += ", ";
            out += inline_value(x[i]);
          }
          return out + "]";
        } else {
          return inline_table(x);
        }
      },
      v.storage());
}

void write_table(std::ostringstream& out, const Table& t, const std::string& prefix) {
  // Plain key/values first; they must precede any header.
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Value& v = t.at(i);
    if (v.is_table() || is_table_array(v)) continue;
    out << format_key(t.keys()[i]) << " = " << inline_value(v) << '\n';
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Value& v = t.at(i);
    const std::string name = prefix.empty() ? format_key(t.keys()[i])
                                            : prefix + "." + format_key(t.keys()[i]);
    if (v.is_table()) {
      out << "\n[" << name << "]\n";
      write_table(out, v.as_table(), name);
    } else if (is_table_array(v)) {
      for (const Value& elem : v.as_array()) {
        out << "\n[[" << name << "]]\n";
        const Table& et = elem.as_table();
        for (std::size_t j = 0; j < et.size(); ++j) {
          out << format_key(et.keys()[j]) << " = " << inline_value(et.at(j)) << '\n';
        }
      }
    }
  }
}

}  // namespace

Table parse(std::string_view text, std::string source) {
  return Parser(text, std::move(source)).run();
}

Table parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

std::string serialize(const Table& root) {
  std::ostringstream out;
  write_table(out, root, "");
  std::string s = out.str();
  if (!s.empty() && s.front() == '\n') s.erase(0, 1);
  return s;
}

// ---- FieldReader ----

FieldReader::FieldReader(const Table& table, std::string context, std::string source)
    : table_(table), context_(std::move(context)), source_(std::move(source)) {}

std::string FieldReader::field_path(std::string_view key) const {
  return context_.empty() ? std::string(key) : context_ + "." + std::string(key);
}

const Value* FieldReader::lookup(std::string_view key) {
  seen_.emplace_back(key);
  return table_.find(key);
}

void FieldReader::type_error(std::string_view key, const Value& v,
                             std::string_view expected) const {
  std::string msg = fmt::format("expected {}, got {}", expected, v.type_name());
  if (v.line() > 0) msg += fmt::format(" (line {})", v.line());
  throw ValidationError(field_path(key), msg);
}

const std::string& FieldReader::require_string(std::string_view key) {
  const Value* v = lookup(key);
  if (v == nullptr) throw ValidationError(field_path(key), "required field missing");
  if (!v->is_string()) type_error(key, *v, "string");
  return v->as_string();
}

std::optional<std::string> FieldReader::optional_string(std::string_view key) {
  const Value* v = lookup(key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_string()) type_error(key, *v, "string");
  return v->as_string();
}

double FieldReader::require_number(std::string_view key) {
  const Value* v = lookup(key);
  if (v == nullptr) throw ValidationError(field_path(key), "required field missing");
  if (!v->is_number()) type_error(key, *v, "number");
  return v->as_number();
}

std::optional<double> FieldReader::optional_number(std::string_view key) {
  const Value* v = lookup(key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_number()) type_error(key, *v, "number");
  return v->as_number();
}

std::int64_t FieldReader::require_integer(std::string_view key) {
  const Value* v = lookup(key);
  if (v == nullptr) throw ValidationError(field_path(key), "required field missing");
  if (!v->is_integer()) type_error(key, *v, "integer");
  return v->as_integer();
}

std::optional<std::int64_t> FieldReader::optional_integer(std::string_view key) {
  const Value* v = lookup(key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_integer()) type_error(key, *v, "integer");
  return v->as_integer();
}

std::optional<bool> FieldReader::optional_bool(std::string_view key) {
  const Value* v = lookup(key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_bool()) type_error(key, *v, "boolean");
  return v->as_bool();
}

const Array* FieldReader::optional_array(std::string_view key) {
  const Value* v = lookup(key);
  if (v == nullptr) return nullptr;
  if (!v->is_array()) type_error(key, *v, "array");
  return &v->as_array();
}

const Table* FieldReader::optional_table(std::string_view key) {
  const Value* v = lookup(key);
  if (v == nullptr) return nullptr;
  if (!v->is_table()) type_error(key, *v, "table");
  return &v->as_table();
}

void FieldReader::reject_unknown() const {
  for (std::size_t i = 0; i < table_.size(); ++i) {
    const auto& key = table_.keys()[i];
    if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
      std::string msg = "unknown field";
      if (table_.at(i).line() > 0) msg += fmt::format(" (line {})", table_.at(i).line());
      throw ValidationError(field_path(key), msg);
    }
  }
}

}  // namespace edgebench::kv
