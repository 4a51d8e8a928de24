#pragma once

// Scenario files: a small TOML subset.
//
//   # comment
//   [section]            dotted names allowed: [controls.u1]
//   key = 1.5            number
//   key = "text"         string (single or double quotes)
//   key = true           boolean
//   key = [1, "a", [2]]  arrays, possibly nested, may span lines

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "isaacslab/errors.hpp"

namespace isaacslab::config {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<double, std::string, bool, Array> data;
  std::size_t line = 0;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }
};

class Section {
 public:
  Section() = default;
  explicit Section(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  bool has(const std::string& key) const { return entries_.contains(key); }
  const Value* find(const std::string& key) const;
  void set(const std::string& key, Value v) { entries_[key] = std::move(v); }
  const std::map<std::string, Value>& entries() const { return entries_; }

  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) const;
  std::string string(const std::string& key) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  /// Accepts a scalar number as a one-element list.
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& key) const;
  /// Accepts a scalar string as a one-element list; nested arrays flatten
  /// in row-major order.
  std::vector<std::string> strings(const std::string& key) const;

  /// Throws ConfigError naming the first key not in `allowed`.
  void restrict_keys(std::initializer_list<std::string_view> allowed) const;

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const;
  const Value& require(const std::string& key) const;

  std::string name_;
  std::map<std::string, Value> entries_;
};

class Document {
 public:
  const Section* find(const std::string& name) const;
  const Section& section(const std::string& name) const;  // throws if absent
  Section& ensure(const std::string& name);
  const std::map<std::string, Section>& sections() const { return sections_; }
  void restrict_sections(std::initializer_list<std::string_view> allowed) const;

 private:
  std::map<std::string, Section> sections_;
};

Document parse(std::string_view text);
Document parse_file(const std::string& path);

std::string format_number(double v);
std::string quote(const std::string& s);

}  // namespace isaacslab::config
