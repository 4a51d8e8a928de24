#include "isaacslab/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace isaacslab::config {

namespace {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  Document run() {
    Document doc;
    Section* current = nullptr;
    while (true) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        ++pos_;
        const std::size_t start = pos_;
        while (!at_end() && peek() != ']' && peek() != '\n') ++pos_;
        if (at_end() || peek() != ']') fail("unterminated section header");
        std::string name(trim(text_.substr(start, pos_ - start)));
        ++pos_;
        if (name.empty()) fail("empty section name");
        for (char c : name) {
          if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) {
            fail("invalid section name '" + name + "'");
          }
        }
        if (doc.find(name) != nullptr) fail("duplicate section [" + name + "]");
        current = &doc.ensure(name);
        expect_line_end();
        continue;
      }
      const std::size_t key_start = pos_;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
        ++pos_;
      }
      std::string key(text_.substr(key_start, pos_ - key_start));
      if (key.empty()) fail("expected key or section header");
      skip_inline_space();
      if (at_end() || peek() != '=') fail("expected '=' after key '" + key + "'");
      ++pos_;
      skip_inline_space();
      if (current == nullptr) fail("key '" + key + "' outside of any section");
      if (current->has(key)) fail("duplicate key '" + key + "' in [" + current->name() + "]");
      const std::size_t line = line_;
      Value v = read_value();
      v.line = line;
      current->set(key, std::move(v));
      expect_line_end();
    }
    return doc;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
  }

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  }

  void skip_inline_space() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (!at_end() && peek() == '#') {
      while (!at_end() && peek() != '\n') ++pos_;
    }
  }

  void skip_blank_lines() {
    while (true) {
      skip_inline_space();
      skip_comment();
      if (!at_end() && peek() == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      return;
    }
  }

  // Whitespace, comments and newlines inside arrays.
  void skip_any_space() {
    while (!at_end()) {
      if (peek() == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(peek()))) {
        ++pos_;
      } else if (peek() == '#') {
        skip_comment();
      } else {
        return;
      }
    }
  }

  void expect_line_end() {
    skip_inline_space();
    skip_comment();
    if (!at_end() && peek() != '\n') fail("unexpected trailing characters");
  }

  Value read_value() {
    if (at_end()) fail("missing value");
    const char c = peek();
    Value v;
    if (c == '"' || c == '\'') {
      const char q = c;
      ++pos_;
      std::string s;
      while (!at_end() && peek() != q) {
        if (peek() == '\n') fail("unterminated string");
        if (q == '"' && peek() == '\\' && pos_ + 1 < text_.size()) {
          ++pos_;
          const char e = peek();
          s += e == 'n' ? '\n' : (e == 't' ? '\t' : e);
          ++pos_;
          continue;
        }
        s += peek();
        ++pos_;
      }
      if (at_end()) fail("unterminated string");
      ++pos_;
      v.data = std::move(s);
      return v;
    }
    if (c == '[') {
      ++pos_;
      Array items;
      skip_any_space();
      if (!at_end() && peek() == ']') {
        ++pos_;
        v.data = std::move(items);
        return v;
      }
      while (true) {
        skip_any_space();
        Value item = read_value();
        item.line = line_;
        items.push_back(std::move(item));
        skip_any_space();
        if (at_end()) fail("unterminated array");
        if (peek() == ',') {
          ++pos_;
          skip_any_space();
          if (!at_end() && peek() == ']') {
            ++pos_;
            break;
          }
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          break;
        }
        fail("expected ',' or ']' in array");
      }
      v.data = std::move(items);
      return v;
    }
    const std::size_t start = pos_;
    while (!at_end() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' &&
           peek() != ']' && peek() != '#') {
      ++pos_;
    }
    const std::string_view word = text_.substr(start, pos_ - start);
    if (word == "true" || word == "false") {
      v.data = word == "true";
      return v;
    }
    double d = 0.0;
    const char* first = word.data();
    if (!word.empty() && word.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, word.data() + word.size(), d);
    if (word.empty() || ec != std::errc{} || ptr != word.data() + word.size() || !std::isfinite(d)) {
      fail("invalid value '" + std::string(word) + "' (strings must be quoted)");
    }
    v.data = d;
    return v;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

void flatten_strings(const Value& v, std::vector<std::string>& out, bool& ok) {
  if (v.is_string()) {
    out.push_back(std::get<std::string>(v.data));
  } else if (v.is_array()) {
    for (const auto& item : std::get<Array>(v.data)) flatten_strings(item, out, ok);
  } else if (v.is_number()) {
    out.push_back(format_number(std::get<double>(v.data)));
  } else {
    ok = false;
  }
}

bool is_integral(double d) { return std::isfinite(d) && std::floor(d) == d && std::fabs(d) < 9e15; }

}  // namespace

const Value* Section::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void Section::fail(const std::string& key, const std::string& msg) const {
  throw ConfigError("schema violation: [" + name_ + "] " + key + ": " + msg);
}

const Value& Section::require(const std::string& key) const {
  const Value* v = find(key);
  if (v == nullptr) fail(key, "missing required key");
  return *v;
}

double Section::number(const std::string& key) const {
  const Value& v = require(key);
  if (!v.is_number()) fail(key, "expected a number");
  return std::get<double>(v.data);
}

double Section::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::int64_t Section::integer(const std::string& key) const {
  const double d = number(key);
  if (!is_integral(d)) fail(key, "expected an integer");
  return static_cast<std::int64_t>(d);
}

std::int64_t Section::integer_or(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::string Section::string(const std::string& key) const {
  const Value& v = require(key);
  if (!v.is_string()) fail(key, "expected a quoted string");
  return std::get<std::string>(v.data);
}

std::string Section::string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

bool Section::boolean_or(const std::string& key, bool fallback) const {
  const Value* v = find(key);
  if (v == nullptr) return fallback;
  if (!v->is_bool()) fail(key, "expected true or false");
  return std::get<bool>(v->data);
}

std::vector<double> Section::numbers(const std::string& key) const {
  const Value& v = require(key);
  if (v.is_number()) return {std::get<double>(v.data)};
  if (!v.is_array()) fail(key, "expected a number or a list of numbers");
  std::vector<double> out;
  for (const auto& item : std::get<Array>(v.data)) {
    if (!item.is_number()) fail(key, "expected a list of numbers");
    out.push_back(std::get<double>(item.data));
  }
  return out;
}

std::vector<std::int64_t> Section::integers(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (double d : numbers(key)) {
    if (!is_integral(d)) fail(key, "expected integers");
    out.push_back(static_cast<std::int64_t>(d));
  }
  return out;
}

std::vector<std::string> Section::strings(const std::string& key) const {
  const Value& v = require(key);
  std::vector<std::string> out;
  bool ok = true;
  flatten_strings(v, out, ok);
  if (!ok) fail(key, "expected a string or a list of strings");
  return out;
}

void Section::restrict_keys(std::initializer_list<std::string_view> allowed) const {
  for (const auto& [key, value] : entries_) {
    bool found = false;
    for (auto a : allowed) found = found || a == key;
    if (!found) fail(key, "unknown key");
  }
}

const Section* Document::find(const std::string& name) const {
  const auto it = sections_.find(name);
  return it == sections_.end() ? nullptr : &it->second;
}

const Section& Document::section(const std::string& name) const {
  const Section* s = find(name);
  if (s == nullptr) throw ConfigError("schema violation: missing section [" + name + "]");
  return *s;
}

Section& Document::ensure(const std::string& name) {
  auto [it, inserted] = sections_.try_emplace(name, name);
  return it->second;
}

void Document::restrict_sections(std::initializer_list<std::string_view> allowed) const {
  for (const auto& [name, section] : sections_) {
    bool found = false;
    for (auto a : allowed) found = found || a == name;
    if (!found) throw ConfigError("schema violation: unknown section [" + name + "]");
  }
}

Document parse(std::string_view text) { return Reader(text).run(); }

Document parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace isaacslab::config
