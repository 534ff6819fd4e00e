// Copyright 2026 The nvmetro Authors
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

#include "nvmetro/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>

namespace nvmetro {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

namespace {

double parse_factor(const std::string& f, const std::string& whole) {
  if (f == "pi") return std::numbers::pi;
  double v = 0.0;
  const char* begin = f.data();
  const char* end = f.data() + f.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw std::invalid_argument("not a number: '" + whole + "'");
  }
  return v;
}

}  // namespace

double parse_number(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  if (s.empty()) throw std::invalid_argument("empty number");
  double sign = 1.0;
  std::size_t pos = 0;
  if (s[0] == '-' && s.size() > 1 && !std::isdigit(static_cast<unsigned char>(s[1])) && s[1] != '.') {
    sign = -1.0;
    pos = 1;
  }
  double value = 1.0;
  char op = '*';
  std::size_t start = pos;
  for (std::size_t i = pos; i <= s.size(); ++i) {
    const bool at_end = i == s.size();
    const bool is_op = !at_end && (s[i] == '*' || s[i] == '/') && i > start;
    if (!at_end && !is_op) continue;
    const double f = parse_factor(s.substr(start, i - start), text);
    value = op == '*' ? value * f : value / f;
    if (!at_end) op = s[i];
    start = i + 1;
  }
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite number: '" + text + "'");
  return sign * value;
}

std::string format_number(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("format_number failed");
  return std::string(buf, ptr);
}

Config Config::parse(std::istream& is, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::string line;
  std::string section;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw ConfigError(source + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') fail("unterminated section header");
      section = trim(body.substr(1, body.size() - 2));
      if (section.empty()) fail("empty section name");
      if (!cfg.sections_.count(section)) {
        cfg.section_order_.push_back(section);
        cfg.sections_[section];
      }
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("expected 'key = value', got '" + body + "'");
    if (section.empty()) fail("key outside of any [section]");
    Entry e;
    e.key = trim(body.substr(0, eq));
    e.value = trim(body.substr(eq + 1));
    e.line = lineno;
    if (e.key.empty()) fail("empty key");
    for (const auto& other : cfg.sections_[section]) {
      if (other.key == e.key) {
        fail("duplicate key '" + e.key + "' in [" + section + "] (first defined on line " +
             std::to_string(other.line) + ")");
      }
    }
    cfg.sections_[section].push_back(std::move(e));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  return parse(in, path);
}

bool Config::has_section(const std::string& section) const { return sections_.count(section) > 0; }

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  if (it == sections_.end()) return nullptr;
  for (const auto& e : it->second) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

const Config::Entry& Config::require(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) {
    throw ConfigError(source_ + ": missing required key '" + key + "' in [" + section + "]");
  }
  e->used = true;
  record(section, key, e->value);
  return *e;
}

void Config::record(const std::string& section, const std::string& key,
                    const std::string& value) const {
  if (!resolved_.count(section)) resolved_order_.push_back(section);
  auto& list = resolved_[section];
  for (auto& kv : list) {
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  }
  list.emplace_back(key, value);
}

std::string Config::where(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  return e ? source_ + ":" + std::to_string(e->line) : source_;
}

const std::vector<Config::Entry>& Config::entries(const std::string& section) const {
  static const std::vector<Entry> empty;
  const auto it = sections_.find(section);
  if (it == sections_.end()) return empty;
  if (!resolved_.count(section)) {
    resolved_order_.push_back(section);
    resolved_[section];
  }
  for (const auto& e : it->second) {
    e.used = true;
    record(section, e.key, e.value);
  }
  return it->second;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  return require(section, key).value;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  if (has(section, key)) return get_string(section, key);
  record(section, key, fallback);
  return fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const Entry& e = require(section, key);
  try {
    return parse_number(e.value);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(where(section, key) + ": [" + section + "] " + key + ": " + ex.what());
  }
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (has(section, key)) return get_double(section, key);
  record(section, key, format_number(fallback));
  return fallback;
}

long long Config::get_int(const std::string& section, const std::string& key) const {
  const Entry& e = require(section, key);
  long long v = 0;
  const char* begin = e.value.data();
  const char* end = begin + e.value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw ConfigError(where(section, key) + ": [" + section + "] " + key +
                      ": expected an integer, got '" + e.value + "'");
  }
  return v;
}

long long Config::get_int(const std::string& section, const std::string& key,
                          long long fallback) const {
  if (has(section, key)) return get_int(section, key);
  record(section, key, std::to_string(fallback));
  return fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) {
    record(section, key, fallback ? "true" : "false");
    return fallback;
  }
  std::string v = require(section, key).value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(where(section, key) + ": [" + section + "] " + key +
                    ": expected true or false, got '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_list(section, key)) {
    try {
      out.push_back(parse_number(item));
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(where(section, key) + ": [" + section + "] " + key + ": " + ex.what());
    }
  }
  return out;
}

std::vector<std::string> Config::get_list(const std::string& section, const std::string& key) const {
  return split_list(require(section, key).value);
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  if (!sections_.count(section)) {
    section_order_.push_back(section);
    sections_[section];
  }
  for (auto& e : sections_[section]) {
    if (e.key == key) {
      e.value = value;
      return;
    }
  }
  sections_[section].push_back(Entry{key, value, 0, false});
}

void Config::check_all_used() const {
  std::ostringstream msg;
  int unknown = 0;
  for (const auto& name : section_order_) {
    for (const auto& e : sections_.at(name)) {
      if (e.used) continue;
      msg << (unknown++ ? "\n" : "") << source_ << ":" << e.line << ": unknown key '" << e.key
          << "' in [" << name << "]";
    }
  }
  if (unknown) throw ConfigError(msg.str());
}

std::string Config::resolved() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& name : resolved_order_) {
    os << (first ? "" : "\n") << "[" << name << "]\n";
    first = false;
    for (const auto& [k, v] : resolved_.at(name)) os << k << " = " << v << '\n';
  }
  return os.str();
}

}  // namespace nvmetro
