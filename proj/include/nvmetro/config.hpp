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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvmetro {

/// Configuration problem; the message carries the source and line number
/// when one is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat sectioned key-value configuration:
///
///   # comment            ; also a comment
///   [section]
///   key = value          # trailing comments allowed
///
/// Keys are unique within a section and keep their file order. Numeric
/// values accept plain numbers and products/quotients with `pi`, such as
/// `pi/60`, `-pi` or `2*pi/3`.
///
/// Every typed read marks the key as used and records the resolved value,
/// defaults included; `check_all_used` then rejects unknown keys.
class Config {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
    mutable bool used = false;
  };

  static Config parse(std::istream& is, const std::string& source = "<config>");
  static Config load(const std::string& path);

  const std::string& source() const { return source_; }
  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  /// Entries of a section in file order, all marked used. Empty when absent.
  const std::vector<Entry>& entries(const std::string& section) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

  /// Inserts or replaces a value (command-line overrides).
  void set(const std::string& section, const std::string& key, const std::string& value);

  /// Throws ConfigError naming every key that no reader asked for.
  void check_all_used() const;

  /// Values that were read, in a form `parse` accepts again.
  std::string resolved() const;

  /// "source:line" of a key, for diagnostics.
  std::string where(const std::string& section, const std::string& key) const;

 private:
  const Entry* find(const std::string& section, const std::string& key) const;
  const Entry& require(const std::string& section, const std::string& key) const;
  void record(const std::string& section, const std::string& key, const std::string& value) const;

  std::string source_;
  std::vector<std::string> section_order_;
  std::map<std::string, std::vector<Entry>> sections_;
  mutable std::vector<std::string> resolved_order_;
  mutable std::map<std::string, std::vector<std::pair<std::string, std::string>>> resolved_;
};

/// Parses a number or a product/quotient involving `pi`. Throws
/// std::invalid_argument on malformed text.
double parse_number(const std::string& text);

/// Shortest text that reads back to the same double.
std::string format_number(double x);

std::vector<std::string> split_list(const std::string& text, char sep = ',');
std::string trim(const std::string& s);

}  // namespace nvmetro
