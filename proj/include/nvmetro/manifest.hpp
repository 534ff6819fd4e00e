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
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace nvmetro {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

/// Provenance record written next to every command's outputs. The resolved
/// configuration is also written as `resolved.cfg`, so
///   nvmetro <command> --config <out>/resolved.cfg --seed <seed>
/// replays the run.
struct RunManifest {
  std::string command;
  std::string config_source;
  std::string resolved_config;
  std::uint64_t seed = 0;
  std::string rng_algorithm;
  std::string tool_version;
  int threads = 0;
  double wall_clock_seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> outputs;  // (file name, sha256)

  /// Hashes `file` (relative to `dir`) and appends it to `outputs`.
  void add_output(const std::filesystem::path& dir, const std::string& file);

  /// Writes manifest.txt and resolved.cfg into `dir`.
  void write(const std::filesystem::path& dir) const;
};

std::string tool_version();

}  // namespace nvmetro
