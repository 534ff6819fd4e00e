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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvmetro {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitSelftest = 4,
};

/// A computation finished but its result is unusable (for example a pulse
/// below the required fidelity).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandOptions {
  std::string config_path;  // optional for scaling and selftest
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int threads = 0;  // 0 = runtime default
  // scaling overrides
  std::optional<int> n_max;
  std::optional<double> one_spin_visibility;
  std::optional<double> per_spin_factor;
  std::ostream* log = nullptr;  // defaults to std::cout
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"optimize-pulse", "interfere", "campaign",
                                                 "budget",         "scaling",   "selftest"};
  return names;
}

/// Runs one command and maps failures to exit codes; diagnostics go to stderr.
int run_command(const std::string& name, const CommandOptions& opts);

// The commands themselves; they throw instead of returning error codes.
int cmd_optimize_pulse(const CommandOptions& opts);
int cmd_interfere(const CommandOptions& opts);
int cmd_campaign(const CommandOptions& opts);
int cmd_budget(const CommandOptions& opts);
int cmd_scaling(const CommandOptions& opts);
int cmd_selftest(const CommandOptions& opts);

}  // namespace nvmetro
