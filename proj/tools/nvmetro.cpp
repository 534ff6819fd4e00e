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

// Command-line front end.

#include <CLI11.hpp>

#include <iostream>

#include "nvmetro/commands.hpp"
#include "nvmetro/manifest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Entangled NV-register interferometry toolkit"};
  app.set_version_flag("--version", nvmetro::tool_version());
  app.require_subcommand(1);

  nvmetro::CommandOptions opts;
  std::uint64_t seed = 0;
  std::string command;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"optimize-pulse", "Optimize a robust shaped pulse with GRAPE"},
      {"interfere", "Simulate a 1/2/3-spin interference fringe and fit its visibility"},
      {"campaign", "Monte-Carlo phase-estimation campaign and variance-vs-nu curve"},
      {"budget", "Evaluate an error-budget table"},
      {"scaling", "Tabulate the visibility-limited QFI scaling law"},
      {"selftest", "Run the built-in smoke checks"},
  };
  int n_max = 0;
  double v1 = 0.0;
  double factor = 0.0;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", opts.config_path, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Root seed (overrides [run] seed)");
    sub->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--threads", opts.threads, "Worker threads (0 = default)")->check(CLI::NonNegativeNumber);
    if (std::string(s.name) == "scaling") {
      sub->add_option("--n-max", n_max, "Largest N written to the table")->check(CLI::PositiveNumber);
      sub->add_option("--one-spin-visibility", v1, "Visibility of one spin")->check(CLI::Range(0.0, 1.0));
      sub->add_option("--per-spin-factor", factor, "Visibility factor per added spin")
          ->check(CLI::Range(0.0, 1.0));
    }
    sub->callback([&command, name = std::string(s.name)] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? nvmetro::kExitOk : nvmetro::kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) opts.seed = seed;
  if (command == "scaling") {
    if (sub->count("--n-max")) opts.n_max = n_max;
    if (sub->count("--one-spin-visibility")) opts.one_spin_visibility = v1;
    if (sub->count("--per-spin-factor")) opts.per_spin_factor = factor;
  }
  return nvmetro::run_command(command, opts);
}
