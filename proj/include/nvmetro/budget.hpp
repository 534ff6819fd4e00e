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

#include <iosfwd>
#include <string>
#include <vector>

namespace nvmetro {

struct BudgetEntry {
  std::string label;
  double fidelity = 1.0;
  int power = 1;
  bool inferred = false;  // not measured independently
};

/// Error budget whose powered product predicts the fringe visibility.
struct ErrorBudgetTable {
  std::vector<BudgetEntry> entries;
  int n_spins = 2;

  void validate() const;  // throws std::invalid_argument
};

double overall_fidelity(const ErrorBudgetTable& table);

/// Running product after each row, same order as the table.
std::vector<double> running_products(const ErrorBudgetTable& table);

void write_budget_report(std::ostream& os, const ErrorBudgetTable& table);

/// NV- preparation fidelity 1 - P_ion - P_NV0 / (RSB + 1), clamped to [0,1].
/// An infinite rsb is allowed.
double nv_negative_fidelity(double p_ion, double p_nv0, double rsb);

/// Upper bound 2 P_e / (1 + P_e) on swap-transferred nuclear polarization.
double nuclear_polarization_bound(double p_e);

struct SurvivalEstimate {
  double probability = 1.0;
  double error = 0.0;
};

/// Plateau-corrected survival 1 - (2 plateau - y1 - y2) / 2 with error
/// |y2 - y1| / 2.
SurvivalEstimate survival_probability_t1(double plateau_mean, double y_before, double y_after);

struct DecaySample {
  double t_us = 0.0;
  double population = 0.0;
};

/// Same estimate from a decay curve: the plateau is the mean of all samples
/// with t <= plateau_end_us, and the two samples bracketing the sequence
/// duration supply y1 and y2. Throws if the duration is not bracketed.
SurvivalEstimate survival_probability_t1(const std::vector<DecaySample>& curve,
                                         double sequence_us, double plateau_end_us = 120.0);

/// p_joint / p_nv clamped to [0,1]; `clamped` reports the unphysical case.
double chopped_survival(double p_joint, double p_nv, bool* clamped = nullptr);

struct VisibilityModel {
  double one_spin_visibility = 0.91;
  double per_spin_factor = 0.96;
};

/// Visibility of an n-spin interferometer under the per-spin degradation model.
double predict_visibility(const VisibilityModel& model, int n_spins);

/// Visibility from an explicit table (its overall fidelity).
double predict_visibility(const ErrorBudgetTable& table);

// Itemised two-spin budget with measured per-stage values.
ErrorBudgetTable itemized_two_spin_table();

}  // namespace nvmetro
