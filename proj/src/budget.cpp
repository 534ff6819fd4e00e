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

#include "nvmetro/budget.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <stdexcept>

namespace nvmetro {

void ErrorBudgetTable::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (e.label.empty()) throw std::invalid_argument("budget: empty label");
    if (!seen.insert(e.label).second) {
      throw std::invalid_argument("budget: duplicate label '" + e.label + "'");
    }
    if (!(e.fidelity >= 0.0 && e.fidelity <= 1.0)) {
      throw std::invalid_argument("budget: fidelity of '" + e.label + "' outside [0,1]");
    }
    if (e.power < 0) throw std::invalid_argument("budget: negative power for '" + e.label + "'");
  }
  if (n_spins < 1) throw std::invalid_argument("budget: n_spins must be >= 1");
}

double overall_fidelity(const ErrorBudgetTable& table) {
  table.validate();
  double product = 1.0;
  for (const auto& e : table.entries) product *= std::pow(e.fidelity, e.power);
  return product;
}

std::vector<double> running_products(const ErrorBudgetTable& table) {
  table.validate();
  std::vector<double> out;
  double product = 1.0;
  for (const auto& e : table.entries) {
    product *= std::pow(e.fidelity, e.power);
    out.push_back(product);
  }
  return out;
}

void write_budget_report(std::ostream& os, const ErrorBudgetTable& table) {
  const auto running = running_products(table);
  os << std::setprecision(17);
  os << "label, fidelity, power, running_product, inferred\n";
  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    const auto& e = table.entries[i];
    os << e.label << ", " << e.fidelity << ", " << e.power << ", " << running[i] << ", "
       << (e.inferred ? "yes" : "no") << '\n';
  }
  os << "overall, " << overall_fidelity(table) << ", , , \n";
}

double nv_negative_fidelity(double p_ion, double p_nv0, double rsb) {
  if (p_ion < 0.0 || p_nv0 < 0.0 || rsb < 0.0) {
    throw std::invalid_argument("nv_negative_fidelity: negative input");
  }
  const double background = std::isinf(rsb) ? 0.0 : p_nv0 / (rsb + 1.0);
  return std::clamp(1.0 - p_ion - background, 0.0, 1.0);
}

double nuclear_polarization_bound(double p_e) {
  if (!(p_e >= 0.0 && p_e <= 1.0)) {
    throw std::invalid_argument("nuclear_polarization_bound: p_e outside [0,1]");
  }
  return 2.0 * p_e / (1.0 + p_e);
}

SurvivalEstimate survival_probability_t1(double plateau_mean, double y_before, double y_after) {
  SurvivalEstimate out;
  out.probability = 1.0 - (2.0 * plateau_mean - y_before - y_after) / 2.0;
  out.error = std::abs(y_after - y_before) / 2.0;
  return out;
}

SurvivalEstimate survival_probability_t1(const std::vector<DecaySample>& curve,
                                         double sequence_us, double plateau_end_us) {
  double sum = 0.0;
  int count = 0;
  for (const auto& s : curve) {
    if (s.t_us <= plateau_end_us) {
      sum += s.population;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("survival_probability_t1: no plateau samples");

  const DecaySample* before = nullptr;
  const DecaySample* after = nullptr;
  for (const auto& s : curve) {
    if (s.t_us <= sequence_us && (!before || s.t_us > before->t_us)) before = &s;
    if (s.t_us >= sequence_us && (!after || s.t_us < after->t_us)) after = &s;
  }
  if (!before || !after) {
    throw std::invalid_argument("survival_probability_t1: duration not bracketed by samples");
  }
  return survival_probability_t1(sum / count, before->population, after->population);
}

double chopped_survival(double p_joint, double p_nv, bool* clamped) {
  if (!(p_nv > 0.0) || p_joint < 0.0) {
    throw std::invalid_argument("chopped_survival: probabilities must be positive");
  }
  const double ratio = p_joint / p_nv;
  if (clamped) *clamped = ratio > 1.0;
  return std::min(ratio, 1.0);
}

double predict_visibility(const VisibilityModel& model, int n_spins) {
  if (n_spins < 1) throw std::invalid_argument("predict_visibility: n_spins must be >= 1");
  return model.one_spin_visibility * std::pow(model.per_spin_factor, n_spins - 1);
}

double predict_visibility(const ErrorBudgetTable& table) { return overall_fidelity(table); }

ErrorBudgetTable itemized_two_spin_table() {
  ErrorBudgetTable t;
  t.n_spins = 2;
  t.entries = {
      {"readout_13C", 0.9914, 1, false},
      {"nv_negative_preparation", 0.9894, 1, false},
      {"nv_negative_chopped_survival", 0.9942, 1, false},
      {"electron_polarization", 0.978, 1, false},
      {"polarization_13C", 0.9834, 1, false},
      {"polarization_14N", 0.9871, 1, false},
      {"cphase", 0.995, 2, true},
      {"t1_survival", 0.985, 1, false},
  };
  return t;
}

}  // namespace nvmetro
