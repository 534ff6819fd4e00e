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

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nvmetro/budget.hpp"
#include "nvmetro/pulse.hpp"

namespace nvmetro {

enum class Spin { Electron, Nitrogen, Carbon };

std::string_view to_string(Spin s);
Spin parse_spin(std::string_view s);

// Fixed unitary from the ideal gate library.
struct IdealGate {
  std::string name;
  ComplexMatrix op;
  std::vector<Spin> spins;
  bool shadowed = false;  // removable C_nNOT_e of the three-spin circuit
};

// Propagator of a shaped pulse at one noise realisation.
struct PulseGate {
  std::string name;
  ComplexMatrix op;
};

// exp(-i phi sum_s I_z^s) over the acting spins.
struct PhaseAccumulation {
  double phi = 0.0;
  std::vector<Spin> spins;
  ComplexMatrix op;
};

using CircuitElement = std::variant<IdealGate, PulseGate, PhaseAccumulation>;

const ComplexMatrix& element_operator(const CircuitElement& e);
std::string element_name(const CircuitElement& e);

struct Circuit {
  std::vector<CircuitElement> elements;  // applied front to back
  int n_spins = 1;
  std::string label;
};

/// Shared configuration of the interferometer circuits.
struct InterferometerSetup {
  ReducedRegister reg;
  GateTarget cphase = default_cphase_target();
  // The electron flips when this spin has projection `cnot_control_value`.
  Spin cnot_control = Spin::Carbon;
  double cnot_control_value = 0.5;
  Spin readout = Spin::Carbon;
  double readout_value = -0.5;  // fringe reports P(readout spin == value)

  /// Register from `sys`; the C_nNOT_e control projection defaults to the
  /// 13C level whose GHZ branch carries the larger total projection for the
  /// chosen electron pair (+1/2 for {0,+1}, -1/2 for {0,-1}).
  static InterferometerSetup defaults(const SpinSystem& sys = {});
};

// Gate library. Rotations are exp(-i theta I_axis) of one spin.
ComplexMatrix rotation(const ReducedRegister& reg, Spin spin, char axis, double theta);
ComplexMatrix phase_operator(const ReducedRegister& reg, const std::vector<Spin>& spins,
                             double phi);
ComplexMatrix cnnot_e(const ReducedRegister& reg, Spin control, double control_value);
const ComplexMatrix& z_operator(const ReducedRegister& reg, Spin spin);

/// |m_S=0> (x) |m_N=+1> (x) |m_C=-1/2>.
StateVector initial_state();

/// Ramsey on 13C: exp(-i pi/2 I_x^C) exp(-i phi I_z^C) exp(-i pi/2 I_y^C).
Circuit build_one_spin_circuit(double phi, const InterferometerSetup& setup);

/// The eight-element gate string (seven gates and one phase element):
///   exp(-i pi/2 I_x^C) U_CP exp(-i pi/2 I_y^N) exp(-i phi (I_z^C + I_z^N))
///   exp(-i pi/2 I_y^C) U_CP exp(+i pi/2 I_y^C) exp(-i pi/2 I_y^N)
/// applied right to left. `cphase_op` replaces both U_CP by a given operator
/// (e.g. a pulse propagator) and turns them into PulseGate elements.
Circuit build_two_spin_circuit(double phi, const InterferometerSetup& setup,
                               const ComplexMatrix* cphase_op = nullptr);

/// Two-spin circuit with a C_nNOT_e before and after the phase element; the
/// phase element also acts on the electron.
Circuit build_three_spin_circuit(double phi, const InterferometerSetup& setup,
                                 const ComplexMatrix* cphase_op = nullptr);

/// Copy with the shadowed C_nNOT_e elements dropped.
Circuit remove_shadowed(const Circuit& c);

/// Applies elements in order. Throws std::invalid_argument on dimension mismatch.
StateVector run_circuit(const Circuit& c, const StateVector& initial);

/// Probability that `spin` has projection `value` in `state`.
double spin_population(const StateVector& state, const ReducedRegister& reg, Spin spin,
                       double value);

struct FringeData {
  std::vector<double> phases;
  std::vector<double> populations;
  std::vector<double> stderrs;
  int shots_per_point = 0;  // 0 = exact populations

  void validate() const;
};

using CircuitBuilder = std::function<Circuit(double)>;

struct FringeOptions {
  // Contrast scaling toward 1/2 (the budget-predicted visibility).
  std::optional<double> visibility;
  int shots_per_point = 0;
  Rng* rng = nullptr;  // required when shots_per_point > 0
};

FringeData fringe(const CircuitBuilder& builder, const std::vector<double>& phases,
                  const InterferometerSetup& setup, const FringeOptions& opts = {});

/// Budget-scaled overload: the table's overall fidelity sets the visibility.
FringeData fringe(const CircuitBuilder& builder, const std::vector<double>& phases,
                  const InterferometerSetup& setup, const ErrorBudgetTable& vis_model);

void write_fringe_csv(std::ostream& os, const FringeData& f);

struct FringeFit {
  double visibility = 0.0;     // 2 A
  double period = 0.0;         // 2 pi / k
  double frequency = 0.0;      // k
  double phase_offset = 0.0;   // phi_0 in (-pi, pi]
  double offset = 0.0;         // c
  double visibility_err = 0.0;
  double period_err = 0.0;
  double frequency_err = 0.0;
  double phase_offset_err = 0.0;
  double offset_err = 0.0;
  double rms_residual = 0.0;
  int iterations = 0;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitOptions {
  double min_frequency = 0.25;
  double max_frequency = 6.0;
  int scan_points = 2000;
  int max_iterations = 200;
};

/// Least-squares fit of A cos(k phi + phi_0) + c. Needs at least 8 points
/// covering one period of the fitted frequency; otherwise, or if the
/// refinement does not converge, throws FitError with diagnostics.
FringeFit extract_visibility(const FringeData& f, const FitOptions& opts = {});

struct CircuitFidelityResult {
  double mean = 0.0;
  std::vector<double> per_phase;
  double max_sample = 0.0;  // largest single overlap seen
};

/// Average of |<psi_ideal(phi)|psi_pulse(phi)>|^2 over the noise ensemble and
/// the listed phases, where psi_pulse uses the pulse propagator for both
/// CPhase gates of the two-spin circuit.
CircuitFidelityResult circuit_fidelity_under_noise(const std::vector<double>& phi_list,
                                                   const PulseSequence& cphase_pulse,
                                                   const NoiseModel& noise, Rng& rng,
                                                   const InterferometerSetup& setup,
                                                   const NuclearProjectors& proj);

/// -pi ... pi in steps of pi/4.
std::vector<double> default_fidelity_phases();

/// Human-readable JSON description of a circuit.
std::string describe_circuit(const Circuit& c);

}  // namespace nvmetro
