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
#include <string>
#include <vector>

#include "nvmetro/pulse.hpp"

namespace nvmetro {

struct GrapeOptions {
  int max_iterations = 500;
  // Largest amplitude change (kHz) of the first, gradient-direction step.
  double initial_step_khz = 20.0;
  // Stop once the ensemble fidelity reaches this value.
  double target_fidelity = 1.0 - 1e-12;
  // Stop when the fidelity gain stays below this for `patience` iterations.
  double tolerance = 1e-10;
  int patience = 20;
  int lbfgs_memory = 12;
  int max_backtracks = 40;
  double armijo = 1e-4;
  // Central differences instead of the analytic propagator derivative.
  bool finite_difference = false;
  double fd_step_khz = 1e-3;
  // Called after every accepted step with (iteration, fidelity).
  std::function<void(int, double)> progress;
};

struct GrapeResult {
  PulseSequence pulse;
  std::vector<double> trace;  // ensemble fidelity after each accepted step
  int iterations = 0;
  bool converged = false;     // target reached or gain below tolerance
  std::string status;
};

/// Gradient-ascent pulse engineering against the ensemble average gate
/// fidelity. Directions come from L-BFGS with a steepest-ascent fallback;
/// a step is only accepted if it satisfies an Armijo increase, so the trace
/// is non-decreasing. Amplitudes are clipped to the pulse's hardware cap.
/// The noise ensemble is drawn once from `rng` before the first iteration.
GrapeResult grape_optimize(const PulseSequence& initial, const GateTarget& target,
                           const NoiseModel& noise, Rng& rng, const GrapeOptions& opts,
                           const ReducedRegister& reg, const NuclearProjectors& proj);

/// Ensemble fidelity gradient by central differences; test oracle for the
/// analytic path.
std::vector<double> finite_difference_gradient(const ControlModel& model,
                                               const PulseSequence& seq,
                                               const GateTarget& target,
                                               const std::vector<NoisePoint>& ensemble,
                                               double step_khz);

/// Random amplitudes, uniform in [-amplitude_khz, amplitude_khz], on the
/// active channels.
PulseSequence random_pulse(int n_slices, double slice_ns, std::vector<Channel> active,
                           double amplitude_khz, Rng& rng);

}  // namespace nvmetro
