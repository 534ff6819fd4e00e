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

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nvmetro/numerics.hpp"
#include "nvmetro/spin_model.hpp"

namespace nvmetro {

/// Piecewise-constant control amplitudes (Rabi frequency, kHz) on the six
/// channels. Every channel always holds n_slices values; `active` lists the
/// channels an optimizer is allowed to change.
struct PulseSequence {
  double slice_ns = 20.0;
  std::array<std::vector<double>, kNumChannels> amplitudes_khz;
  std::vector<Channel> active;
  double amplitude_cap_khz = 10000.0;

  static PulseSequence zeros(int n_slices, double slice_ns, std::vector<Channel> active);

  int n_slices() const { return static_cast<int>(amplitudes_khz[0].size()); }
  double duration_us() const { return n_slices() * slice_ns * 1e-3; }
  std::vector<double>& channel(Channel c) { return amplitudes_khz[static_cast<int>(c)]; }
  const std::vector<double>& channel(Channel c) const {
    return amplitudes_khz[static_cast<int>(c)];
  }

  void validate() const;  // throws std::invalid_argument
};

// Waveform text format:
//   # slice_duration_ns = <value>
//   # index, f1_re_kHz, f1_im_kHz, f2_re_kHz, f2_im_kHz, rfN_kHz, rfC_kHz
//   0, <7 comma separated numbers>
// Numbers are written with 17 significant digits.
void write_waveform(std::ostream& os, const PulseSequence& seq);
PulseSequence read_waveform(std::istream& is);

/// Quasi-static detuning (kHz, on S_z) and relative MW amplitude error.
struct NoiseModel {
  enum class Sampling { Grid, MonteCarlo };

  double sigma_mag_khz = 35.0;
  double sigma_amp = 0.01;
  int n_samples = 49;   // Monte-Carlo ensemble size
  int grid_nodes = 7;   // Gauss-Hermite nodes per axis in grid mode
  Sampling sampling = Sampling::Grid;

  void validate() const;
};

struct NoisePoint {
  double delta_khz = 0.0;
  double delta1 = 0.0;
  double weight = 1.0;
};

/// Weighted ensemble with weights summing to one. Grid mode is the tensor
/// Gauss-Hermite rule (an axis with zero sigma collapses to one node) and
/// does not touch the generator; Monte-Carlo mode draws n_samples pairs.
std::vector<NoisePoint> noise_ensemble(const NoiseModel& noise, Rng& rng);

struct GateTarget {
  ComplexMatrix unitary;
  ComplexMatrix mask;  // optional 0/1 diagonal projector; empty = whole space
  std::string label;

  int support_dim() const;
  ComplexMatrix masked() const;  // P U P
  void validate() const;
};

GateTarget identity_target(int dim = ReducedRegister::kDim);

/// Conditional pi phase: -1 on the listed register basis indices, +1 elsewhere.
GateTarget diagonal_phase_target(const std::vector<int>& flipped_indices, std::string label);

/// Default CPhase: a selective 2 pi electron rotation on the
/// (m_N = +1, m_C = -1/2) branch, i.e. -1 on that nuclear state for both
/// electron levels. The branch has to carry m_N = +1 for the interferometer
/// to produce a GHZ state whose two components differ in total projection.
GateTarget default_cphase_target();

/// |Tr(P U^dagger T P)| / Tr(P).
double gate_fidelity(const ComplexMatrix& u, const GateTarget& target);

/// Precomputed slice Hamiltonians for one register and slice grid. Pure after
/// construction, so one instance can serve many threads.
class ControlModel {
 public:
  ControlModel(const ReducedRegister& reg, const NuclearProjectors& proj, int n_slices,
               double slice_ns);

  int n_slices() const { return n_slices_; }
  double slice_ns() const { return slice_ns_; }

  /// Propagator, last slice leftmost. Amplitudes of MW channels are scaled
  /// by (1 + delta1); delta (kHz) adds delta * S_z to every slice.
  ComplexMatrix propagate(const PulseSequence& seq, double delta_khz, double delta1) const;

  /// Fidelity at one noise point and, if grad is non-empty, its gradient with
  /// respect to the active amplitudes (per kHz), laid out channel-major in
  /// the order of seq.active.
  double fidelity(const PulseSequence& seq, const GateTarget& target, const NoisePoint& noise,
                  std::span<double> grad = {}) const;

  /// Ensemble average of `fidelity`, optionally with gradient. Members are
  /// evaluated in parallel and reduced in a fixed order.
  double ensemble_fidelity(const PulseSequence& seq, const GateTarget& target,
                           const std::vector<NoisePoint>& ensemble,
                           std::span<double> grad = {}) const;

 private:
  void check(const PulseSequence& seq) const;

  using Mat8 = Eigen::Matrix<Complex, ReducedRegister::kDim, ReducedRegister::kDim>;

  int n_slices_;
  double slice_ns_;
  Mat8 s_z_;
  // basis_[k * kNumChannels + c], evaluated at slice midpoints
  std::vector<Mat8> basis_;
};

ComplexMatrix propagate(const PulseSequence& seq, const ReducedRegister& reg,
                        const NuclearProjectors& proj, double delta_khz, double delta1);

double robust_fidelity(const PulseSequence& seq, const GateTarget& target,
                       const NoiseModel& noise, Rng& rng, const ReducedRegister& reg,
                       const NuclearProjectors& proj);

/// Gate fidelity over a grid of noise offsets given in units of the model's
/// sigmas. Rows follow delta_sigmas, columns delta1_sigmas.
RealMatrix fidelity_map(const PulseSequence& seq, const GateTarget& target,
                        const NoiseModel& noise, const std::vector<double>& delta_sigmas,
                        const std::vector<double>& delta1_sigmas, const ReducedRegister& reg,
                        const NuclearProjectors& proj);

std::vector<double> linspace(double lo, double hi, int n);

}  // namespace nvmetro
