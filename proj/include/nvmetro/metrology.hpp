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

#include "nvmetro/numerics.hpp"

namespace nvmetro {

/// Outcome distribution P(x|theta). Without an analytic derivative the
/// Fisher information uses central differences with step `step`.
struct ParamDistribution {
  std::function<std::vector<double>(double)> probabilities;
  std::function<std::vector<double>(double)> derivative;  // optional
  double step = 1e-5;
  // Receives a message when an outcome has P = 0 but dP != 0. Defaults to stderr.
  std::function<void(const std::string&)> warn;
};

/// sum_x P (d ln P / d theta)^2. Outcomes with P = 0 contribute nothing; if
/// their derivative is nonzero the divergence is reported through `warn`.
/// Throws std::invalid_argument when the probabilities do not sum to one
/// within 1e-10 or any is negative.
double fisher_information(const ParamDistribution& p, double theta);

/// 1 / (nu F).
double cramer_rao_bound(double fisher, long long nu);

/// N qubits on the full 2^N basis; qubit 0 is the most significant bit and
/// |0> is the +1/2 eigenstate of its sigma_z / 2.
struct CollectiveSpinState {
  int n = 0;
  StateVector amplitudes;

  void validate() const;  // size 2^n, normalized within 1e-10
};

inline constexpr int kMaxCollectiveQubits = 12;

/// 4 (<d psi|d psi> - |<d psi|psi>|^2).
double qfi_pure(const StateVector& state, const StateVector& dstate);

/// J_n |psi> with J_n = sum_q (n . sigma_q) / 2.
StateVector apply_collective(const CollectiveSpinState& s, const Eigen::Vector3d& direction);

/// 4 Var(J_n). `direction` must be a unit vector.
double qfi_generator(const CollectiveSpinState& s, const Eigen::Vector3d& direction);

/// Same single-qubit unitary on every qubit.
CollectiveSpinState apply_local(const CollectiveSpinState& s, const Eigen::Matrix2cd& u);

/// exp(-i theta J_n) |psi>.
CollectiveSpinState encode_phase(const CollectiveSpinState& s, const Eigen::Vector3d& direction,
                                 double theta);

enum class ReferenceKind { CoherentSpin, Ghz, Dicke, TwinFock };

/// CSS(alpha, phi): every qubit cos(alpha/2)|0> + e^{i phi} sin(alpha/2)|1>.
CollectiveSpinState coherent_spin_state(int n, double alpha, double phi);
/// (|0...0> + |1...1>) / sqrt 2.
CollectiveSpinState ghz_state(int n);
/// Symmetric eigenstate of J_z with eigenvalue m; n/2 - m must be an
/// integer in [0, n].
CollectiveSpinState dicke_state(int n, double m);
/// Dicke m = 0; throws for odd n.
CollectiveSpinState twin_fock_state(int n);

struct ReferenceParams {
  double alpha = 0.0;
  double phi = 0.0;
  double m = 0.0;
};
CollectiveSpinState reference_state(ReferenceKind kind, int n, const ReferenceParams& params = {});

/// Tensor product of single-qubit states (each normalized here).
CollectiveSpinState product_state(const std::vector<Eigen::Vector2cd>& qubits);
CollectiveSpinState random_product_state(int n, Rng& rng);
Eigen::Vector3d random_direction(Rng& rng);

/// QFI above the separable bound N.
bool entanglement_witness(double qfi, int n);

struct VisibilityQfi {
  double qfi = 0.0;
  double db_over_sql = 0.0;
};

/// Moment estimate qfi = vis^2 N^2 and 10 log10(qfi / N).
VisibilityQfi qfi_from_visibility(double visibility, int n);
/// Inverse of the dB relation.
double visibility_from_db(double db_over_sql, int n);

/// N^2 (v1 f^(N-1))^2.
double scaling_prediction(int n, double one_spin_visibility = 0.91, double per_spin_factor = 0.96);

struct ScalingScan {
  std::vector<double> qfi;  // qfi[i] belongs to N = i + 1
  int argmax_n = 0;            // smallest N on the plateau
  std::vector<int> plateau;    // every N within 1e-12 (relative) of the maximum
  double max_qfi = 0.0;
  bool unimodal = false;
};

ScalingScan scan_scaling(int n_max, double one_spin_visibility = 0.91,
                         double per_spin_factor = 0.96);

/// One-axis twisting exp(-i mu J_z^2 / 2) applied to the CSS along +x.
CollectiveSpinState one_axis_twisted_state(int n, double mu);

struct SqueezingAnalysis {
  double xi_r2 = 0.0;            // N Var_min(J_perp) / |<J>|^2
  Eigen::Vector3d mean_direction;
  Eigen::Vector3d squeezed_direction;
  Eigen::Vector3d rotation_direction;  // mean x squeezed
};

SqueezingAnalysis ramsey_squeezing(const CollectiveSpinState& s);

}  // namespace nvmetro
