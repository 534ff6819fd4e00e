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

#include "nvmetro/metrology.hpp"

#include <bit>
#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace nvmetro {

double fisher_information(const ParamDistribution& p, double theta) {
  if (!p.probabilities) throw std::invalid_argument("fisher_information: no distribution");
  const std::vector<double> prob = p.probabilities(theta);
  double total = 0.0;
  for (double x : prob) {
    if (x < 0.0) throw std::invalid_argument("fisher_information: negative probability");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg << "fisher_information: probabilities sum to " << std::setprecision(17) << total
        << " at theta = " << theta;
    throw std::invalid_argument(msg.str());
  }

  std::vector<double> dprob;
  if (p.derivative) {
    dprob = p.derivative(theta);
  } else {
    if (!(p.step > 0.0)) throw std::invalid_argument("fisher_information: step must be positive");
    const auto hi = p.probabilities(theta + p.step);
    const auto lo = p.probabilities(theta - p.step);
    if (hi.size() != prob.size() || lo.size() != prob.size()) {
      throw std::invalid_argument("fisher_information: outcome count depends on theta");
    }
    dprob.resize(prob.size());
    for (std::size_t i = 0; i < prob.size(); ++i) dprob[i] = (hi[i] - lo[i]) / (2.0 * p.step);
  }
  if (dprob.size() != prob.size()) {
    throw std::invalid_argument("fisher_information: derivative has the wrong length");
  }

  double f = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    if (prob[i] > 0.0) {
      f += dprob[i] * dprob[i] / prob[i];
    } else if (std::abs(dprob[i]) > 1e-12) {
      std::ostringstream msg;
      msg << "fisher_information: outcome " << i << " has P = 0 but dP = " << dprob[i]
          << " at theta = " << theta << "; its divergent term is skipped";
      if (p.warn) {
        p.warn(msg.str());
      } else {
        std::cerr << "warning: " << msg.str() << '\n';
      }
    }
  }
  return f;
}

double cramer_rao_bound(double fisher, long long nu) {
  if (!(fisher > 0.0)) throw std::invalid_argument("cramer_rao_bound: Fisher information must be positive");
  if (nu < 1) throw std::invalid_argument("cramer_rao_bound: nu must be >= 1");
  return 1.0 / (static_cast<double>(nu) * fisher);
}

void CollectiveSpinState::validate() const {
  if (n < 1 || n > kMaxCollectiveQubits) {
    throw std::invalid_argument("collective state: qubit count must be in [1, 12]");
  }
  if (amplitudes.size() != (Eigen::Index{1} << n)) {
    throw std::invalid_argument("collective state: amplitude vector is not 2^n long");
  }
  if (std::abs(amplitudes.norm() - 1.0) > 1e-10) {
    throw std::invalid_argument("collective state: not normalized");
  }
}

double qfi_pure(const StateVector& state, const StateVector& dstate) {
  if (state.size() != dstate.size()) throw std::invalid_argument("qfi_pure: size mismatch");
  return 4.0 * (dstate.squaredNorm() - std::norm(dstate.dot(state)));
}

StateVector apply_collective(const CollectiveSpinState& s, const Eigen::Vector3d& direction) {
  s.validate();
  const Eigen::Index dim = s.amplitudes.size();
  StateVector out = StateVector::Zero(dim);
  const Complex hx(0.5 * direction.x(), 0.0);
  const Complex hy(0.0, 0.5 * direction.y());
  const double hz = 0.5 * direction.z();
  for (int q = 0; q < s.n; ++q) {
    const Eigen::Index mask = Eigen::Index{1} << (s.n - 1 - q);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const Complex a = s.amplitudes(i);
      const bool one = (i & mask) != 0;
      out(i) += (one ? -hz : hz) * a;
      // sigma_x and sigma_y move amplitude to the partner state.
      out(i ^ mask) += (hx + (one ? -hy : hy)) * a;
    }
  }
  return out;
}

double qfi_generator(const CollectiveSpinState& s, const Eigen::Vector3d& direction) {
  if (std::abs(direction.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("qfi_generator: direction must be a unit vector");
  }
  const StateVector jpsi = apply_collective(s, direction);
  const double mean = s.amplitudes.dot(jpsi).real();
  return 4.0 * (jpsi.squaredNorm() - mean * mean);
}

CollectiveSpinState apply_local(const CollectiveSpinState& s, const Eigen::Matrix2cd& u) {
  s.validate();
  CollectiveSpinState out = s;
  const Eigen::Index dim = s.amplitudes.size();
  for (int q = 0; q < s.n; ++q) {
    const Eigen::Index mask = Eigen::Index{1} << (s.n - 1 - q);
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (i & mask) continue;
      const Complex a = out.amplitudes(i);
      const Complex b = out.amplitudes(i | mask);
      out.amplitudes(i) = u(0, 0) * a + u(0, 1) * b;
      out.amplitudes(i | mask) = u(1, 0) * a + u(1, 1) * b;
    }
  }
  return out;
}

CollectiveSpinState encode_phase(const CollectiveSpinState& s, const Eigen::Vector3d& direction,
                                 double theta) {
  const Eigen::Vector3d n = direction.normalized();
  const double c = std::cos(theta / 2.0);
  const double sn = std::sin(theta / 2.0);
  Eigen::Matrix2cd u;
  u << Complex(c, -sn * n.z()), Complex(-sn * n.y(), -sn * n.x()),
      Complex(sn * n.y(), -sn * n.x()), Complex(c, sn * n.z());
  return apply_local(s, u);
}

namespace {

void check_qubits(int n) {
  if (n < 1 || n > kMaxCollectiveQubits) {
    throw std::invalid_argument("qubit count must be in [1, 12]");
  }
}

}  // namespace

CollectiveSpinState coherent_spin_state(int n, double alpha, double phi) {
  check_qubits(n);
  const Eigen::Vector2cd q(std::cos(alpha / 2.0), std::polar(std::sin(alpha / 2.0), phi));
  return product_state(std::vector<Eigen::Vector2cd>(static_cast<std::size_t>(n), q));
}

CollectiveSpinState ghz_state(int n) {
  check_qubits(n);
  CollectiveSpinState s{n, StateVector::Zero(Eigen::Index{1} << n)};
  s.amplitudes(0) = s.amplitudes(s.amplitudes.size() - 1) = 1.0 / std::sqrt(2.0);
  return s;
}

CollectiveSpinState dicke_state(int n, double m) {
  check_qubits(n);
  const double k_real = n / 2.0 - m;
  const long k = std::lround(k_real);
  if (std::abs(k_real - static_cast<double>(k)) > 1e-12 || k < 0 || k > n) {
    throw std::invalid_argument("dicke_state: m must be one of n/2, n/2 - 1, ..., -n/2");
  }
  CollectiveSpinState s{n, StateVector::Zero(Eigen::Index{1} << n)};
  for (Eigen::Index i = 0; i < s.amplitudes.size(); ++i) {
    if (std::popcount(static_cast<unsigned long>(i)) == k) s.amplitudes(i) = 1.0;
  }
  s.amplitudes.normalize();
  return s;
}

CollectiveSpinState twin_fock_state(int n) {
  if (n % 2 != 0) throw std::invalid_argument("twin_fock_state: n must be even");
  return dicke_state(n, 0.0);
}

CollectiveSpinState reference_state(ReferenceKind kind, int n, const ReferenceParams& params) {
  switch (kind) {
    case ReferenceKind::CoherentSpin: return coherent_spin_state(n, params.alpha, params.phi);
    case ReferenceKind::Ghz: return ghz_state(n);
    case ReferenceKind::Dicke: return dicke_state(n, params.m);
    case ReferenceKind::TwinFock: return twin_fock_state(n);
  }
  throw std::invalid_argument("reference_state: unknown kind");
}

CollectiveSpinState product_state(const std::vector<Eigen::Vector2cd>& qubits) {
  const int n = static_cast<int>(qubits.size());
  check_qubits(n);
  StateVector v = StateVector::Ones(1);
  for (const auto& q : qubits) {
    if (q.norm() == 0.0) throw std::invalid_argument("product_state: zero qubit vector");
    const Eigen::Vector2cd u = q.normalized();
    StateVector next(v.size() * 2);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      next(2 * i) = v(i) * u(0);
      next(2 * i + 1) = v(i) * u(1);
    }
    v = std::move(next);
  }
  return {n, v};
}

CollectiveSpinState random_product_state(int n, Rng& rng) {
  std::vector<Eigen::Vector2cd> qubits;
  for (int q = 0; q < n; ++q) {
    Eigen::Vector2cd v;
    for (int k = 0; k < 2; ++k) v(k) = Complex(rng.normal(0.0, 1.0), rng.normal(0.0, 1.0));
    qubits.push_back(v);
  }
  return product_state(qubits);
}

Eigen::Vector3d random_direction(Rng& rng) {
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(rng.normal(0.0, 1.0), rng.normal(0.0, 1.0), rng.normal(0.0, 1.0));
  } while (v.norm() < 1e-12);
  return v.normalized();
}

bool entanglement_witness(double qfi, int n) { return qfi > static_cast<double>(n); }

VisibilityQfi qfi_from_visibility(double visibility, int n) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) {
    throw std::invalid_argument("qfi_from_visibility: visibility outside [0,1]");
  }
  if (n < 1) throw std::invalid_argument("qfi_from_visibility: n must be >= 1");
  VisibilityQfi out;
  out.qfi = visibility * visibility * n * n;
  out.db_over_sql = 10.0 * std::log10(out.qfi / n);
  return out;
}

double visibility_from_db(double db_over_sql, int n) {
  if (n < 1) throw std::invalid_argument("visibility_from_db: n must be >= 1");
  return std::sqrt(std::pow(10.0, db_over_sql / 10.0) / n);
}

double scaling_prediction(int n, double one_spin_visibility, double per_spin_factor) {
  if (n < 1) throw std::invalid_argument("scaling_prediction: n must be >= 1");
  const double vis = one_spin_visibility * std::pow(per_spin_factor, n - 1);
  return static_cast<double>(n) * n * vis * vis;
}

ScalingScan scan_scaling(int n_max, double one_spin_visibility, double per_spin_factor) {
  if (n_max < 1) throw std::invalid_argument("scan_scaling: n_max must be >= 1");
  constexpr double kTie = 1e-12;
  ScalingScan scan;
  for (int n = 1; n <= n_max; ++n) {
    const double q = scaling_prediction(n, one_spin_visibility, per_spin_factor);
    scan.qfi.push_back(q);
    scan.max_qfi = std::max(scan.max_qfi, q);
  }
  // Neighbouring N can tie exactly (N f = N - 1), so the maximum is a plateau.
  for (int n = 1; n <= n_max; ++n) {
    if (scan.qfi[n - 1] >= scan.max_qfi * (1.0 - kTie)) {
      if (scan.argmax_n == 0) scan.argmax_n = n;
      scan.plateau.push_back(n);
    }
  }
  scan.unimodal = true;
  for (int i = 1; i < n_max; ++i) {
    const int n = i + 1;
    if (n <= scan.argmax_n) {
      if (!(scan.qfi[i] > scan.qfi[i - 1])) scan.unimodal = false;
    } else if (scan.qfi[i] > scan.qfi[i - 1] * (1.0 + kTie)) {
      scan.unimodal = false;
    }
  }
  return scan;
}

CollectiveSpinState one_axis_twisted_state(int n, double mu) {
  CollectiveSpinState s = coherent_spin_state(n, kPi / 2.0, 0.0);
  for (Eigen::Index i = 0; i < s.amplitudes.size(); ++i) {
    const double jz = (n - 2.0 * std::popcount(static_cast<unsigned long>(i))) / 2.0;
    s.amplitudes(i) *= std::polar(1.0, -mu * jz * jz / 2.0);
  }
  return s;
}

SqueezingAnalysis ramsey_squeezing(const CollectiveSpinState& s) {
  std::array<StateVector, 3> j;
  Eigen::Vector3d mean;
  for (int a = 0; a < 3; ++a) {
    j[a] = apply_collective(s, Eigen::Vector3d::Unit(a));
    mean(a) = s.amplitudes.dot(j[a]).real();
  }
  if (mean.norm() < 1e-12) throw std::invalid_argument("ramsey_squeezing: mean spin vanishes");
  Eigen::Matrix3d cov;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) cov(a, b) = j[a].dot(j[b]).real() - mean(a) * mean(b);
  }

  SqueezingAnalysis out;
  out.mean_direction = mean.normalized();
  // Orthonormal pair spanning the plane perpendicular to the mean spin.
  Eigen::Vector3d e1 = out.mean_direction.unitOrthogonal();
  Eigen::Vector3d e2 = out.mean_direction.cross(e1);
  Eigen::Matrix<double, 3, 2> basis;
  basis << e1, e2;
  const Eigen::Matrix2d plane = basis.transpose() * cov * basis;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(plane);
  out.squeezed_direction = (basis * eig.eigenvectors().col(0)).normalized();
  out.rotation_direction = out.mean_direction.cross(out.squeezed_direction).normalized();
  out.xi_r2 = s.n * eig.eigenvalues()(0) / mean.squaredNorm();
  return out;
}

}  // namespace nvmetro
