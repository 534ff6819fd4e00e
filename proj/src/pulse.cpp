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

#include "nvmetro/pulse.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace nvmetro {

PulseSequence PulseSequence::zeros(int n_slices, double slice_ns, std::vector<Channel> active) {
  if (n_slices < 1) throw std::invalid_argument("PulseSequence: n_slices must be >= 1");
  PulseSequence seq;
  seq.slice_ns = slice_ns;
  for (auto& ch : seq.amplitudes_khz) ch.assign(static_cast<std::size_t>(n_slices), 0.0);
  seq.active = std::move(active);
  return seq;
}

void PulseSequence::validate() const {
  if (!(slice_ns > 0.0)) throw std::invalid_argument("PulseSequence: slice duration must be > 0");
  if (amplitudes_khz[0].empty()) throw std::invalid_argument("PulseSequence: no slices");
  for (const auto& ch : amplitudes_khz) {
    if (ch.size() != amplitudes_khz[0].size()) {
      throw std::invalid_argument("PulseSequence: channels differ in length");
    }
    for (double a : ch) {
      if (!std::isfinite(a)) throw std::invalid_argument("PulseSequence: non-finite amplitude");
      if (std::abs(a) > amplitude_cap_khz * (1.0 + 1e-12)) {
        throw std::invalid_argument("PulseSequence: amplitude exceeds hardware cap");
      }
    }
  }
}

void write_waveform(std::ostream& os, const PulseSequence& seq) {
  seq.validate();
  os << std::setprecision(17);
  os << "# slice_duration_ns = " << seq.slice_ns << '\n';
  os << "# index, f1_re_kHz, f1_im_kHz, f2_re_kHz, f2_im_kHz, rfN_kHz, rfC_kHz\n";
  for (int k = 0; k < seq.n_slices(); ++k) {
    os << k;
    for (const auto& ch : seq.amplitudes_khz) os << ", " << ch[static_cast<std::size_t>(k)];
    os << '\n';
  }
}

PulseSequence read_waveform(std::istream& is) {
  PulseSequence seq;
  bool have_duration = false;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (line.find("slice_duration_ns") != std::string::npos && eq != std::string::npos) {
        seq.slice_ns = std::stod(line.substr(eq + 1));
        have_duration = true;
      }
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument("waveform line " + std::to_string(line_no) +
                                    ": cannot parse '" + cell + "'");
      }
    }
    if (values.size() != kNumChannels + 1) {
      throw std::invalid_argument("waveform line " + std::to_string(line_no) +
                                  ": expected 7 columns");
    }
    if (static_cast<int>(values[0]) != seq.n_slices()) {
      throw std::invalid_argument("waveform line " + std::to_string(line_no) +
                                  ": slice index out of order");
    }
    for (int c = 0; c < kNumChannels; ++c) seq.amplitudes_khz[c].push_back(values[c + 1]);
  }
  if (!have_duration) throw std::invalid_argument("waveform: missing slice_duration_ns header");
  for (Channel c : kAllChannels) {
    for (double a : seq.channel(c)) {
      if (a != 0.0) {
        seq.active.push_back(c);
        break;
      }
    }
  }
  seq.validate();
  return seq;
}

void NoiseModel::validate() const {
  if (!(sigma_mag_khz >= 0.0) || !(sigma_amp >= 0.0)) {
    throw std::invalid_argument("NoiseModel: sigmas must be non-negative");
  }
  if (n_samples < 1) throw std::invalid_argument("NoiseModel: n_samples must be >= 1");
  if (grid_nodes < 1) throw std::invalid_argument("NoiseModel: grid_nodes must be >= 1");
}

std::vector<NoisePoint> noise_ensemble(const NoiseModel& noise, Rng& rng) {
  noise.validate();
  std::vector<NoisePoint> out;
  if (noise.sampling == NoiseModel::Sampling::MonteCarlo) {
    out.reserve(static_cast<std::size_t>(noise.n_samples));
    const double w = 1.0 / noise.n_samples;
    for (int i = 0; i < noise.n_samples; ++i) {
      NoisePoint p;
      p.delta_khz = rng.normal(0.0, noise.sigma_mag_khz);
      p.delta1 = rng.normal(0.0, noise.sigma_amp);
      p.weight = w;
      out.push_back(p);
    }
    return out;
  }
  const QuadratureRule single = gauss_hermite_normal(1);
  const QuadratureRule full = gauss_hermite_normal(noise.grid_nodes);
  const QuadratureRule& mag = noise.sigma_mag_khz > 0.0 ? full : single;
  const QuadratureRule& amp = noise.sigma_amp > 0.0 ? full : single;
  for (std::size_t i = 0; i < mag.nodes.size(); ++i) {
    for (std::size_t j = 0; j < amp.nodes.size(); ++j) {
      out.push_back({mag.nodes[i] * noise.sigma_mag_khz, amp.nodes[j] * noise.sigma_amp,
                     mag.weights[i] * amp.weights[j]});
    }
  }
  return out;
}

int GateTarget::support_dim() const {
  if (mask.size() == 0) return static_cast<int>(unitary.rows());
  return static_cast<int>(std::lround(mask.diagonal().real().sum()));
}

ComplexMatrix GateTarget::masked() const {
  if (mask.size() == 0) return unitary;
  return mask * unitary * mask;
}

void GateTarget::validate() const {
  if (unitary.rows() != unitary.cols() || unitary.rows() == 0) {
    throw std::invalid_argument("GateTarget: unitary must be square");
  }
  if (mask.size() != 0) {
    if (mask.rows() != unitary.rows() || mask.cols() != unitary.cols()) {
      throw std::invalid_argument("GateTarget: mask dimension mismatch");
    }
    if (support_dim() < 1) throw std::invalid_argument("GateTarget: empty mask");
  }
  const ComplexMatrix m = masked();
  const ComplexMatrix p = mask.size() == 0
                              ? ComplexMatrix::Identity(unitary.rows(), unitary.cols())
                              : mask;
  if (max_abs(m.adjoint() * m - p) > 1e-10) {
    throw std::invalid_argument("GateTarget: target is not unitary on its support");
  }
}

GateTarget identity_target(int dim) {
  return {ComplexMatrix::Identity(dim, dim), ComplexMatrix(), "identity"};
}

GateTarget diagonal_phase_target(const std::vector<int>& flipped_indices, std::string label) {
  GateTarget t = identity_target();
  for (int i : flipped_indices) {
    if (i < 0 || i >= ReducedRegister::kDim) {
      throw std::invalid_argument("diagonal_phase_target: index out of range");
    }
    t.unitary(i, i) = -1.0;
  }
  t.label = std::move(label);
  return t;
}

GateTarget default_cphase_target() {
  // (m_N=+1, m_C=-1/2) sits at nuclear index 1; electron index 0 and 1.
  return diagonal_phase_target({1, 5}, "cphase");
}

double gate_fidelity(const ComplexMatrix& u, const GateTarget& target) {
  if (u.rows() != target.unitary.rows() || u.cols() != target.unitary.cols()) {
    throw std::invalid_argument("gate_fidelity: dimension mismatch");
  }
  const Complex tr = (target.masked().adjoint() * u).trace();
  return std::abs(tr) / target.support_dim();
}

ControlModel::ControlModel(const ReducedRegister& reg, const NuclearProjectors& proj,
                           int n_slices, double slice_ns)
    : n_slices_(n_slices), slice_ns_(slice_ns), s_z_(reg.s_z) {
  if (n_slices < 1 || !(slice_ns > 0.0)) {
    throw std::invalid_argument("ControlModel: invalid slice grid");
  }
  basis_.resize(static_cast<std::size_t>(n_slices) * kNumChannels);
  for (int k = 0; k < n_slices; ++k) {
    const double t_mid = (k + 0.5) * slice_ns * 1e-3;
    for (Channel c : kAllChannels) {
      basis_[static_cast<std::size_t>(k) * kNumChannels + static_cast<int>(c)] =
          control_hamiltonian(reg, proj, c, t_mid);
    }
  }
}

void ControlModel::check(const PulseSequence& seq) const {
  if (seq.n_slices() != n_slices_ || std::abs(seq.slice_ns - slice_ns_) > 1e-12 * slice_ns_) {
    throw std::invalid_argument("ControlModel: pulse does not match the slice grid");
  }
}

ComplexMatrix ControlModel::propagate(const PulseSequence& seq, double delta_khz,
                                      double delta1) const {
  check(seq);
  const double dt_us = slice_ns_ * 1e-3;
  Mat8 u = Mat8::Identity();
  Eigen::SelfAdjointEigenSolver<Mat8> es;
  for (int k = 0; k < n_slices_; ++k) {
    Mat8 h = (delta_khz * 1e-3) * s_z_;
    for (Channel c : kAllChannels) {
      const double a = seq.channel(c)[static_cast<std::size_t>(k)];
      if (a == 0.0) continue;
      const double scale = is_microwave(c) ? (1.0 + delta1) : 1.0;
      h += (a * 1e-3 * scale) * basis_[static_cast<std::size_t>(k) * kNumChannels + static_cast<int>(c)];
    }
    es.compute(h);
    const auto phases =
        (Complex(0.0, -kTwoPi * dt_us) * es.eigenvalues().cast<Complex>()).array().exp();
    const Mat8 uk = es.eigenvectors() * phases.matrix().asDiagonal() * es.eigenvectors().adjoint();
    u = uk * u;
  }
  return u;
}

double ControlModel::fidelity(const PulseSequence& seq, const GateTarget& target,
                              const NoisePoint& noise, std::span<double> grad) const {
  check(seq);
  if (target.unitary.rows() != ReducedRegister::kDim) {
    throw std::invalid_argument("ControlModel::fidelity: target must be 8x8");
  }
  const std::size_t n_active = seq.active.size();
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != n_active * static_cast<std::size_t>(n_slices_)) {
    throw std::invalid_argument("ControlModel::fidelity: gradient buffer has wrong size");
  }
  const double dt_us = slice_ns_ * 1e-3;
  const double alpha = kTwoPi * dt_us;
  const Mat8 target_adj = target.masked().adjoint();
  const double dim = target.support_dim();

  std::vector<Mat8> vecs(want_grad ? n_slices_ : 0);
  std::vector<Eigen::Matrix<double, 8, 1>> vals(want_grad ? n_slices_ : 0);
  std::vector<Mat8> slices(want_grad ? n_slices_ : 0);
  std::vector<Mat8> forward(want_grad ? n_slices_ : 0);  // U_{k-1} ... U_1

  Mat8 u = Mat8::Identity();
  Eigen::SelfAdjointEigenSolver<Mat8> es;
  for (int k = 0; k < n_slices_; ++k) {
    Mat8 h = (noise.delta_khz * 1e-3) * s_z_;
    for (Channel c : kAllChannels) {
      const double a = seq.channel(c)[static_cast<std::size_t>(k)];
      if (a == 0.0) continue;
      const double scale = is_microwave(c) ? (1.0 + noise.delta1) : 1.0;
      h += (a * 1e-3 * scale) * basis_[static_cast<std::size_t>(k) * kNumChannels + static_cast<int>(c)];
    }
    es.compute(h);
    const auto phases = (Complex(0.0, -alpha) * es.eigenvalues().cast<Complex>()).array().exp();
    const Mat8 uk = es.eigenvectors() * phases.matrix().asDiagonal() * es.eigenvectors().adjoint();
    if (want_grad) {
      forward[k] = u;
      vecs[k] = es.eigenvectors();
      vals[k] = es.eigenvalues();
      slices[k] = uk;
    }
    u = uk * u;
  }

  const Complex g = (target_adj * u).trace();
  const double abs_g = std::abs(g);
  const double fid = abs_g / dim;
  if (!want_grad) return fid;

  std::fill(grad.begin(), grad.end(), 0.0);
  if (abs_g == 0.0) return fid;

  // d|g|/dx = Re(conj(g) dg) / |g| with dg = Tr(X_{k-1} L_k dU_k),
  // L_k = T^dagger U_N ... U_{k+1}.
  Mat8 left = target_adj;
  for (int k = n_slices_ - 1; k >= 0; --k) {
    const Mat8& v = vecs[k];
    const auto& lam = vals[k];
    const Mat8 w = v.adjoint() * (forward[k] * left) * v;
    // Divided differences of exp(-i alpha lambda).
    Mat8 z;
    for (int j = 0; j < 8; ++j) {
      for (int l = 0; l < 8; ++l) {
        const double d = lam(j) - lam(l);
        const double m = 0.5 * (lam(j) + lam(l));
        const double x = 0.5 * alpha * d;
        const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
        const Complex gamma = Complex(0.0, -alpha) * std::exp(Complex(0.0, -alpha * m)) * sinc;
        z(j, l) = w(l, j) * gamma;
      }
    }
    // dg/da_c = Tr(K B_c) with K = V Z^T V^dagger.
    const Mat8 kmat = v * z.transpose() * v.adjoint();
    for (std::size_t ai = 0; ai < n_active; ++ai) {
      const Channel c = seq.active[ai];
      const double scale = (is_microwave(c) ? (1.0 + noise.delta1) : 1.0) * 1e-3;
      const Mat8& b = basis_[static_cast<std::size_t>(k) * kNumChannels + static_cast<int>(c)];
      const Complex dg = (kmat.transpose().cwiseProduct(b)).sum() * scale;
      grad[ai * static_cast<std::size_t>(n_slices_) + static_cast<std::size_t>(k)] =
          (std::conj(g) * dg).real() / (abs_g * dim);
    }
    left = left * slices[k];
  }
  return fid;
}

double ControlModel::ensemble_fidelity(const PulseSequence& seq, const GateTarget& target,
                                       const std::vector<NoisePoint>& ensemble,
                                       std::span<double> grad) const {
  const std::size_t n = ensemble.size();
  const std::size_t n_grad = grad.size();
  std::vector<double> values(n, 0.0);
  std::vector<double> grads(n_grad == 0 ? 0 : n * n_grad, 0.0);
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    const std::size_t idx = static_cast<std::size_t>(i);
    std::span<double> gi;
    if (n_grad != 0) gi = std::span<double>(grads.data() + idx * n_grad, n_grad);
    values[idx] = fidelity(seq, target, ensemble[idx], gi);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += ensemble[i].weight * values[i];
  if (n_grad != 0) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = ensemble[i].weight;
      for (std::size_t j = 0; j < n_grad; ++j) grad[j] += w * grads[i * n_grad + j];
    }
  }
  return total;
}

ComplexMatrix propagate(const PulseSequence& seq, const ReducedRegister& reg,
                        const NuclearProjectors& proj, double delta_khz, double delta1) {
  seq.validate();
  const ControlModel model(reg, proj, seq.n_slices(), seq.slice_ns);
  return model.propagate(seq, delta_khz, delta1);
}

double robust_fidelity(const PulseSequence& seq, const GateTarget& target,
                       const NoiseModel& noise, Rng& rng, const ReducedRegister& reg,
                       const NuclearProjectors& proj) {
  seq.validate();
  target.validate();
  const ControlModel model(reg, proj, seq.n_slices(), seq.slice_ns);
  return model.ensemble_fidelity(seq, target, noise_ensemble(noise, rng));
}

RealMatrix fidelity_map(const PulseSequence& seq, const GateTarget& target,
                        const NoiseModel& noise, const std::vector<double>& delta_sigmas,
                        const std::vector<double>& delta1_sigmas, const ReducedRegister& reg,
                        const NuclearProjectors& proj) {
  seq.validate();
  target.validate();
  const ControlModel model(reg, proj, seq.n_slices(), seq.slice_ns);
  const auto rows = static_cast<Eigen::Index>(delta_sigmas.size());
  const auto cols = static_cast<Eigen::Index>(delta1_sigmas.size());
  RealMatrix out(rows, cols);
  const long long cells = static_cast<long long>(rows * cols);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long cell = 0; cell < cells; ++cell) {
    const Eigen::Index i = static_cast<Eigen::Index>(cell) / cols;
    const Eigen::Index j = static_cast<Eigen::Index>(cell) % cols;
    const NoisePoint p{delta_sigmas[static_cast<std::size_t>(i)] * noise.sigma_mag_khz,
                       delta1_sigmas[static_cast<std::size_t>(j)] * noise.sigma_amp, 1.0};
    out(i, j) = model.fidelity(seq, target, p);
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("linspace: n must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return out;
}

}  // namespace nvmetro
