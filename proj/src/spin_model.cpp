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

#include "nvmetro/spin_model.hpp"

#include <cmath>
#include <stdexcept>

namespace nvmetro {
namespace {

ComplexMatrix diag(std::initializer_list<double> values) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v(k++) = x;
  return v.asDiagonal();
}

ComplexMatrix eye(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

ComplexMatrix half_pauli_x() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 1) = m(1, 0) = 0.5;
  return m;
}

ComplexMatrix half_pauli_y() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 1) = -0.5 * kI;
  m(1, 0) = 0.5 * kI;
  return m;
}

// Embed single-factor operators into electron (x) 14N (x) 13C.
ComplexMatrix on_electron(const ComplexMatrix& op) { return kron({op, eye(2), eye(2)}); }
ComplexMatrix on_nitrogen(const ComplexMatrix& op) { return kron({eye(2), op, eye(2)}); }
ComplexMatrix on_carbon(const ComplexMatrix& op) { return kron({eye(2), eye(2), op}); }

int electron_sign(ElectronPair p) { return p == ElectronPair::ZeroPlusOne ? +1 : -1; }

}  // namespace

std::string to_string(ElectronPair p) {
  return p == ElectronPair::ZeroPlusOne ? "0,+1" : "0,-1";
}

ElectronPair parse_electron_pair(std::string_view s) {
  if (s == "0,+1" || s == "0,1" || s == "zero_plus_one") return ElectronPair::ZeroPlusOne;
  if (s == "0,-1" || s == "zero_minus_one") return ElectronPair::ZeroMinusOne;
  throw std::invalid_argument("unknown electron level pair '" + std::string(s) + "'");
}

void SpinSystem::validate() const {
  const double values[] = {zero_field_mhz,    quadrupole_khz,    field_gauss,
                           gamma_e_mhz_per_g, gamma_n_khz_per_g, gamma_c_khz_per_g,
                           a_par_khz,         a_zz_khz};
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("SpinSystem: non-finite constant");
  }
  if (!(field_gauss > 0.0)) throw std::invalid_argument("SpinSystem: B0 must be positive");
}

int full_index(int m_s, int m_n, int twice_m_c) {
  if (std::abs(m_s) > 1 || std::abs(m_n) > 1 || std::abs(twice_m_c) != 1) {
    throw std::invalid_argument("full_index: projection out of range");
  }
  return (1 - m_s) * 6 + (1 - m_n) * 2 + (twice_m_c > 0 ? 0 : 1);
}

ComplexMatrix full_hamiltonian(const SpinSystem& sys) {
  sys.validate();
  const ComplexMatrix sz = diag({1.0, 0.0, -1.0});
  const ComplexMatrix nz = diag({1.0, 0.0, -1.0});
  const ComplexMatrix cz = diag({0.5, -0.5});
  const ComplexMatrix e3 = eye(3), e2 = eye(2);

  const ComplexMatrix Sz = kron({sz, e3, e2});
  const ComplexMatrix Nz = kron({e3, nz, e2});
  const ComplexMatrix Cz = kron({e3, e3, cz});

  const double khz = 1e-3;
  const double b0 = sys.field_gauss;
  ComplexMatrix h = sys.zero_field_mhz * Sz * Sz + sys.gamma_e_mhz_per_g * b0 * Sz +
                    sys.quadrupole_khz * khz * Nz * Nz -
                    sys.gamma_n_khz_per_g * khz * b0 * Nz +
                    sys.a_par_khz * khz * Sz * Nz -
                    sys.gamma_c_khz_per_g * khz * b0 * Cz +
                    sys.a_zz_khz * khz * Sz * Cz;
  return h;
}

int ReducedRegister::m_s(int index) const {
  return (index / 4) == 0 ? 0 : electron_sign(electron_levels);
}
int ReducedRegister::m_n(int index) const { return ((index / 2) % 2) == 0 ? 1 : 0; }
double ReducedRegister::m_c(int index) const { return (index % 2) == 0 ? 0.5 : -0.5; }
int ReducedRegister::full_index_of(int index) const {
  return full_index(m_s(index), m_n(index), m_c(index) > 0 ? 1 : -1);
}

ReducedRegister make_register(const SpinSystem& sys) {
  const ComplexMatrix h_full = full_hamiltonian(sys);
  ReducedRegister reg;
  reg.electron_levels = sys.electron_levels;
  const int s = electron_sign(sys.electron_levels);
  reg.a_par_mhz = sys.a_par_khz * 1e-3;
  reg.a_zz_mhz = sys.a_zz_khz * 1e-3;

  auto energy = [&](int ms, int mn, int twice_mc) {
    const int k = full_index(ms, mn, twice_mc);
    return h_full(k, k).real();
  };
  // Gaps of the full model between retained levels, with the hyperfine
  // share removed so the remainder is the bare qubit splitting.
  reg.omega_s_mhz =
      (energy(s, 0, 1) - energy(0, 0, 1) - reg.a_zz_mhz * s * 0.5) / static_cast<double>(s);
  reg.omega_n_mhz = energy(0, 1, 1) - energy(0, 0, 1);
  reg.omega_c_mhz = energy(0, 0, 1) - energy(0, 0, -1);

  reg.s_z = on_electron(diag({0.0, static_cast<double>(s)}));
  reg.s_x = on_electron(half_pauli_x());
  reg.s_y = on_electron(half_pauli_y());
  reg.iz_n = on_nitrogen(diag({1.0, 0.0}));
  reg.ix_n = on_nitrogen(half_pauli_x());
  reg.iy_n = on_nitrogen(half_pauli_y());
  reg.iz_c = on_carbon(diag({0.5, -0.5}));
  reg.ix_c = on_carbon(half_pauli_x());
  reg.iy_c = on_carbon(half_pauli_y());
  reg.electron_zero = on_electron(diag({1.0, 0.0}));
  return reg;
}

std::pair<ReducedRegister, ComplexMatrix> reduced_hamiltonian(const SpinSystem& sys) {
  ReducedRegister reg = make_register(sys);
  ComplexMatrix h = reg.omega_s_mhz * reg.s_z + reg.omega_n_mhz * reg.iz_n +
                    reg.omega_c_mhz * reg.iz_c + reg.a_par_mhz * reg.s_z * reg.iz_n +
                    reg.a_zz_mhz * reg.s_z * reg.iz_c;
  return {std::move(reg), std::move(h)};
}

NuclearProjectors nuclear_projectors() {
  auto projector = [](int n_index, int c_index) {
    ComplexMatrix p = ComplexMatrix::Zero(4, 4);
    p(2 * n_index + c_index, 2 * n_index + c_index) = 1.0;
    return kron(eye(2), p);
  };
  NuclearProjectors out;
  out.plus1_down = projector(0, 1);
  out.plus1_up = projector(0, 0);
  out.zero_down = projector(1, 1);
  out.zero_up = projector(1, 0);
  return out;
}

ComplexMatrix interaction_transform(const ComplexMatrix& h, double t_us) {
  return expm(h, Complex(0.0, -kTwoPi * t_us));
}

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::F1Real: return "f1_real";
    case Channel::F1Imag: return "f1_imag";
    case Channel::F2Real: return "f2_real";
    case Channel::F2Imag: return "f2_imag";
    case Channel::RfN: return "rf_N";
    case Channel::RfC: return "rf_C";
  }
  return "?";
}

Channel parse_channel(std::string_view s) {
  for (Channel c : kAllChannels) {
    if (s == to_string(c)) return c;
  }
  throw std::invalid_argument("unknown control channel '" + std::string(s) + "'");
}

ComplexMatrix control_hamiltonian(const ReducedRegister& reg, const NuclearProjectors& proj,
                                  Channel channel, double t_us) {
  if (t_us < 0.0) throw std::invalid_argument("control_hamiltonian: negative time");
  if (channel == Channel::RfN) return reg.ix_n * reg.electron_zero;
  if (channel == Channel::RfC) return reg.ix_c * reg.electron_zero;

  const double a = reg.a_par_mhz;
  const double z = reg.a_zz_mhz;
  // Frame frequency offset (MHz) of each nuclear branch for the two tones,
  // ordered plus1_down, plus1_up, zero_down, zero_up.
  std::array<double, 4> offsets{};
  if (channel == Channel::F1Real || channel == Channel::F1Imag) {
    offsets = {0.0, -z, -a, -(a + z)};
  } else {
    offsets = {a + z / 2.0, a - z / 2.0, z / 2.0, -z / 2.0};
  }
  const bool imag = channel == Channel::F1Imag || channel == Channel::F2Imag;
  const auto projectors = proj.all();

  ComplexMatrix h = ComplexMatrix::Zero(ReducedRegister::kDim, ReducedRegister::kDim);
  for (int b = 0; b < 4; ++b) {
    const double theta = kTwoPi * offsets[b] * t_us;
    const double c = std::cos(theta), s = std::sin(theta);
    const ComplexMatrix rotated = imag ? ComplexMatrix(-s * reg.s_x + c * reg.s_y)
                                       : ComplexMatrix(c * reg.s_x + s * reg.s_y);
    h += rotated * (*projectors[b]);
  }
  return h;
}

}  // namespace nvmetro
