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
#include <string>
#include <string_view>
#include <utility>

#include "nvmetro/numerics.hpp"

namespace nvmetro {

// Which electron pair (besides m_S = 0) survives the register reduction.
enum class ElectronPair { ZeroPlusOne, ZeroMinusOne };

std::string to_string(ElectronPair p);
ElectronPair parse_electron_pair(std::string_view s);

/// Electron + 14N + 13C register constants. Units are given per field; the
/// Hamiltonians below are expressed in MHz (not angular).
struct SpinSystem {
  double zero_field_mhz = 2869.73;     // D
  double quadrupole_khz = 4945.8;      // Q
  double field_gauss = 8066.0;         // B0
  double gamma_e_mhz_per_g = 2.8025;
  double gamma_n_khz_per_g = 0.3077;   // enters as -gamma_N B0 I_z^N
  double gamma_c_khz_per_g = 1.0705;   // enters as -gamma_C B0 I_z^C
  double a_par_khz = 2164.9;           // 14N hyperfine
  double a_zz_khz = 375.4;             // 13C hyperfine
  ElectronPair electron_levels = ElectronPair::ZeroPlusOne;

  void validate() const;  // throws std::invalid_argument
};

// Index of a full-space basis state |m_S, m_N, m_C>, with m_S, m_N in
// {+1, 0, -1} and twice_m_c in {+1, -1}. Ordering is electron (x) 14N (x) 13C,
// each factor listed from the highest projection down.
int full_index(int m_s, int m_n, int twice_m_c);

/// 18x18 static Hamiltonian in MHz on S=1 (x) I=1 (x) I=1/2.
ComplexMatrix full_hamiltonian(const SpinSystem& sys);

/// Reduced 8-dim register, electron (x) 14N (x) 13C.
///
/// Basis order inside each factor:
///   electron: index 0 -> m_S = 0, index 1 -> m_S = +1 (or -1)
///   14N:      index 0 -> m_N = +1, index 1 -> m_N = 0
///   13C:      index 0 -> m_C = +1/2, index 1 -> m_C = -1/2
/// The z operators carry the physical projection numbers of the retained
/// levels, so S_z = diag(0, +-1), I_z^N = diag(1, 0), I_z^C = diag(1/2, -1/2).
/// Transverse operators are the reduced two-level sigma/2.
struct ReducedRegister {
  static constexpr int kDim = 8;

  ElectronPair electron_levels = ElectronPair::ZeroPlusOne;
  double omega_s_mhz = 0.0;
  double omega_n_mhz = 0.0;
  double omega_c_mhz = 0.0;
  double a_par_mhz = 0.0;
  double a_zz_mhz = 0.0;

  ComplexMatrix s_z, s_x, s_y;
  ComplexMatrix iz_n, ix_n, iy_n;
  ComplexMatrix iz_c, ix_c, iy_c;
  ComplexMatrix electron_zero;  // |m_S=0><m_S=0| (x) 1

  // Projection numbers of a register basis index.
  int m_s(int index) const;
  int m_n(int index) const;
  double m_c(int index) const;
  // Full-space index of the same physical level.
  int full_index_of(int index) const;
};

ReducedRegister make_register(const SpinSystem& sys);

/// The reduced register and its diagonal Hamiltonian (MHz).
std::pair<ReducedRegister, ComplexMatrix> reduced_hamiltonian(const SpinSystem& sys);

/// Projectors on the 4-dim nuclear space, embedded as 1_e (x) P on the
/// register so they can multiply electron operators directly.
struct NuclearProjectors {
  ComplexMatrix plus1_down;  // m_N=+1, m_C=-1/2
  ComplexMatrix plus1_up;    // m_N=+1, m_C=+1/2
  ComplexMatrix zero_down;   // m_N=0,  m_C=-1/2
  ComplexMatrix zero_up;     // m_N=0,  m_C=+1/2

  std::array<const ComplexMatrix*, 4> all() const {
    return {&plus1_down, &plus1_up, &zero_down, &zero_up};
  }
};

NuclearProjectors nuclear_projectors();

/// U_I(t) = exp(-i 2 pi h t), h in MHz and t in microseconds.
ComplexMatrix interaction_transform(const ComplexMatrix& h, double t_us);

enum class Channel { F1Real = 0, F1Imag, F2Real, F2Imag, RfN, RfC };
inline constexpr int kNumChannels = 6;
inline constexpr std::array<Channel, kNumChannels> kAllChannels = {
    Channel::F1Real, Channel::F1Imag, Channel::F2Real,
    Channel::F2Imag, Channel::RfN,    Channel::RfC};

std::string_view to_string(Channel c);
Channel parse_channel(std::string_view s);  // throws std::invalid_argument
inline bool is_microwave(Channel c) { return static_cast<int>(c) < 4; }

/// Interaction-picture basis Hamiltonian of one control channel at time t
/// (microseconds). Multiplying by the channel's Rabi amplitude (MHz) gives
/// that channel's contribution to the control Hamiltonian.
ComplexMatrix control_hamiltonian(const ReducedRegister& reg, const NuclearProjectors& proj,
                                  Channel channel, double t_us);

}  // namespace nvmetro
