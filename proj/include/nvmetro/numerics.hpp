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

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/random/mersenne_twister.hpp>

namespace nvmetro {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Largest Hilbert space the dense routines accept.
inline constexpr Eigen::Index kMaxExpmDim = 64;

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// Kronecker product of a list, left to right.
ComplexMatrix kron(const std::vector<ComplexMatrix>& factors);

/// exp(scale * h). Hermitian input goes through a unitary eigendecomposition,
/// anything else through Pade scaling-and-squaring. Throws
/// std::invalid_argument for non-square or oversized input.
ComplexMatrix expm(const ComplexMatrix& h, Complex scale);

bool is_hermitian(const ComplexMatrix& m, double tol = 1e-12);
bool is_unitary(const ComplexMatrix& m, double tol = 1e-10);

// max_ij |a_ij|
double max_abs(const ComplexMatrix& m);

/// Seeded generator with deterministic child derivation.
///
/// The engine is a 64-bit Mersenne twister; children are seeded through
/// splitmix64 of (seed, index) so that parallel workers can each own an
/// independent stream that depends only on the root seed and their index.
/// Distributions come from Boost.Random, whose algorithms are fixed across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  static std::string algorithm() { return "mt19937_64/splitmix64-children/boost-random"; }

  Rng child(std::uint64_t index) const;

  double uniform();  // [0, 1)
  double normal(double mean, double sigma);
  std::uint64_t binomial(std::uint64_t trials, double p);

 private:
  std::uint64_t seed_;
  boost::random::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// n i.i.d. normal draws. Throws std::invalid_argument on negative sigma.
std::vector<double> gaussian_sample(Rng& rng, double mean, double sigma, std::size_t n);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};

/// Gauss-Hermite rule for the standard normal density (Golub-Welsch).
QuadratureRule gauss_hermite_normal(int n);

}  // namespace nvmetro
