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

#include "nvmetro/numerics.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace nvmetro {

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ComplexMatrix kron(const std::vector<ComplexMatrix>& factors) {
  if (factors.empty()) return ComplexMatrix::Identity(1, 1);
  ComplexMatrix out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = kron(out, factors[k]);
  return out;
}

double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m - m.adjoint()) <= tol * std::max(1.0, max_abs(m));
}

bool is_unitary(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m.adjoint() * m - ComplexMatrix::Identity(m.rows(), m.cols())) < tol;
}

ComplexMatrix expm(const ComplexMatrix& h, Complex scale) {
  if (h.rows() != h.cols()) throw std::invalid_argument("expm: matrix is not square");
  if (h.rows() > kMaxExpmDim) throw std::invalid_argument("expm: dimension exceeds 64");
  if (h.rows() == 0) return h;

  if (is_hermitian(h, 1e-14)) {
    const ComplexMatrix sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym);
    const Eigen::VectorXcd phases =
        (scale * es.eigenvalues().cast<Complex>()).array().exp().matrix();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }
  const ComplexMatrix scaled = scale * h;
  return scaled.exp();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

Rng Rng::child(std::uint64_t index) const {
  return Rng(splitmix64(seed_ ^ splitmix64(index + 1)));
}

double Rng::uniform() {
  boost::random::uniform_01<double> dist;
  return dist(engine_);
}

double Rng::normal(double mean, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("normal: negative sigma");
  if (sigma == 0.0) return mean;
  boost::random::normal_distribution<double> dist(mean, sigma);
  return dist(engine_);
}

std::uint64_t Rng::binomial(std::uint64_t trials, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial: p outside [0,1]");
  if (p == 0.0 || trials == 0) return 0;
  if (p == 1.0) return trials;
  boost::random::binomial_distribution<std::int64_t, double> dist(
      static_cast<std::int64_t>(trials), p);
  return static_cast<std::uint64_t>(dist(engine_));
}

std::vector<double> gaussian_sample(Rng& rng, double mean, double sigma, std::size_t n) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_sample: negative sigma");
  std::vector<double> out(n, mean);
  if (sigma == 0.0) return out;
  for (auto& x : out) x = rng.normal(mean, sigma);
  return out;
}

QuadratureRule gauss_hermite_normal(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite_normal: n must be >= 1");
  // Jacobi matrix of the probabilists' Hermite recurrence.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = jacobi(k - 1, k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    rule.nodes[k] = es.eigenvalues()(k);
    rule.weights[k] = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
    total += rule.weights[k];
  }
  for (auto& w : rule.weights) w /= total;
  // Exact symmetry: the middle node of an odd rule is zero.
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  for (int k = 0; k < n / 2; ++k) {
    const double x = 0.5 * (rule.nodes[n - 1 - k] - rule.nodes[k]);
    const double w = 0.5 * (rule.weights[n - 1 - k] + rule.weights[k]);
    rule.nodes[k] = -x;
    rule.nodes[n - 1 - k] = x;
    rule.weights[k] = w;
    rule.weights[n - 1 - k] = w;
  }
  return rule;
}

}  // namespace nvmetro
