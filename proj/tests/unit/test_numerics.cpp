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

#include <doctest.h>

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "nvmetro/numerics.hpp"

using namespace nvmetro;

namespace {

ComplexMatrix random_hermitian(int n, Rng& rng) {
  ComplexMatrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = Complex(rng.normal(0, 1), rng.normal(0, 1));
  }
  return (a + a.adjoint()) / 2.0;
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("kron places blocks") {
  ComplexMatrix x(2, 2);
  x << 0, 1, 1, 0;
  const ComplexMatrix k = kron(x, ComplexMatrix::Identity(3, 3));
  CHECK(k.rows() == 6);
  CHECK(k(0, 3) == Complex(1.0));
  CHECK(k(3, 0) == Complex(1.0));
  CHECK(k(0, 0) == Complex(0.0));
  CHECK(kron({x, x, x}).rows() == 8);
}

TEST_CASE("expm agrees with the generic Pade path") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexMatrix h = random_hermitian(6, rng);
    const ComplexMatrix u = expm(h, Complex(0.0, -0.7));
    const ComplexMatrix ref = (Complex(0.0, -0.7) * h).exp();
    CHECK(max_abs(u - ref) < 1e-12);
    CHECK(is_unitary(u));
  }
  ComplexMatrix nilpotent = ComplexMatrix::Zero(2, 2);
  nilpotent(0, 1) = 1.0;
  const ComplexMatrix e = expm(nilpotent, 2.0);
  CHECK(std::abs(e(0, 1) - Complex(2.0)) < 1e-14);
}

TEST_CASE("expm rejects bad shapes") {
  CHECK_THROWS_AS(expm(ComplexMatrix::Zero(2, 3), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(expm(ComplexMatrix::Zero(kMaxExpmDim + 1, kMaxExpmDim + 1), 1.0),
                  std::invalid_argument);
}

TEST_CASE("hermiticity and unitarity predicates") {
  ComplexMatrix m(2, 2);
  m << 1, Complex(0, 1), Complex(0, -1), 2;
  CHECK(is_hermitian(m));
  m(0, 1) = 3.0;
  CHECK_FALSE(is_hermitian(m));
  CHECK(is_unitary(ComplexMatrix::Identity(3, 3)));
  CHECK_FALSE(is_unitary(2.0 * ComplexMatrix::Identity(3, 3)));
}

TEST_CASE("seeded streams are reproducible") {
  Rng a(42), b(42), c(43);
  const double x = a.normal(0, 1);
  CHECK(x == b.normal(0, 1));
  CHECK(x != c.normal(0, 1));
  const Rng root(5);
  Rng c1 = root.child(3), c2 = root.child(3), c3 = root.child(4);
  const double y = c1.uniform();
  CHECK(y == c2.uniform());
  CHECK(y != c3.uniform());
  CHECK(root.child(3).seed() != root.seed());
}

TEST_CASE("gaussian_sample moments") {
  Rng rng(9);
  const auto s = gaussian_sample(rng, 2.0, 0.5, 200000);
  double mean = 0, var = 0;
  for (double x : s) mean += x;
  mean /= s.size();
  for (double x : s) var += (x - mean) * (x - mean);
  var /= s.size() - 1;
  CHECK(mean == doctest::Approx(2.0).epsilon(0.005));
  CHECK(var == doctest::Approx(0.25).epsilon(0.02));
  CHECK_THROWS_AS(gaussian_sample(rng, 0.0, -1.0, 3), std::invalid_argument);
  CHECK(gaussian_sample(rng, 1.5, 0.0, 4) == std::vector<double>(4, 1.5));
}

TEST_CASE("Gauss-Hermite rule integrates normal moments exactly") {
  const QuadratureRule r = gauss_hermite_normal(7);
  REQUIRE(r.nodes.size() == 7);
  double w = 0, m2 = 0, m4 = 0, m12 = 0, m3 = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    const double x = r.nodes[i];
    w += r.weights[i];
    m2 += r.weights[i] * x * x;
    m3 += r.weights[i] * x * x * x;
    m4 += r.weights[i] * std::pow(x, 4);
    m12 += r.weights[i] * std::pow(x, 12);
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(m3) < 1e-13);
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m12 == doctest::Approx(10395.0).epsilon(1e-10));
  CHECK(gauss_hermite_normal(1).nodes == std::vector<double>{0.0});
}

}  // TEST_SUITE
