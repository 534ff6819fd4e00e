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
#include <string>

#include "nvmetro/metrology.hpp"

using namespace nvmetro;

namespace {

ParamDistribution binary(std::function<double(double)> p0) {
  ParamDistribution d;
  d.probabilities = [p0](double th) { return std::vector<double>{p0(th), 1.0 - p0(th)}; };
  return d;
}

Eigen::MatrixXcd random_unitary(int n, Rng& rng) {
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = Complex(rng.normal(0, 1), rng.normal(0, 1));
  }
  return a.householderQr().householderQ();
}

}  // namespace

TEST_SUITE("metrology") {

TEST_CASE("Fisher information of textbook fringes") {
  const auto one = binary([](double th) { return std::pow(std::cos(th / 2), 2); });
  for (double th : {0.3, 1.0, 2.5}) CHECK(fisher_information(one, th) == doctest::Approx(1.0).epsilon(1e-6));
  const auto three = binary([](double th) { return std::pow(std::cos(1.5 * th), 2); });
  CHECK(fisher_information(three, 0.4) == doctest::Approx(9.0).epsilon(1e-6));
  const auto flat = binary([](double) { return 0.3; });
  CHECK(fisher_information(flat, 1.0) == 0.0);
}

TEST_CASE("analytic derivatives are used when given") {
  auto d = binary([](double th) { return std::pow(std::cos(th / 2), 2); });
  d.derivative = [](double th) {
    const double g = -0.5 * std::sin(th);
    return std::vector<double>{g, -g};
  };
  CHECK(fisher_information(d, 0.9) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalization is enforced") {
  ParamDistribution bad;
  bad.probabilities = [](double) { return std::vector<double>{0.5, 0.6}; };
  CHECK_THROWS_AS(fisher_information(bad, 0.0), std::invalid_argument);
}

TEST_CASE("zero-probability outcomes") {
  // At theta = 0 the second outcome has P = 0 and dP = 0: no contribution.
  auto d = binary([](double th) { return std::pow(std::cos(th / 2), 2); });
  std::string warning;
  d.warn = [&](const std::string& m) { warning = m; };
  CHECK(fisher_information(d, 0.0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(warning.empty());
  // P = 0 with a nonzero slope is reported.
  ParamDistribution kink;
  kink.probabilities = [](double th) {
    const double p = std::clamp(0.5 + th, 0.0, 1.0);
    return std::vector<double>{p, 1.0 - p};
  };
  kink.derivative = [](double) { return std::vector<double>{1.0, -1.0}; };
  kink.warn = [&](const std::string& m) { warning = m; };
  fisher_information(kink, 0.5);
  CHECK(warning.find("P = 0") != std::string::npos);
}

TEST_CASE("Cramer-Rao bound") {
  CHECK(cramer_rao_bound(1.0, 1) == 1.0);
  CHECK(cramer_rao_bound(4.0, 200) == doctest::Approx(1.0 / 800));
  const double f = std::pow(0.869 * 2, 2);
  CHECK(std::sqrt(cramer_rao_bound(f, 1000)) == doctest::Approx(0.0182).epsilon(0.01));
  CHECK_THROWS_AS(cramer_rao_bound(0.0, 10), std::invalid_argument);
}

TEST_CASE("qfi_pure") {
  const auto ghz = ghz_state(3);
  CHECK(qfi_pure(ghz.amplitudes, StateVector::Zero(8)) == 0.0);
  CHECK(std::abs(qfi_pure(ghz.amplitudes, Complex(0, 0.7) * ghz.amplitudes)) < 1e-14);
  const StateVector d = Complex(0, -1) * apply_collective(ghz, Eigen::Vector3d::UnitZ());
  CHECK(qfi_pure(ghz.amplitudes, d) == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("closed forms of the reference states") {
  const Eigen::Vector3d x = Eigen::Vector3d::UnitX(), z = Eigen::Vector3d::UnitZ();
  for (int n = 1; n <= 8; ++n) {
    CHECK(std::abs(qfi_generator(coherent_spin_state(n, 0, 0), x) - n) < 1e-9);
    CHECK(std::abs(qfi_generator(ghz_state(n), z) - n * n) < 1e-9);
    for (int k = 0; k <= n; ++k) {
      const double m = n / 2.0 - k;
      CHECK(std::abs(qfi_generator(dicke_state(n, m), x) - (n * n / 2.0 - 2 * m * m + n)) < 1e-9);
    }
  }
  CHECK(qfi_generator(dicke_state(4, 0), x) == doctest::Approx(12.0));
  CHECK(qfi_generator(twin_fock_state(4), Eigen::Vector3d(0.6, 0.8, 0)) == doctest::Approx(12.0));
  CHECK_THROWS_AS(twin_fock_state(5), std::invalid_argument);
  CHECK_THROWS_AS(dicke_state(4, 0.5), std::invalid_argument);
}

TEST_CASE("reference state builders") {
  const auto css = reference_state(ReferenceKind::CoherentSpin, 3);
  CHECK(std::abs(css.amplitudes(0) - Complex(1.0)) < 1e-15);
  const auto g = reference_state(ReferenceKind::Ghz, 2);
  CHECK(std::abs(g.amplitudes(0) - Complex(M_SQRT1_2)) < 1e-15);
  CHECK(std::abs(g.amplitudes(3) - Complex(M_SQRT1_2)) < 1e-15);
  CHECK(std::abs(g.amplitudes(1)) == 0.0);
  ReferenceParams p;
  p.m = 1.0;
  CHECK_NOTHROW(reference_state(ReferenceKind::Dicke, 4, p).validate());
}

TEST_CASE("generator QFI equals the pure-state formula") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    CollectiveSpinState s{3, StateVector(8)};
    for (int i = 0; i < 8; ++i) s.amplitudes(i) = Complex(rng.normal(0, 1), rng.normal(0, 1));
    s.amplitudes.normalize();
    const Eigen::Vector3d n = random_direction(rng);
    const StateVector d = Complex(0, -1) * apply_collective(s, n);
    CHECK(std::abs(qfi_generator(s, n) - qfi_pure(s.amplitudes, d)) < 1e-10);
  }
}

TEST_CASE("separable and Heisenberg bounds") {
  Rng rng(22);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + trial % 6;
    const auto s = random_product_state(n, rng);
    for (int k = 0; k < 20; ++k) {
      const double q = qfi_generator(s, random_direction(rng));
      CHECK(q <= n + 1e-9);
      CHECK(q <= n * n + 1e-9);
    }
  }
}

TEST_CASE("classical Fisher information never exceeds the QFI") {
  Rng rng(23);
  CollectiveSpinState s{2, StateVector(4)};
  for (int i = 0; i < 4; ++i) s.amplitudes(i) = Complex(rng.normal(0, 1), rng.normal(0, 1));
  s.amplitudes.normalize();
  const Eigen::Vector3d n = random_direction(rng);
  const double q = qfi_generator(s, n);
  double best = 0.0;
  for (int b = 0; b < 50; ++b) {
    const Eigen::MatrixXcd u = random_unitary(4, rng);
    ParamDistribution d;
    d.probabilities = [&](double th) {
      const StateVector psi = u * encode_phase(s, n, th).amplitudes;
      std::vector<double> p(4);
      for (int i = 0; i < 4; ++i) p[i] = std::norm(psi(i));
      return p;
    };
    const double f = fisher_information(d, 0.37);
    CHECK(f <= q + 1e-6);
    best = std::max(best, f);
  }
  CHECK(best > 0.0);
}

TEST_CASE("phase encoding matches the generator") {
  const auto s = ghz_state(3);
  const auto rotated = encode_phase(s, Eigen::Vector3d::UnitZ(), 0.4);
  // GHZ components pick up exp(-+i 3 theta / 2).
  CHECK(std::abs(rotated.amplitudes(0) - std::polar(M_SQRT1_2, -0.6)) < 1e-14);
  CHECK(std::abs(rotated.amplitudes(7) - std::polar(M_SQRT1_2, 0.6)) < 1e-14);
}

TEST_CASE("entanglement witness") {
  CHECK(entanglement_witness(3.02, 2));
  CHECK_FALSE(entanglement_witness(4.0, 4));
  for (int n = 2; n <= 6; ++n) CHECK(entanglement_witness(n * n, n));
}

TEST_CASE("visibility and dB") {
  const auto q = qfi_from_visibility(0.869, 2);
  CHECK(q.qfi == doctest::Approx(3.020644).epsilon(1e-6));
  CHECK(std::abs(q.db_over_sql - 1.79) < 0.01);
  for (int n = 1; n <= 5; ++n) {
    CHECK(qfi_from_visibility(1.0, n).qfi == doctest::Approx(n * n));
    CHECK(qfi_from_visibility(1.0, n).db_over_sql == doctest::Approx(10 * std::log10(n)));
  }
  CHECK(visibility_from_db(2.77, 3) == doctest::Approx(0.794).epsilon(0.001));
  CHECK(visibility_from_db(qfi_from_visibility(0.65, 4).db_over_sql, 4) == doctest::Approx(0.65));
  CHECK_THROWS_AS(qfi_from_visibility(1.2, 2), std::invalid_argument);
  CHECK_THROWS_AS(qfi_from_visibility(-0.1, 2), std::invalid_argument);
}

TEST_CASE("scaling law") {
  CHECK(scaling_prediction(1) == doctest::Approx(0.8281));
  CHECK(scaling_prediction(2) == doctest::Approx(3.05270784));
  const ScalingScan s = scan_scaling(100);
  CHECK(s.unimodal);
  CHECK(s.argmax_n == 24);
  CHECK(s.plateau == std::vector<int>{24, 25});
  CHECK(s.max_qfi == doctest::Approx(72.9427).epsilon(1e-5));
  CHECK(scan_scaling(30).argmax_n == s.argmax_n);
}

TEST_CASE("squeezed states beat the separable bound by 1/xi^2") {
  for (int n : {4, 6, 8}) {
    for (double mu : {0.05, 0.1, 0.2, 0.3}) {
      const auto s = one_axis_twisted_state(n, mu);
      const SqueezingAnalysis a = ramsey_squeezing(s);
      CHECK(qfi_generator(s, a.rotation_direction) >= n / a.xi_r2 - 1e-9);
    }
    CHECK(ramsey_squeezing(one_axis_twisted_state(n, 0.1)).xi_r2 < 1.0);
    CHECK(ramsey_squeezing(coherent_spin_state(n, kPi / 2, 0)).xi_r2 == doctest::Approx(1.0));
  }
}

}  // TEST_SUITE
