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
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nvmetro/stats.hpp"

using namespace nvmetro;

TEST_SUITE("stats-mc") {

TEST_CASE("shot sampling") {
  Rng rng(1);
  CHECK(sample_shots(0.0, 500, rng) == 0);
  CHECK(sample_shots(1.0, 200, rng) == 200);
  const double frac = static_cast<double>(sample_shots(0.5, 1000000, rng)) / 1e6;
  CHECK(std::abs(frac - 0.5) < 0.002);
  Rng a(9), b(9);
  CHECK(sample_shots(0.3, 1000, a) == sample_shots(0.3, 1000, b));
  CHECK_THROWS_AS(sample_shots(1.5, 10, rng), std::invalid_argument);
}

TEST_CASE("estimator inverts the fringe") {
  FringeModel m;
  m.visibility = 0.8;
  // mid-fringe: mu = 1/2 maps back to the working point
  CHECK(estimate_phase(100, 200, m).phi == doctest::Approx(m.working_point()));
  CHECK(m.working_point() == doctest::Approx(0.0));

  FringeModel peak;
  peak.offset_phase = 0.0;
  const double mu = (1.0 - std::cos(2.0 * kPi / 60.0)) / 2.0;
  const std::uint64_t nu = 1000000000000ULL;
  const auto k = static_cast<std::uint64_t>(std::llround(mu * static_cast<double>(nu)));
  CHECK(estimate_phase(k, nu, peak).phi == doctest::Approx(kPi / 60).epsilon(1e-6));
}

TEST_CASE("out-of-range populations are clamped and flagged") {
  FringeModel m;
  m.visibility = 0.5;
  const PhaseEstimate e = estimate_phase(0, 100, m);
  CHECK(e.clamped);
  CHECK(e.phi == doctest::Approx(-kPi / 4));
  CHECK_FALSE(estimate_phase(50, 100, m).clamped);
}

TEST_CASE("zero slope is an error") {
  FringeModel m;
  m.visibility = 0.0;
  CHECK_THROWS_AS(estimate_phase(10, 20, m), ZeroSlopeError);
  MeasurementCampaign c;
  c.model.visibility = 0.0;
  CHECK_THROWS_AS(run_campaign(c), ZeroSlopeError);
}

TEST_CASE("campaign variance follows the moment method") {
  MeasurementCampaign c;
  c.model.visibility = 0.869;
  c.model.n_spins = 2;
  c.nu = 200;
  c.n_estimates = 10000;
  c.seed = 31;
  const CampaignResult r = run_campaign(c);
  CHECK(r.variance == doctest::Approx(1.0 / (200 * 0.869 * 0.869 * 4)).epsilon(0.10));
  // unbiased within three standard errors
  CHECK(std::abs(r.mean - c.true_phase) < 3.0 * std::sqrt(r.variance / 10000));
  const auto total = std::accumulate(r.counts.begin(), r.counts.end(), std::uint64_t{0});
  CHECK(total + r.underflow + r.overflow == 10000);
  CHECK(r.counts.size() == 200);
}

TEST_CASE("large nu concentrates at the true phase") {
  MeasurementCampaign c;
  c.nu = 1000000;
  c.n_estimates = 200;
  const CampaignResult r = run_campaign(c);
  const double sigma = std::sqrt(predicted_variance(c.model, c.nu));
  for (double x : r.estimates) CHECK(std::abs(x - c.true_phase) < 5.0 * sigma);
  CHECK(std::abs(r.mean - c.true_phase) < 3.0 * sigma);
}

TEST_CASE("campaigns are reproducible and thread-count independent") {
  MeasurementCampaign c;
  c.n_estimates = 3000;
  c.seed = 77;
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
#endif
  const auto a = run_campaign(c);
#ifdef _OPENMP
  omp_set_num_threads(3);
#endif
  const auto b = run_campaign(c);
#ifdef _OPENMP
  omp_set_num_threads(saved);
#endif
  CHECK(a.estimates == b.estimates);
  CHECK(a.variance == b.variance);
  c.seed = 78;
  CHECK(run_campaign(c).estimates != a.estimates);
}

TEST_CASE("normalized variance curves") {
  MeasurementCampaign c;
  c.n_estimates = 4000;
  c.model.visibility = 1.0;
  const VarianceCurve hl = variance_vs_nu(c, {50, 200, 1000});
  for (double v : hl.normalized) CHECK(v == doctest::Approx(0.5).epsilon(0.1));
  CHECK(hl.expected == doctest::Approx(0.5));

  c.model.visibility = 0.869;
  const VarianceCurve two = variance_vs_nu(c, {50, 100, 200, 500, 1000});
  CHECK(two.expected == doctest::Approx(0.662).epsilon(0.001));
  for (std::size_t i = 0; i < two.nu.size(); ++i) {
    CHECK(std::abs(two.normalized[i] - two.expected) < 4.0 * two.normalized_err[i]);
  }
  CHECK(flatness_chi2(two) < 4.0);

  c.model.visibility = 0.794;
  c.model.n_spins = 3;
  c.true_phase = kPi / 90;
  const VarianceCurve three = variance_vs_nu(c, {100, 500});
  CHECK(three.expected == doctest::Approx(0.529).epsilon(0.002));
  for (double v : three.normalized) CHECK(v == doctest::Approx(0.529).epsilon(0.1));
}

TEST_CASE("magnetic jitter is linear") {
  CHECK(magnetic_phase_jitter(0.01) == doctest::Approx(0.015));
  CHECK(magnetic_phase_jitter(0.0) == 0.0);
  CHECK(magnetic_phase_jitter(0.02) == doctest::Approx(0.030));
  CHECK(magnetic_phase_jitter(0.02, 2.0) == doctest::Approx(0.04));
}

TEST_CASE("CSV export") {
  MeasurementCampaign c;
  c.n_estimates = 100;
  c.histogram_bins = 10;
  std::ostringstream h;
  write_histogram_csv(h, run_campaign(c));
  CHECK(h.str().rfind("bin_low, bin_high, count\n", 0) == 0);
  std::ostringstream v;
  write_variance_csv(v, variance_vs_nu(c, {10, 20}));
  CHECK(v.str().rfind("nu, variance, normalized_variance", 0) == 0);
}

TEST_CASE("campaign validation") {
  MeasurementCampaign c;
  c.nu = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.nu = 10;
  c.model.visibility = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

}  // TEST_SUITE
