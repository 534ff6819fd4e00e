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

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "nvmetro/numerics.hpp"

namespace nvmetro {

/// mu(phi) = (1 - V cos(N phi + psi)) / 2.
///
/// The estimator uses the monotonic branch N phi + psi in [0, pi]; its
/// midpoint is the working point, where the slope is largest. The default
/// psi = pi/2 puts the working point at phi = 0.
struct FringeModel {
  double visibility = 1.0;
  int n_spins = 2;
  double offset_phase = kPi / 2.0;

  void validate() const;
  double probability(double phi) const;
  double slope(double phi) const;
  double working_point() const { return (kPi / 2.0 - offset_phase) / n_spins; }
};

class ZeroSlopeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

std::uint64_t sample_shots(double p, std::uint64_t nu, Rng& rng);

struct PhaseEstimate {
  double phi = 0.0;
  bool clamped = false;  // mu outside the model's range, pinned to a branch edge
};

/// Inverts the fringe on its monotonic branch. Throws ZeroSlopeError when
/// the slope at the working point vanishes.
PhaseEstimate estimate_phase(std::uint64_t successes, std::uint64_t nu, const FringeModel& model);

struct MeasurementCampaign {
  double true_phase = kPi / 60.0;
  std::uint64_t nu = 200;
  std::uint64_t n_estimates = 10000;
  FringeModel model;
  std::uint64_t seed = 1;
  int histogram_bins = 200;
  double histogram_sigmas = 4.0;  // half width in predicted standard deviations

  void validate() const;
};

/// Moment-method variance 1 / (nu V^2 N^2).
double predicted_variance(const FringeModel& model, std::uint64_t nu);

struct CampaignResult {
  std::vector<double> estimates;
  std::uint64_t clamped = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  double predicted_variance = 0.0;
  // Histogram over true_phase +- histogram_sigmas * predicted sigma.
  std::vector<double> bin_edges;
  std::vector<std::uint64_t> counts;
  std::uint64_t underflow = 0;
  std::uint64_t overflow = 0;
};

/// Estimate i draws from child stream i of the campaign seed, so results do
/// not depend on the thread count.
CampaignResult run_campaign(const MeasurementCampaign& c);

struct VarianceCurve {
  std::vector<std::uint64_t> nu;
  std::vector<double> variance;
  std::vector<double> normalized;      // variance / (1 / (N nu))
  std::vector<double> normalized_err;  // sampling error of `normalized`
  double expected = 0.0;               // 1 / (V^2 N)
};

/// Campaign at each nu; the run for nu_values[i] uses child stream i of the
/// template's seed.
VarianceCurve variance_vs_nu(const MeasurementCampaign& base, const std::vector<std::uint64_t>& nu_values);

/// Chi-square per degree of freedom of the normalized curve about its
/// weighted mean; near 1 for a flat curve.
double flatness_chi2(const VarianceCurve& curve);

/// k dB, with k in rad per gauss.
double magnetic_phase_jitter(double delta_b_gauss, double k_rad_per_gauss = 1.5);

void write_histogram_csv(std::ostream& os, const CampaignResult& r);
void write_variance_csv(std::ostream& os, const VarianceCurve& curve);

}  // namespace nvmetro
