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

#include "nvmetro/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace nvmetro {

void FringeModel::validate() const {
  if (!(visibility >= 0.0 && visibility <= 1.0)) {
    throw std::invalid_argument("fringe model: visibility outside [0,1]");
  }
  if (n_spins < 1) throw std::invalid_argument("fringe model: n_spins must be >= 1");
  if (!std::isfinite(offset_phase)) throw std::invalid_argument("fringe model: offset not finite");
}

double FringeModel::probability(double phi) const {
  return 0.5 * (1.0 - visibility * std::cos(n_spins * phi + offset_phase));
}

double FringeModel::slope(double phi) const {
  return 0.5 * visibility * n_spins * std::sin(n_spins * phi + offset_phase);
}

std::uint64_t sample_shots(double p, std::uint64_t nu, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_shots: p outside [0,1]");
  return rng.binomial(nu, p);
}

PhaseEstimate estimate_phase(std::uint64_t successes, std::uint64_t nu, const FringeModel& model) {
  model.validate();
  if (nu == 0 || successes > nu) throw std::invalid_argument("estimate_phase: bad counts");
  if (std::abs(model.slope(model.working_point())) < 1e-12) {
    throw ZeroSlopeError("estimate_phase: fringe slope vanishes at the working point");
  }
  const double mu = static_cast<double>(successes) / static_cast<double>(nu);
  const double c = (1.0 - 2.0 * mu) / model.visibility;
  PhaseEstimate out;
  out.clamped = c > 1.0 || c < -1.0;
  out.phi = (std::acos(std::clamp(c, -1.0, 1.0)) - model.offset_phase) / model.n_spins;
  return out;
}

void MeasurementCampaign::validate() const {
  model.validate();
  if (nu == 0) throw std::invalid_argument("campaign: nu must be >= 1");
  if (n_estimates < 2) throw std::invalid_argument("campaign: need at least 2 estimates");
  if (histogram_bins < 1) throw std::invalid_argument("campaign: histogram_bins must be >= 1");
  if (!(histogram_sigmas > 0.0)) throw std::invalid_argument("campaign: histogram_sigmas must be > 0");
  const double p = model.probability(true_phase);
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("campaign: probability outside [0,1]");
}

double predicted_variance(const FringeModel& model, std::uint64_t nu) {
  const double vn = model.visibility * model.n_spins;
  if (vn == 0.0) throw ZeroSlopeError("predicted_variance: zero visibility");
  return 1.0 / (static_cast<double>(nu) * vn * vn);
}

CampaignResult run_campaign(const MeasurementCampaign& c) {
  c.validate();
  // Fails early on a degenerate model.
  estimate_phase(0, c.nu, c.model);

  const Rng root(c.seed);
  const double p = c.model.probability(c.true_phase);
  CampaignResult r;
  r.estimates.assign(c.n_estimates, 0.0);
  std::vector<unsigned char> clamped(c.n_estimates, 0);
  const auto count = static_cast<long long>(c.n_estimates);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < count; ++i) {
    Rng rng = root.child(static_cast<std::uint64_t>(i));
    const PhaseEstimate e = estimate_phase(sample_shots(p, c.nu, rng), c.nu, c.model);
    r.estimates[static_cast<std::size_t>(i)] = e.phi;
    clamped[static_cast<std::size_t>(i)] = e.clamped ? 1 : 0;
  }

  for (std::size_t i = 0; i < r.estimates.size(); ++i) {
    r.mean += r.estimates[i];
    r.clamped += clamped[i];
  }
  r.mean /= static_cast<double>(r.estimates.size());
  for (double x : r.estimates) r.variance += (x - r.mean) * (x - r.mean);
  r.variance /= static_cast<double>(r.estimates.size() - 1);
  r.predicted_variance = predicted_variance(c.model, c.nu);

  const double half = c.histogram_sigmas * std::sqrt(r.predicted_variance);
  const double lo = c.true_phase - half;
  const double width = 2.0 * half / c.histogram_bins;
  for (int b = 0; b <= c.histogram_bins; ++b) r.bin_edges.push_back(lo + b * width);
  r.counts.assign(static_cast<std::size_t>(c.histogram_bins), 0);
  for (double x : r.estimates) {
    const double f = std::floor((x - lo) / width);
    if (f < 0.0) {
      ++r.underflow;
    } else if (f >= c.histogram_bins) {
      ++r.overflow;
    } else {
      ++r.counts[static_cast<std::size_t>(f)];
    }
  }
  return r;
}

VarianceCurve variance_vs_nu(const MeasurementCampaign& base,
                             const std::vector<std::uint64_t>& nu_values) {
  if (nu_values.empty()) throw std::invalid_argument("variance_vs_nu: empty nu list");
  const Rng root(base.seed);
  VarianceCurve curve;
  const double vn = base.model.visibility * base.model.n_spins;
  curve.expected = static_cast<double>(base.model.n_spins) / (vn * vn);
  for (std::size_t i = 0; i < nu_values.size(); ++i) {
    MeasurementCampaign c = base;
    c.nu = nu_values[i];
    c.seed = root.child(i).seed();
    const CampaignResult r = run_campaign(c);
    const double sql = 1.0 / (static_cast<double>(base.model.n_spins) * static_cast<double>(c.nu));
    const double normalized = r.variance / sql;
    curve.nu.push_back(c.nu);
    curve.variance.push_back(r.variance);
    curve.normalized.push_back(normalized);
    curve.normalized_err.push_back(normalized *
                                   std::sqrt(2.0 / static_cast<double>(c.n_estimates - 1)));
  }
  return curve;
}

double flatness_chi2(const VarianceCurve& curve) {
  const std::size_t n = curve.normalized.size();
  if (n < 2) return 0.0;
  double sw = 0.0;
  double swx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 1.0 / (curve.normalized_err[i] * curve.normalized_err[i]);
    sw += w;
    swx += w * curve.normalized[i];
  }
  const double mean = swx / sw;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (curve.normalized[i] - mean) / curve.normalized_err[i];
    chi2 += z * z;
  }
  return chi2 / static_cast<double>(n - 1);
}

double magnetic_phase_jitter(double delta_b_gauss, double k_rad_per_gauss) {
  return k_rad_per_gauss * delta_b_gauss;
}

void write_histogram_csv(std::ostream& os, const CampaignResult& r) {
  os << std::setprecision(17);
  os << "bin_low, bin_high, count\n";
  for (std::size_t b = 0; b < r.counts.size(); ++b) {
    os << r.bin_edges[b] << ", " << r.bin_edges[b + 1] << ", " << r.counts[b] << '\n';
  }
}

void write_variance_csv(std::ostream& os, const VarianceCurve& curve) {
  os << std::setprecision(17);
  os << "nu, variance, normalized_variance, normalized_stderr, expected\n";
  for (std::size_t i = 0; i < curve.nu.size(); ++i) {
    os << curve.nu[i] << ", " << curve.variance[i] << ", " << curve.normalized[i] << ", "
       << curve.normalized_err[i] << ", " << curve.expected << '\n';
  }
}

}  // namespace nvmetro
