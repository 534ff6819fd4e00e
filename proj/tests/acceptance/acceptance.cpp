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

// One line per acceptance criterion: PASS or FAIL, wall time and the
// measured quantities. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nvmetro/budget.hpp"
#include "nvmetro/commands.hpp"
#include "nvmetro/interferometer.hpp"
#include "nvmetro/metrology.hpp"
#include "nvmetro/spin_model.hpp"
#include "nvmetro/stats.hpp"

using namespace nvmetro;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <typename T>
  Detail& operator<<(const T& v) {
    os_ << v;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path p = fs::temp_directory_path() / "nvmetro_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string config(const std::string& name) {
  return std::string(NVMETRO_SOURCE_DIR) + "/configs/" + name;
}

double read_key(const fs::path& report, const std::string& key) {
  std::ifstream in(report);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(key + " = ", 0) == 0) return std::stod(line.substr(key.size() + 3));
  }
  throw std::runtime_error("no '" + key + "' in " + report.string());
}

Outcome qfi_oracles() {
  const Eigen::Vector3d x = Eigen::Vector3d::UnitX(), z = Eigen::Vector3d::UnitZ();
  double worst = 0.0;
  for (int n = 1; n <= 8; ++n) {
    worst = std::max(worst, std::abs(qfi_generator(coherent_spin_state(n, 0, 0), x) - n));
    worst = std::max(worst, std::abs(qfi_generator(ghz_state(n), z) - n * n));
    for (int k = 0; k <= n; ++k) {
      const double m = n / 2.0 - k;
      worst = std::max(worst, std::abs(qfi_generator(dicke_state(n, m), x) -
                                       (n * n / 2.0 - 2 * m * m + n)));
    }
    if (n % 2 == 0) {
      worst = std::max(worst, std::abs(qfi_generator(twin_fock_state(n), x) - (n * n / 2.0 + n)));
    }
  }
  return {worst <= 1e-9, (Detail() << "max deviation " << worst).str()};
}

Outcome separability() {
  Rng rng(2);
  double worst = -1e300;
  for (int s = 0; s < 500; ++s) {
    const int n = 1 + s % 6;
    const CollectiveSpinState state = random_product_state(n, rng);
    for (int d = 0; d < 100; ++d) {
      worst = std::max(worst, qfi_generator(state, random_direction(rng)) - n);
    }
  }
  return {worst <= 1e-9, (Detail() << "max QFI - N over 50000 draws " << worst).str()};
}

Outcome db_reproduction() {
  const double db = qfi_from_visibility(0.869, 2).db_over_sql;
  const double vis3 = visibility_from_db(2.77, 3);
  return {std::abs(db - 1.79) <= 0.01 && std::abs(vis3 - 0.794) <= 0.001,
          (Detail() << "2 spins " << db << " dB; 3 spins at 2.77 dB -> visibility " << vis3).str()};
}

// Shared between the GRAPE and circuit-fidelity criteria.
fs::path grape_dir() { return work_dir() / "grape"; }

Outcome cphase_grape() {
  CommandOptions o;
  o.config_path = config("optimize_cphase.cfg");
  o.out_dir = grape_dir().string();
  std::ostringstream log;
  o.log = &log;
  const int code = run_command("optimize-pulse", o);
  if (code != kExitOk) return {false, (Detail() << "optimize-pulse exit code " << code).str()};
  const fs::path report = grape_dir() / "report.txt";
  const double robust = read_key(report, "robust_fidelity");
  const double nominal = read_key(report, "nominal_fidelity");
  const double iters = read_key(report, "iterations");
  return {robust >= 0.995, (Detail() << "robust " << robust << ", nominal " << nominal << ", "
                                     << iters << " iterations")
                               .str()};
}

Outcome interference_fidelity() {
  std::ifstream in(grape_dir() / "waveform.txt");
  if (!in) return {false, "no optimized waveform"};
  const PulseSequence pulse = read_waveform(in);
  NoiseModel noise;
  noise.sigma_mag_khz = 35.0;
  noise.sigma_amp = 0.01;
  Rng rng(5);
  const auto setup = InterferometerSetup::defaults();
  const auto res = circuit_fidelity_under_noise(default_fidelity_phases(), pulse, noise, rng, setup,
                                                nuclear_projectors());
  return {std::abs(res.mean - 0.995) <= 0.004 && res.max_sample <= 1.0 + 1e-10,
          (Detail() << "mean " << res.mean << " over " << res.per_phase.size() << " phases").str()};
}

Outcome ideal_fringes() {
  const auto setup = InterferometerSetup::defaults();
  const auto phases = linspace(-kPi, kPi, 65);
  Outcome out;
  Detail d;
  for (int n = 1; n <= 3; ++n) {
    const CircuitBuilder b = [&](double phi) {
      if (n == 1) return build_one_spin_circuit(phi, setup);
      if (n == 2) return build_two_spin_circuit(phi, setup);
      return build_three_spin_circuit(phi, setup);
    };
    const FringeFit fit = extract_visibility(fringe(b, phases, setup));
    const bool ok = std::abs(fit.visibility - 1.0) <= 1e-8 &&
                    std::abs(fit.frequency - n) <= std::max(3.0 * fit.frequency_err, 1e-8);
    out.pass = out.pass && ok;
    d << (n > 1 ? "; " : "") << "N=" << n << " vis " << fit.visibility << " freq " << fit.frequency;
  }
  out.detail = d.str();
  return out;
}

Outcome monte_carlo_variance() {
  MeasurementCampaign c;
  c.model.visibility = 0.869;
  c.model.n_spins = 2;
  c.nu = 200;
  c.n_estimates = 10000;
  c.seed = 2024;
  const CampaignResult r = run_campaign(c);
  const double norm2 = r.variance * c.model.n_spins * static_cast<double>(c.nu);
  const VarianceCurve sweep = variance_vs_nu(c, {50, 100, 200, 500, 1000});
  bool flat = true;
  for (std::size_t i = 0; i < sweep.nu.size(); ++i) {
    flat = flat && std::abs(sweep.normalized[i] - sweep.expected) <= 3.0 * sweep.normalized_err[i];
  }

  MeasurementCampaign c3 = c;
  c3.model.visibility = 0.794;
  c3.model.n_spins = 3;
  c3.true_phase = kPi / 90;
  c3.seed = 2025;
  const double norm3 = run_campaign(c3).variance * 3 * static_cast<double>(c3.nu);

  return {std::abs(norm2 / 0.662 - 1.0) <= 0.1 && std::abs(norm3 / 0.529 - 1.0) <= 0.1 && flat,
          (Detail() << "2 spins " << norm2 << " (" << 10 * std::log10(norm2) << " dB), 3 spins " << norm3
                    << ", sweep chi2/dof " << flatness_chi2(sweep) << (flat ? "" : " not flat"))
              .str()};
}

Outcome cramer_rao() {
  const double f = qfi_from_visibility(0.869, 2).qfi;
  const double sigma = std::sqrt(cramer_rao_bound(f, 1000));
  return {std::abs(sigma / 0.0182 - 1.0) <= 0.05, (Detail() << "sigma " << sigma).str()};
}

Outcome budget_formulas() {
  const double pn = nuclear_polarization_bound(0.9774);
  const double cs = chopped_survival(0.9837, 0.9894);
  const auto s1 = survival_probability_t1(0.9218, 0.90485, 0.90845);
  const auto s2 = survival_probability_t1(0.9218, 0.8978, 0.90455);
  const bool ok = std::abs(pn - 0.98857) <= 1e-5 && std::abs(cs - 0.99424) <= 1e-5 &&
                  std::abs(s1.probability - 0.985) <= 0.002 && std::abs(s1.error - 0.002) <= 0.0005 &&
                  std::abs(s2.probability - 0.979) <= 0.003 && std::abs(s2.error - 0.003) <= 0.0005;
  return {ok, (Detail() << "P_n " << pn << ", chopped " << cs << ", T1 " << s1.probability << " +- "
                        << s1.error << " and " << s2.probability << " +- " << s2.error)
                  .str()};
}

Outcome spin_model() {
  SpinSystem sys;
  const ComplexMatrix h = full_hamiltonian(sys);
  const auto e = [&](int ms) { return h(full_index(ms, 1, -1), full_index(ms, 1, -1)).real(); };
  const double f_minus = std::abs(e(-1) - e(0)), f_plus = std::abs(e(1) - e(0));
  double worst_gap = 0.0;
  for (auto pair : {ElectronPair::ZeroPlusOne, ElectronPair::ZeroMinusOne}) {
    sys.electron_levels = pair;
    const ComplexMatrix full = full_hamiltonian(sys);
    const auto [reg, hr] = reduced_hamiltonian(sys);
    for (int i = 0; i < ReducedRegister::kDim; ++i) {
      for (int j = 0; j < ReducedRegister::kDim; ++j) {
        const int fi = reg.full_index_of(i), fj = reg.full_index_of(j);
        const double gap = (hr(i, i) - hr(j, j)).real() - (full(fi, fi) - full(fj, fj)).real();
        worst_gap = std::max(worst_gap, std::abs(gap));
      }
    }
  }
  const bool ok = std::abs(f_minus / 19700.0 - 1) <= 0.01 && std::abs(f_plus / 25500.0 - 1) <= 0.01 &&
                  worst_gap * 1e6 <= 1.0;
  return {ok, (Detail() << "0<->-1 " << f_minus << " MHz, 0<->+1 " << f_plus
                        << " MHz, reduced-vs-full gap error " << worst_gap * 1e6 << " Hz")
                  .str()};
}

Outcome scaling_scan() {
  const ScalingScan full = scan_scaling(100);
  const ScalingScan shorter = scan_scaling(60);
  const bool stable = full.argmax_n == shorter.argmax_n;
  Detail d;
  d << "argmax N = " << full.argmax_n << " (plateau";
  for (int n : full.plateau) d << ' ' << n;
  d << "), max QFI " << full.max_qfi << (full.unimodal ? ", unimodal" : ", not unimodal")
    << "; reference maximum 67 differs by " << full.max_qfi - 67.0;
  return {stable && full.unimodal, d.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"QFI closed forms", 1, qfi_oracles},
      {"separable-state bound", 30, separability},
      {"dB over SQL", 1, db_reproduction},
      {"robust CPhase optimisation", 600, cphase_grape},
      {"interferometer fidelity under noise", 60, interference_fidelity},
      {"ideal fringes", 10, ideal_fringes},
      {"Monte-Carlo phase variance", 60, monte_carlo_variance},
      {"Cramer-Rao closure", 1, cramer_rao},
      {"budget formulas", 1, budget_formulas},
      {"spin-model sanity", 1, spin_model},
      {"scaling scan", 1, scaling_scan},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dt > c.budget_s) {
      o.pass = false;
      o.detail += " [over the " + std::to_string(static_cast<int>(c.budget_s)) + " s budget]";
    }
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, c.name, dt,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
