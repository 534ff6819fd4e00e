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

#include "nvmetro/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nvmetro/budget.hpp"
#include "nvmetro/config.hpp"
#include "nvmetro/grape.hpp"
#include "nvmetro/interferometer.hpp"
#include "nvmetro/manifest.hpp"
#include "nvmetro/metrology.hpp"
#include "nvmetro/stats.hpp"

namespace nvmetro {

namespace fs = std::filesystem;

namespace {

std::ostream& out(const CommandOptions& opts) { return opts.log ? *opts.log : std::cout; }

// Shared per-command state: config, seed, output directory and manifest.
class Run {
 public:
  Run(const std::string& command, const CommandOptions& opts, bool config_required)
      : opts_(opts), start_(std::chrono::steady_clock::now()) {
    if (!opts.config_path.empty()) {
      cfg_ = Config::load(opts.config_path);
      config_dir_ = fs::path(opts.config_path).parent_path();
    } else if (config_required) {
      throw ConfigError(command + ": --config is required");
    } else {
      std::istringstream empty;
      cfg_ = Config::parse(empty, "<defaults>");
    }
    if (opts.seed) cfg_.set("run", "seed", std::to_string(*opts.seed));
    manifest_.command = command;
    manifest_.config_source = opts.config_path.empty() ? "<defaults>" : opts.config_path;
    manifest_.rng_algorithm = Rng::algorithm();
    manifest_.tool_version = tool_version();
#ifdef _OPENMP
    if (opts.threads > 0) omp_set_num_threads(opts.threads);
    manifest_.threads = omp_get_max_threads();
#else
    manifest_.threads = 1;
#endif
  }

  Config& cfg() { return cfg_; }

  std::uint64_t seed() {
    const std::string text = cfg_.get_string("run", "seed", "1");
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(text, &pos);
      if (pos != text.size() || text.front() == '-') throw std::invalid_argument(text);
      manifest_.seed = v;
      return v;
    } catch (const std::exception&) {
      throw ConfigError(cfg_.where("run", "seed") + ": [run] seed: expected an unsigned integer, got '" +
                        text + "'");
    }
  }

  // Paths in the config are relative to the config file.
  fs::path resolve_path(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : config_dir_ / path;
  }

  // Call after every key has been read and before heavy work starts.
  void finish_config() {
    cfg_.check_all_used();
    dir_ = opts_.out_dir;
    fs::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream os(dir_ / name);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    os << std::setprecision(17);
    files_.push_back(name);
    return os;
  }

  void write_manifest() {
    for (const auto& f : files_) manifest_.add_output(dir_, f);
    manifest_.resolved_config = cfg_.resolved();
    manifest_.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest_.write(dir_);
    out(opts_) << "wrote " << (dir_ / "manifest.txt").string() << '\n';
  }

 private:
  const CommandOptions& opts_;
  Config cfg_;
  fs::path config_dir_;
  fs::path dir_;
  RunManifest manifest_;
  std::vector<std::string> files_;
  std::chrono::steady_clock::time_point start_;
};

SpinSystem load_system(const Config& cfg) {
  SpinSystem s;
  s.zero_field_mhz = cfg.get_double("system", "zero_field_mhz", s.zero_field_mhz);
  s.quadrupole_khz = cfg.get_double("system", "quadrupole_khz", s.quadrupole_khz);
  s.field_gauss = cfg.get_double("system", "field_gauss", s.field_gauss);
  s.gamma_e_mhz_per_g = cfg.get_double("system", "gamma_e_mhz_per_g", s.gamma_e_mhz_per_g);
  s.gamma_n_khz_per_g = cfg.get_double("system", "gamma_n_khz_per_g", s.gamma_n_khz_per_g);
  s.gamma_c_khz_per_g = cfg.get_double("system", "gamma_c_khz_per_g", s.gamma_c_khz_per_g);
  s.a_par_khz = cfg.get_double("system", "a_par_khz", s.a_par_khz);
  s.a_zz_khz = cfg.get_double("system", "a_zz_khz", s.a_zz_khz);
  const std::string pair = cfg.get_string("system", "electron_levels", to_string(s.electron_levels));
  try {
    s.electron_levels = parse_electron_pair(pair);
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.source() + ": [system]: " + e.what());
  }
  return s;
}

NoiseModel load_noise(const Config& cfg) {
  NoiseModel n;
  n.sigma_mag_khz = cfg.get_double("noise", "sigma_mag_khz", n.sigma_mag_khz);
  n.sigma_amp = cfg.get_double("noise", "sigma_amp", n.sigma_amp);
  const std::string sampling = cfg.get_string("noise", "sampling", "grid");
  if (sampling == "grid") {
    n.sampling = NoiseModel::Sampling::Grid;
  } else if (sampling == "monte_carlo") {
    n.sampling = NoiseModel::Sampling::MonteCarlo;
  } else {
    throw ConfigError(cfg.where("noise", "sampling") +
                      ": [noise] sampling must be 'grid' or 'monte_carlo', got '" + sampling + "'");
  }
  n.grid_nodes = static_cast<int>(cfg.get_int("noise", "grid_nodes", n.grid_nodes));
  n.n_samples = static_cast<int>(cfg.get_int("noise", "n_samples", n.n_samples));
  try {
    n.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.source() + ": [noise]: " + e.what());
  }
  return n;
}

GateTarget load_target(const Config& cfg) {
  const std::string kind = cfg.get_string("target", "kind");
  if (kind == "identity") return identity_target();
  if (kind == "cphase" || kind == "phase") {
    std::vector<int> flipped;
    if (kind == "phase" || cfg.has("target", "flipped")) {
      for (double x : cfg.get_doubles("target", "flipped")) {
        if (x != std::floor(x) || x < 0 || x >= ReducedRegister::kDim) {
          throw ConfigError(cfg.where("target", "flipped") +
                            ": [target] flipped: indices must be integers in [0, 8)");
        }
        flipped.push_back(static_cast<int>(x));
      }
      return diagonal_phase_target(flipped, cfg.get_string("target", "label", kind));
    }
    GateTarget t = default_cphase_target();
    t.label = cfg.get_string("target", "label", t.label);
    return t;
  }
  throw ConfigError(cfg.where("target", "kind") +
                    ": [target] kind must be identity, cphase or phase, got '" + kind + "'");
}

Spin config_spin(const Config& cfg, const std::string& section, const std::string& key,
                 Spin fallback) {
  const std::string v = cfg.get_string(section, key, std::string(to_string(fallback)));
  try {
    return parse_spin(v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.where(section, key) + ": [" + section + "] " + key + ": " + e.what());
  }
}

InterferometerSetup load_setup(const Config& cfg, const SpinSystem& sys) {
  InterferometerSetup s = InterferometerSetup::defaults(sys);
  s.cnot_control = config_spin(cfg, "circuit", "cnot_control", s.cnot_control);
  s.cnot_control_value = cfg.get_double("circuit", "cnot_control_value", s.cnot_control_value);
  s.readout = config_spin(cfg, "circuit", "readout", s.readout);
  s.readout_value = cfg.get_double("circuit", "readout_value", s.readout_value);
  return s;
}

ErrorBudgetTable load_budget(const Config& cfg) {
  ErrorBudgetTable t;
  t.n_spins = static_cast<int>(cfg.get_int("budget", "n_spins", 2));
  for (const auto& e : cfg.entries("rows")) {
    const auto parts = split_list(e.value);
    const std::string at = cfg.source() + ":" + std::to_string(e.line) + ": [rows] " + e.key;
    if (parts.size() < 2 || parts.size() > 3) {
      throw ConfigError(at + ": expected 'fidelity, power[, inferred]'");
    }
    BudgetEntry row;
    row.label = e.key;
    try {
      row.fidelity = parse_number(parts[0]);
      const double p = parse_number(parts[1]);
      if (p != std::floor(p) || p < 0) throw std::invalid_argument("power must be a non-negative integer");
      row.power = static_cast<int>(p);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(at + ": " + ex.what());
    }
    if (parts.size() == 3) {
      if (parts[2] != "inferred" && parts[2] != "measured") {
        throw ConfigError(at + ": third field must be 'inferred' or 'measured'");
      }
      row.inferred = parts[2] == "inferred";
    }
    if (!(row.fidelity >= 0.0 && row.fidelity <= 1.0)) {
      throw ConfigError(at + ": fidelity " + parts[0] + " outside [0,1]");
    }
    t.entries.push_back(row);
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(cfg.source() + ": " + ex.what());
  }
  return t;
}

void print_fidelity_line(std::ostream& os, const std::string& key, double v) {
  os << key << " = " << std::setprecision(17) << v << '\n';
}

}  // namespace

int cmd_optimize_pulse(const CommandOptions& opts) {
  Run run("optimize-pulse", opts, true);
  Config& cfg = run.cfg();
  const SpinSystem sys = load_system(cfg);
  const GateTarget target = load_target(cfg);
  const NoiseModel noise = load_noise(cfg);

  const int n_slices = static_cast<int>(cfg.get_int("pulse", "n_slices", 320));
  const double slice_ns = cfg.get_double("pulse", "slice_ns", 20.0);
  std::vector<Channel> channels;
  for (const auto& c : split_list(cfg.get_string("pulse", "channels", "f1_real, f1_imag, f2_real, f2_imag"))) {
    try {
      channels.push_back(parse_channel(c));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(cfg.where("pulse", "channels") + ": [pulse] channels: " + e.what());
    }
  }
  const double cap = cfg.get_double("pulse", "amplitude_cap_khz", 10000.0);
  const std::string initial = cfg.get_string("pulse", "initial", "random");
  double init_amp = 0.0;
  std::string init_file;
  if (initial == "random") {
    init_amp = cfg.get_double("pulse", "initial_amplitude_khz", 200.0);
  } else if (initial == "file") {
    init_file = cfg.get_string("pulse", "initial_file");
  } else if (initial != "zero") {
    throw ConfigError(cfg.where("pulse", "initial") +
                      ": [pulse] initial must be random, zero or file, got '" + initial + "'");
  }

  GrapeOptions go;
  go.max_iterations = static_cast<int>(cfg.get_int("grape", "max_iterations", go.max_iterations));
  go.target_fidelity = cfg.get_double("grape", "target_fidelity", go.target_fidelity);
  go.tolerance = cfg.get_double("grape", "tolerance", go.tolerance);
  go.patience = static_cast<int>(cfg.get_int("grape", "patience", go.patience));
  go.initial_step_khz = cfg.get_double("grape", "initial_step_khz", go.initial_step_khz);
  go.lbfgs_memory = static_cast<int>(cfg.get_int("grape", "lbfgs_memory", go.lbfgs_memory));
  go.finite_difference = cfg.get_bool("grape", "finite_difference", go.finite_difference);
  const double min_fidelity = cfg.get_double("grape", "min_fidelity", 0.0);
  const int map_points = static_cast<int>(cfg.get_int("map", "points", 13));
  const double map_range = cfg.get_double("map", "range_sigmas", 3.0);
  const std::uint64_t seed = run.seed();
  run.finish_config();

  const ReducedRegister reg = make_register(sys);
  const NuclearProjectors proj = nuclear_projectors();
  const Rng root(seed);
  Rng init_rng = root.child(0);
  Rng ensemble_rng = root.child(1);
  Rng eval_rng = root.child(2);

  PulseSequence start;
  if (initial == "random") {
    start = random_pulse(n_slices, slice_ns, channels, init_amp, init_rng);
  } else if (initial == "zero") {
    start = PulseSequence::zeros(n_slices, slice_ns, channels);
  } else {
    std::ifstream in(run.resolve_path(init_file));
    if (!in) throw ConfigError(cfg.where("pulse", "initial_file") + ": cannot open '" + init_file + "'");
    start = read_waveform(in);
    start.active = channels;
  }
  start.amplitude_cap_khz = cap;

  std::ostream& log = out(opts);
  go.progress = [&log](int it, double f) {
    if (it % 10 == 0) log << "iteration " << it << "  fidelity " << std::setprecision(8) << f << '\n';
  };
  const GrapeResult res = grape_optimize(start, target, noise, ensemble_rng, go, reg, proj);

  const double nominal = gate_fidelity(propagate(res.pulse, reg, proj, 0.0, 0.0), target);
  const double robust = robust_fidelity(res.pulse, target, noise, eval_rng, reg, proj);
  const auto axis = linspace(-map_range, map_range, map_points);
  const RealMatrix map = fidelity_map(res.pulse, target, noise, axis, axis, reg, proj);

  {
    auto os = run.open("waveform.txt");
    write_waveform(os, res.pulse);
  }
  {
    auto os = run.open("trace.csv");
    os << "iteration, fidelity\n";
    for (std::size_t i = 0; i < res.trace.size(); ++i) os << i << ", " << res.trace[i] << '\n';
  }
  {
    auto os = run.open("robustness_map.csv");
    os << "delta_khz, delta1, fidelity\n";
    for (int i = 0; i < map_points; ++i) {
      for (int j = 0; j < map_points; ++j) {
        os << axis[i] * noise.sigma_mag_khz << ", " << axis[j] * noise.sigma_amp << ", " << map(i, j)
           << '\n';
      }
    }
  }
  double peak = 0.0;
  for (const auto& ch : res.pulse.amplitudes_khz) {
    for (double a : ch) peak = std::max(peak, std::abs(a));
  }
  {
    auto os = run.open("report.txt");
    os << "target = " << target.label << '\n';
    os << "status = " << res.status << '\n';
    os << "iterations = " << res.iterations << '\n';
    os << "converged = " << (res.converged ? "true" : "false") << '\n';
    print_fidelity_line(os, "optimized_ensemble_fidelity", res.trace.empty() ? 0.0 : res.trace.back());
    print_fidelity_line(os, "nominal_fidelity", nominal);
    print_fidelity_line(os, "robust_fidelity", robust);
    print_fidelity_line(os, "duration_us", res.pulse.duration_us());
    print_fidelity_line(os, "peak_amplitude_khz", peak);
  }
  log << "nominal fidelity " << std::setprecision(6) << nominal << ", robust fidelity " << robust
      << " (" << res.status << ")\n";
  run.write_manifest();
  if (robust < min_fidelity) {
    throw NumericalFailure("robust fidelity " + format_number(robust) + " below required " +
                           format_number(min_fidelity));
  }
  return kExitOk;
}

int cmd_interfere(const CommandOptions& opts) {
  Run run("interfere", opts, true);
  Config& cfg = run.cfg();
  const SpinSystem sys = load_system(cfg);
  const int n_spins = static_cast<int>(cfg.get_int("circuit", "spins"));
  if (n_spins < 1 || n_spins > 3) {
    throw ConfigError(cfg.where("circuit", "spins") + ": [circuit] spins must be 1, 2 or 3");
  }
  const InterferometerSetup setup = load_setup(cfg, sys);
  const std::string waveform = cfg.get_string("circuit", "cphase_waveform", "");
  std::optional<NoiseModel> noise;
  if (!waveform.empty() && cfg.has_section("noise")) noise = load_noise(cfg);

  const double phi_min = cfg.get_double("fringe", "phi_min", -kPi);
  const double phi_max = cfg.get_double("fringe", "phi_max", kPi);
  const int points = static_cast<int>(cfg.get_int("fringe", "points", 65));
  const int shots = static_cast<int>(cfg.get_int("fringe", "shots", 0));
  FringeOptions fo;
  fo.shots_per_point = shots;
  std::string budget_file;
  if (cfg.has("fringe", "visibility")) fo.visibility = cfg.get_double("fringe", "visibility");
  if (cfg.has("fringe", "budget_file")) {
    if (fo.visibility) {
      throw ConfigError(cfg.where("fringe", "budget_file") +
                        ": [fringe] give either visibility or budget_file, not both");
    }
    budget_file = cfg.get_string("fringe", "budget_file");
  }
  FitOptions fit_opts;
  fit_opts.min_frequency = cfg.get_double("fit", "min_frequency", fit_opts.min_frequency);
  fit_opts.max_frequency = cfg.get_double("fit", "max_frequency", fit_opts.max_frequency);
  const std::uint64_t seed = run.seed();
  if (points < 2 || !(phi_max > phi_min)) {
    throw ConfigError(cfg.source() + ": [fringe] needs points >= 2 and phi_max > phi_min");
  }
  if (!budget_file.empty()) {
    const Config bcfg = Config::load(run.resolve_path(budget_file).string());
    fo.visibility = overall_fidelity(load_budget(bcfg));
    bcfg.get_double("budget", "expected", 0.0);
    bcfg.get_double("budget", "tolerance", 0.0);
    bcfg.check_all_used();
  }
  run.finish_config();

  const NuclearProjectors proj = nuclear_projectors();
  std::optional<ComplexMatrix> cphase_op;
  PulseSequence pulse;
  if (!waveform.empty()) {
    std::ifstream in(run.resolve_path(waveform));
    if (!in) throw ConfigError(cfg.where("circuit", "cphase_waveform") + ": cannot open '" + waveform + "'");
    pulse = read_waveform(in);
    cphase_op = propagate(pulse, setup.reg, proj, 0.0, 0.0);
  }
  const ComplexMatrix* cp = cphase_op ? &*cphase_op : nullptr;
  CircuitBuilder builder = [&](double phi) {
    if (n_spins == 1) return build_one_spin_circuit(phi, setup);
    if (n_spins == 2) return build_two_spin_circuit(phi, setup, cp);
    return build_three_spin_circuit(phi, setup, cp);
  };

  const Rng root(seed);
  Rng shot_rng = root.child(0);
  fo.rng = &shot_rng;
  const FringeData data = fringe(builder, linspace(phi_min, phi_max, points), setup, fo);
  const FringeFit fit = extract_visibility(data, fit_opts);
  const double vis = std::clamp(fit.visibility, 0.0, 1.0);
  const VisibilityQfi q = qfi_from_visibility(vis, n_spins);

  {
    auto os = run.open("fringe.csv");
    write_fringe_csv(os, data);
  }
  {
    auto os = run.open("circuit.json");
    os << describe_circuit(builder(0.0)) << '\n';
  }
  std::optional<CircuitFidelityResult> cf;
  if (noise) {
    Rng noise_rng = root.child(1);
    cf = circuit_fidelity_under_noise(default_fidelity_phases(), pulse, *noise, noise_rng, setup, proj);
  }
  {
    auto os = run.open("report.txt");
    os << "n_spins = " << n_spins << '\n';
    print_fidelity_line(os, "visibility", fit.visibility);
    print_fidelity_line(os, "visibility_err", fit.visibility_err);
    print_fidelity_line(os, "frequency", fit.frequency);
    print_fidelity_line(os, "frequency_err", fit.frequency_err);
    print_fidelity_line(os, "period_rad", fit.period);
    print_fidelity_line(os, "phase_offset_rad", fit.phase_offset);
    print_fidelity_line(os, "offset", fit.offset);
    print_fidelity_line(os, "rms_residual", fit.rms_residual);
    print_fidelity_line(os, "qfi", q.qfi);
    print_fidelity_line(os, "db_over_sql", q.db_over_sql);
    os << "entangled = " << (entanglement_witness(q.qfi, n_spins) ? "true" : "false") << '\n';
    if (cf) print_fidelity_line(os, "circuit_fidelity_under_noise", cf->mean);
  }
  out(opts) << std::fixed << std::setprecision(4) << "visibility " << fit.visibility << " +- "
            << fit.visibility_err << ", QFI " << q.qfi << ", " << std::setprecision(2)
            << (std::abs(q.db_over_sql) < 5e-3 ? 0.0 : q.db_over_sql) << " dB over SQL" << std::defaultfloat << '\n';
  run.write_manifest();
  return kExitOk;
}

int cmd_campaign(const CommandOptions& opts) {
  Run run("campaign", opts, true);
  Config& cfg = run.cfg();
  MeasurementCampaign c;
  c.true_phase = cfg.get_double("campaign", "true_phase", c.true_phase);
  c.model.visibility = cfg.get_double("campaign", "visibility");
  c.model.n_spins = static_cast<int>(cfg.get_int("campaign", "n_spins"));
  c.model.offset_phase = cfg.get_double("campaign", "offset_phase", c.model.offset_phase);
  const long long nu = cfg.get_int("campaign", "nu", 200);
  const long long n_est = cfg.get_int("campaign", "n_estimates", 10000);
  c.histogram_bins = static_cast<int>(cfg.get_int("campaign", "histogram_bins", c.histogram_bins));
  c.histogram_sigmas = cfg.get_double("campaign", "histogram_sigmas", c.histogram_sigmas);
  std::vector<std::uint64_t> nu_values;
  for (double v : cfg.has("campaign", "nu_values") ? cfg.get_doubles("campaign", "nu_values")
                                                   : std::vector<double>{}) {
    if (v < 1 || v != std::floor(v)) {
      throw ConfigError(cfg.where("campaign", "nu_values") + ": [campaign] nu_values must be positive integers");
    }
    nu_values.push_back(static_cast<std::uint64_t>(v));
  }
  const double delta_b = cfg.get_double("jitter", "delta_b_gauss", 0.0);
  const double k_jitter = cfg.get_double("jitter", "k_rad_per_gauss", 1.5);
  c.seed = run.seed();
  if (nu < 1 || n_est < 2) throw ConfigError(cfg.source() + ": [campaign] needs nu >= 1 and n_estimates >= 2");
  c.nu = static_cast<std::uint64_t>(nu);
  c.n_estimates = static_cast<std::uint64_t>(n_est);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.source() + ": [campaign]: " + e.what());
  }
  run.finish_config();

  // Histogram run and the sweep use separate child streams.
  MeasurementCampaign hist = c;
  hist.seed = Rng(c.seed).child(0).seed();
  const CampaignResult r = run_campaign(hist);
  {
    auto os = run.open("histogram.csv");
    write_histogram_csv(os, r);
  }
  std::optional<VarianceCurve> curve;
  if (!nu_values.empty()) {
    MeasurementCampaign sweep = c;
    sweep.seed = Rng(c.seed).child(1).seed();
    curve = variance_vs_nu(sweep, nu_values);
    auto os = run.open("variance.csv");
    write_variance_csv(os, *curve);
  }
  const double sql = 1.0 / (static_cast<double>(c.model.n_spins) * static_cast<double>(c.nu));
  {
    auto os = run.open("report.txt");
    print_fidelity_line(os, "true_phase", c.true_phase);
    print_fidelity_line(os, "mean_estimate", r.mean);
    print_fidelity_line(os, "variance", r.variance);
    print_fidelity_line(os, "predicted_variance", r.predicted_variance);
    print_fidelity_line(os, "normalized_variance", r.variance / sql);
    print_fidelity_line(os, "db_below_sql", -10.0 * std::log10(r.variance / sql));
    os << "clamped_estimates = " << r.clamped << '\n';
    os << "histogram_underflow = " << r.underflow << '\n';
    os << "histogram_overflow = " << r.overflow << '\n';
    if (curve) print_fidelity_line(os, "curve_flatness_chi2", flatness_chi2(*curve));
    print_fidelity_line(os, "magnetic_phase_jitter_rad", magnetic_phase_jitter(delta_b, k_jitter));
  }
  out(opts) << "normalized variance " << std::setprecision(5) << r.variance / sql << " ("
            << std::setprecision(3) << -10.0 * std::log10(r.variance / sql) << " dB below SQL)\n";
  run.write_manifest();
  return kExitOk;
}

int cmd_budget(const CommandOptions& opts) {
  Run run("budget", opts, true);
  Config& cfg = run.cfg();
  const ErrorBudgetTable table = load_budget(cfg);
  std::optional<double> expected;
  if (cfg.has("budget", "expected")) expected = cfg.get_double("budget", "expected");
  const double tolerance = cfg.get_double("budget", "tolerance", 0.007);
  run.seed();
  run.finish_config();

  const double overall = overall_fidelity(table);
  {
    auto os = run.open("budget.csv");
    write_budget_report(os, table);
  }
  std::ostream& log = out(opts);
  write_budget_report(log, table);
  if (expected) {
    const bool ok = std::abs(overall - *expected) <= tolerance;
    log << std::setprecision(6) << "expected " << *expected << " +- " << tolerance << ": " << (ok ? "within" : "OUTSIDE")
        << " tolerance\n";
  }
  run.write_manifest();
  return kExitOk;
}

int cmd_scaling(const CommandOptions& opts) {
  Run run("scaling", opts, false);
  Config& cfg = run.cfg();
  if (opts.n_max) cfg.set("scaling", "n_max", std::to_string(*opts.n_max));
  if (opts.one_spin_visibility) cfg.set("scaling", "one_spin_visibility", format_number(*opts.one_spin_visibility));
  if (opts.per_spin_factor) cfg.set("scaling", "per_spin_factor", format_number(*opts.per_spin_factor));
  const int n_max = static_cast<int>(cfg.get_int("scaling", "n_max", 30));
  const int scan_max = static_cast<int>(cfg.get_int("scaling", "scan_max", 100));
  const double v1 = cfg.get_double("scaling", "one_spin_visibility", 0.91);
  const double f = cfg.get_double("scaling", "per_spin_factor", 0.96);
  run.seed();
  if (n_max < 1 || scan_max < 1) throw ConfigError(cfg.source() + ": [scaling] n_max and scan_max must be >= 1");
  if (!(v1 > 0.0 && v1 <= 1.0 && f > 0.0 && f <= 1.0)) {
    throw ConfigError(cfg.source() + ": [scaling] one_spin_visibility and per_spin_factor must lie in (0, 1]");
  }
  run.finish_config();

  const ScalingScan scan = scan_scaling(std::max(n_max, scan_max), v1, f);
  {
    auto os = run.open("scaling.csv");
    os << "N, qfi, sql, hl, argmax\n";
    for (int n = 1; n <= n_max; ++n) {
      os << n << ", " << scan.qfi[n - 1] << ", " << n << ", " << n * n << ", "
         << (std::count(scan.plateau.begin(), scan.plateau.end(), n) ? 1 : 0) << '\n';
    }
  }
  {
    auto os = run.open("report.txt");
    os << "scan_range = 1.." << scan.qfi.size() << '\n';
    os << "argmax_n = " << scan.argmax_n << '\n';
    os << "plateau_n =";
    for (int n : scan.plateau) os << ' ' << n;
    os << '\n';
    print_fidelity_line(os, "max_qfi", scan.max_qfi);
    os << "unimodal = " << (scan.unimodal ? "true" : "false") << '\n';
  }
  out(opts) << "QFI maximum " << std::setprecision(6) << scan.max_qfi << " at N = " << scan.argmax_n
            << (scan.unimodal ? " (unimodal)" : " (NOT unimodal)") << '\n';
  run.write_manifest();
  return kExitOk;
}

namespace {

struct Checker {
  std::ostream& log;
  std::ostream& file;
  int failures = 0;

  void check(const std::string& module, const std::string& name, bool ok) {
    const std::string line = std::string(ok ? "PASS" : "FAIL") + "  " + module + ": " + name;
    log << line << '\n';
    file << line << '\n';
    if (!ok) ++failures;
  }

  template <class F>
  void check_throws(const std::string& module, const std::string& name, F&& f) {
    bool threw = false;
    try {
      f();
    } catch (const std::exception&) {
      threw = true;
    }
    check(module, name, threw);
  }
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace

int cmd_selftest(const CommandOptions& opts) {
  Run run("selftest", opts, false);
  const std::uint64_t seed = run.seed();
  run.finish_config();
  auto file = run.open("selftest.txt");
  Checker t{out(opts), file};

  // numerics-core
  t.check("numerics", "expm(0) = 1", max_abs(expm(ComplexMatrix::Zero(4, 4), 1.0) -
                                                 ComplexMatrix::Identity(4, 4)) < 1e-15);
  t.check("numerics", "kron dimensions", kron(ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(3, 3)).rows() == 6);
  {
    Rng a(seed), b(seed);
    t.check("numerics", "seeded streams repeat", a.normal(0, 1) == b.normal(0, 1));
  }
  t.check_throws("numerics", "negative sigma rejected", [&] {
    Rng r(seed);
    gaussian_sample(r, 0.0, -1.0, 3);
  });

  // spin-model
  const SpinSystem sys;
  const ReducedRegister reg = make_register(sys);
  const NuclearProjectors proj = nuclear_projectors();
  t.check("spin-model", "full Hamiltonian is Hermitian", is_hermitian(full_hamiltonian(sys)));
  t.check("spin-model", "control Hamiltonian is Hermitian",
          is_hermitian(control_hamiltonian(reg, proj, Channel::F1Real, 0.37)));

  // pulse-grape
  {
    const PulseSequence zero = PulseSequence::zeros(10, 20.0, {Channel::F1Real});
    t.check("pulse-grape", "zero pulse realises the identity",
            near(gate_fidelity(propagate(zero, reg, proj, 0, 0), identity_target()), 1.0, 1e-12));
    NoiseModel quiet;
    quiet.sigma_mag_khz = 0.0;
    quiet.sigma_amp = 0.0;
    Rng r(seed);
    const auto ens = noise_ensemble(quiet, r);
    t.check("pulse-grape", "noiseless ensemble has one point", ens.size() == 1 && ens[0].weight == 1.0);
  }

  // interferometer
  {
    const InterferometerSetup setup = InterferometerSetup::defaults(sys);
    const StateVector psi0 = initial_state();
    t.check("interferometer", "empty circuit leaves the state", (run_circuit(Circuit{}, psi0) - psi0).norm() == 0.0);
    t.check("interferometer", "two-spin circuit has 8 elements", build_two_spin_circuit(0.3, setup).elements.size() == 8);
    const Circuit three = remove_shadowed(build_three_spin_circuit(0.3, setup));
    const Circuit two = build_two_spin_circuit(0.3, setup);
    bool same = three.elements.size() == two.elements.size();
    for (std::size_t i = 0; same && i < two.elements.size(); ++i) {
      same = element_name(three.elements[i]) == element_name(two.elements[i]);
    }
    t.check("interferometer", "three-spin minus shadowed gates matches two-spin gate string", same);
    FringeData f;
    for (int i = 0; i < 33; ++i) {
      const double phi = -kPi + kTwoPi * i / 32;
      f.phases.push_back(phi);
      f.populations.push_back(0.5 + 0.5 * std::cos(phi));
      f.stderrs.push_back(0.0);
    }
    t.check("interferometer", "exact cosine fits visibility 1", near(extract_visibility(f).visibility, 1.0, 1e-8));
  }

  // metrology
  {
    ParamDistribution p;
    p.probabilities = [](double th) {
      return std::vector<double>{std::pow(std::cos(th / 2), 2), std::pow(std::sin(th / 2), 2)};
    };
    t.check("metrology", "cos^2 Fisher information is 1", near(fisher_information(p, 0.7), 1.0, 1e-6));
    t.check("metrology", "Cramer-Rao 1/(200*4)", near(cramer_rao_bound(4.0, 200), 1.0 / 800.0, 1e-15));
    const auto css = coherent_spin_state(3, 0.0, 0.0);
    t.check("metrology", "CSS(0,0) is |000>", near(std::abs(css.amplitudes(0)), 1.0, 1e-15));
    t.check("metrology", "qfi_pure of zero derivative is 0",
            qfi_pure(css.amplitudes, StateVector::Zero(8)) == 0.0);
    t.check("metrology", "GHZ(N) QFI along z is N^2",
            near(qfi_generator(ghz_state(4), Eigen::Vector3d::UnitZ()), 16.0, 1e-12));
    t.check("metrology", "witness boundary not exceeded", !entanglement_witness(3.0, 3));
    t.check("metrology", "unit visibility gives N^2",
            near(qfi_from_visibility(1.0, 5).qfi, 25.0, 1e-12));
    t.check_throws("metrology", "twin-Fock with odd N rejected", [] { twin_fock_state(3); });
    t.check("metrology", "scaling N=1 is 0.8281", near(scaling_prediction(1), 0.8281, 1e-12));
  }

  // stats-mc
  {
    Rng r(seed);
    t.check("stats-mc", "p = 0 gives no successes", sample_shots(0.0, 200, r) == 0);
    t.check("stats-mc", "p = 1 gives nu successes", sample_shots(1.0, 200, r) == 200);
    t.check("stats-mc", "0.01 G jitter is 0.015 rad", near(magnetic_phase_jitter(0.01), 0.015, 1e-15));
    FringeModel dead;
    dead.visibility = 0.0;
    t.check_throws("stats-mc", "zero visibility flagged", [&] { estimate_phase(100, 200, dead); });
  }

  // budget
  {
    t.check("budget", "empty table is 1", overall_fidelity(ErrorBudgetTable{}) == 1.0);
    ErrorBudgetTable one;
    one.entries = {{"cphase", 0.995, 2, false}};
    t.check("budget", "0.995^2", near(overall_fidelity(one), 0.990025, 1e-15));
    t.check("budget", "no NV0 population gives 1 - P_ion", near(nv_negative_fidelity(0.01, 0.0, 30), 0.99, 1e-15));
    t.check("budget", "polarization bound endpoints",
            nuclear_polarization_bound(1.0) == 1.0 && nuclear_polarization_bound(0.0) == 0.0);
    t.check("budget", "equal chopped inputs give 1", chopped_survival(0.9, 0.9) == 1.0);
    t.check("budget", "flat decay gives survival 1",
            survival_probability_t1(0.92, 0.92, 0.92).probability == 1.0);
  }

  // cli-io
  {
    std::istringstream in("[a]\nx = pi/60  # comment\n");
    const Config c = Config::parse(in, "<selftest>");
    t.check("cli-io", "pi expressions parse", near(c.get_double("a", "x"), kPi / 60.0, 1e-16));
    t.check_throws("cli-io", "unknown keys rejected", [] {
      std::istringstream bad("[a]\ny = 1\n");
      Config::parse(bad, "<selftest>").check_all_used();
    });
    t.check("cli-io", "sha256 of empty input",
            sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }

  file.close();
  out(opts) << (t.failures ? std::to_string(t.failures) + " check(s) failed\n" : "all checks passed\n");
  run.write_manifest();
  return t.failures ? kExitSelftest : kExitOk;
}

int run_command(const std::string& name, const CommandOptions& opts) {
  try {
    if (name == "optimize-pulse") return cmd_optimize_pulse(opts);
    if (name == "interfere") return cmd_interfere(opts);
    if (name == "campaign") return cmd_campaign(opts);
    if (name == "budget") return cmd_budget(opts);
    if (name == "scaling") return cmd_scaling(opts);
    if (name == "selftest") return cmd_selftest(opts);
    std::cerr << "error: unknown command '" << name << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FitError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ZeroSlopeError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace nvmetro
