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

#include "nvmetro/interferometer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace nvmetro {

std::string_view to_string(Spin s) {
  switch (s) {
    case Spin::Electron: return "electron";
    case Spin::Nitrogen: return "14N";
    case Spin::Carbon: return "13C";
  }
  return "?";
}

Spin parse_spin(std::string_view s) {
  if (s == "electron" || s == "e") return Spin::Electron;
  if (s == "14N" || s == "N" || s == "nitrogen") return Spin::Nitrogen;
  if (s == "13C" || s == "C" || s == "carbon") return Spin::Carbon;
  throw std::invalid_argument("unknown spin '" + std::string(s) + "'");
}

const ComplexMatrix& element_operator(const CircuitElement& e) {
  return std::visit([](const auto& x) -> const ComplexMatrix& { return x.op; }, e);
}

std::string element_name(const CircuitElement& e) {
  if (const auto* g = std::get_if<IdealGate>(&e)) return g->name;
  if (const auto* p = std::get_if<PulseGate>(&e)) return p->name;
  return "phase";
}

InterferometerSetup InterferometerSetup::defaults(const SpinSystem& sys) {
  InterferometerSetup s;
  s.reg = make_register(sys);
  s.cnot_control_value = sys.electron_levels == ElectronPair::ZeroPlusOne ? 0.5 : -0.5;
  return s;
}

const ComplexMatrix& z_operator(const ReducedRegister& reg, Spin spin) {
  switch (spin) {
    case Spin::Electron: return reg.s_z;
    case Spin::Nitrogen: return reg.iz_n;
    case Spin::Carbon: return reg.iz_c;
  }
  throw std::invalid_argument("z_operator: bad spin");
}

ComplexMatrix rotation(const ReducedRegister& reg, Spin spin, char axis, double theta) {
  const ComplexMatrix* op = nullptr;
  switch (spin) {
    case Spin::Electron:
      op = axis == 'x' ? &reg.s_x : axis == 'y' ? &reg.s_y : &reg.s_z;
      break;
    case Spin::Nitrogen:
      op = axis == 'x' ? &reg.ix_n : axis == 'y' ? &reg.iy_n : &reg.iz_n;
      break;
    case Spin::Carbon:
      op = axis == 'x' ? &reg.ix_c : axis == 'y' ? &reg.iy_c : &reg.iz_c;
      break;
  }
  if (axis != 'x' && axis != 'y' && axis != 'z') {
    throw std::invalid_argument("rotation: axis must be x, y or z");
  }
  return expm(*op, Complex(0.0, -theta));
}

ComplexMatrix phase_operator(const ReducedRegister& reg, const std::vector<Spin>& spins,
                             double phi) {
  // All z operators are diagonal, so the exponential is taken entrywise.
  Eigen::VectorXcd total = Eigen::VectorXcd::Zero(ReducedRegister::kDim);
  for (Spin s : spins) total += z_operator(reg, s).diagonal();
  return (Complex(0.0, -phi) * total).array().exp().matrix().asDiagonal();
}

ComplexMatrix cnnot_e(const ReducedRegister& reg, Spin control, double control_value) {
  if (control == Spin::Electron) throw std::invalid_argument("cnnot_e: control must be nuclear");
  const int dim = ReducedRegister::kDim;
  ComplexMatrix u = ComplexMatrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const double m = control == Spin::Nitrogen ? reg.m_n(i) : reg.m_c(i);
    if (std::abs(m - control_value) < 1e-9) {
      u(i ^ 4, i) = 1.0;  // electron is the most significant factor
    } else {
      u(i, i) = 1.0;
    }
  }
  return u;
}

StateVector initial_state() {
  StateVector psi = StateVector::Zero(ReducedRegister::kDim);
  psi(1) = 1.0;
  return psi;
}

namespace {

IdealGate rot_gate(const InterferometerSetup& s, Spin spin, char axis, double theta) {
  std::ostringstream name;
  name << "R" << axis << "(" << std::setprecision(6) << theta / kPi << "pi)_" << to_string(spin);
  return {name.str(), rotation(s.reg, spin, axis, theta), {spin}, false};
}

CircuitElement cphase_element(const InterferometerSetup& s, const ComplexMatrix* op) {
  if (op) {
    if (op->rows() != ReducedRegister::kDim || op->cols() != ReducedRegister::kDim) {
      throw std::invalid_argument("cphase operator must be 8x8");
    }
    return PulseGate{"CPhase(pulse)", *op};
  }
  return IdealGate{"CPhase", s.cphase.unitary, {Spin::Nitrogen, Spin::Carbon}, false};
}

PhaseAccumulation phase_element(const InterferometerSetup& s, double phi,
                                std::vector<Spin> spins) {
  PhaseAccumulation p;
  p.phi = phi;
  p.op = phase_operator(s.reg, spins, phi);
  p.spins = std::move(spins);
  return p;
}

}  // namespace

Circuit build_one_spin_circuit(double phi, const InterferometerSetup& setup) {
  Circuit c;
  c.n_spins = 1;
  c.label = "one-spin";
  c.elements.push_back(rot_gate(setup, Spin::Carbon, 'y', kPi / 2));
  c.elements.push_back(phase_element(setup, phi, {Spin::Carbon}));
  c.elements.push_back(rot_gate(setup, Spin::Carbon, 'x', kPi / 2));
  return c;
}

Circuit build_two_spin_circuit(double phi, const InterferometerSetup& setup,
                               const ComplexMatrix* cphase_op) {
  Circuit c;
  c.n_spins = 2;
  c.label = "two-spin";
  auto& e = c.elements;
  e.push_back(rot_gate(setup, Spin::Nitrogen, 'y', kPi / 2));
  e.push_back(rot_gate(setup, Spin::Carbon, 'y', -kPi / 2));
  e.push_back(cphase_element(setup, cphase_op));
  e.push_back(rot_gate(setup, Spin::Carbon, 'y', kPi / 2));
  e.push_back(phase_element(setup, phi, {Spin::Carbon, Spin::Nitrogen}));
  e.push_back(rot_gate(setup, Spin::Nitrogen, 'y', kPi / 2));
  e.push_back(cphase_element(setup, cphase_op));
  e.push_back(rot_gate(setup, Spin::Carbon, 'x', kPi / 2));
  return c;
}

Circuit build_three_spin_circuit(double phi, const InterferometerSetup& setup,
                                 const ComplexMatrix* cphase_op) {
  Circuit c = build_two_spin_circuit(phi, setup, cphase_op);
  c.n_spins = 3;
  c.label = "three-spin";
  const IdealGate cnot{"CnNOTe", cnnot_e(setup.reg, setup.cnot_control, setup.cnot_control_value),
                       {setup.cnot_control, Spin::Electron}, true};
  auto phase_it = std::find_if(c.elements.begin(), c.elements.end(), [](const auto& e) {
    return std::holds_alternative<PhaseAccumulation>(e);
  });
  *phase_it = phase_element(setup, phi, {Spin::Carbon, Spin::Nitrogen, Spin::Electron});
  phase_it = c.elements.insert(phase_it, cnot);
  c.elements.insert(phase_it + 2, cnot);
  return c;
}

Circuit remove_shadowed(const Circuit& c) {
  Circuit out;
  out.label = c.label;
  out.n_spins = c.n_spins;
  for (const auto& e : c.elements) {
    const auto* g = std::get_if<IdealGate>(&e);
    if (g && g->shadowed) continue;
    out.elements.push_back(e);
  }
  if (out.elements.size() != c.elements.size()) out.n_spins = c.n_spins - 1;
  return out;
}

StateVector run_circuit(const Circuit& c, const StateVector& initial) {
  StateVector psi = initial;
  for (const auto& e : c.elements) {
    const ComplexMatrix& op = element_operator(e);
    if (op.cols() != psi.size()) {
      throw std::invalid_argument("run_circuit: element '" + element_name(e) +
                                  "' does not match the state dimension");
    }
    psi = op * psi;
  }
  return psi;
}

double spin_population(const StateVector& state, const ReducedRegister& reg, Spin spin,
                       double value) {
  if (state.size() != ReducedRegister::kDim) {
    throw std::invalid_argument("spin_population: state is not on the register");
  }
  double p = 0.0;
  for (int i = 0; i < ReducedRegister::kDim; ++i) {
    const double m = spin == Spin::Electron ? reg.m_s(i)
                     : spin == Spin::Nitrogen ? reg.m_n(i)
                                              : reg.m_c(i);
    if (std::abs(m - value) < 1e-9) p += std::norm(state(i));
  }
  return p;
}

void FringeData::validate() const {
  if (phases.size() != populations.size() || phases.size() != stderrs.size()) {
    throw std::invalid_argument("FringeData: column lengths differ");
  }
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (i > 0 && !(phases[i] > phases[i - 1])) {
      throw std::invalid_argument("FringeData: phases must be strictly increasing");
    }
    if (!(populations[i] >= 0.0 && populations[i] <= 1.0)) {
      throw std::invalid_argument("FringeData: population outside [0,1]");
    }
  }
}

FringeData fringe(const CircuitBuilder& builder, const std::vector<double>& phases,
                  const InterferometerSetup& setup, const FringeOptions& opts) {
  if (opts.shots_per_point > 0 && !opts.rng) {
    throw std::invalid_argument("fringe: shot sampling needs a generator");
  }
  if (opts.visibility && !(*opts.visibility >= 0.0 && *opts.visibility <= 1.0)) {
    throw std::invalid_argument("fringe: visibility outside [0,1]");
  }
  FringeData out;
  out.shots_per_point = opts.shots_per_point;
  const StateVector psi0 = initial_state();
  for (double phi : phases) {
    const StateVector psi = run_circuit(builder(phi), psi0);
    double p = spin_population(psi, setup.reg, setup.readout, setup.readout_value);
    p = std::clamp(p, 0.0, 1.0);
    if (opts.visibility) p = 0.5 + *opts.visibility * (p - 0.5);
    double err = 0.0;
    if (opts.shots_per_point > 0) {
      const auto n = static_cast<std::uint64_t>(opts.shots_per_point);
      const double measured = static_cast<double>(opts.rng->binomial(n, p)) / static_cast<double>(n);
      err = std::sqrt(std::max(measured * (1.0 - measured), 1e-12) / static_cast<double>(n));
      p = measured;
    }
    out.phases.push_back(phi);
    out.populations.push_back(p);
    out.stderrs.push_back(err);
  }
  out.validate();
  return out;
}

FringeData fringe(const CircuitBuilder& builder, const std::vector<double>& phases,
                  const InterferometerSetup& setup, const ErrorBudgetTable& vis_model) {
  FringeOptions opts;
  opts.visibility = overall_fidelity(vis_model);
  return fringe(builder, phases, setup, opts);
}

void write_fringe_csv(std::ostream& os, const FringeData& f) {
  f.validate();
  os << std::setprecision(17);
  os << "phi_rad, population, stderr\n";
  for (std::size_t i = 0; i < f.phases.size(); ++i) {
    os << f.phases[i] << ", " << f.populations[i] << ", " << f.stderrs[i] << '\n';
  }
}

namespace {

struct LinearFit {
  double rss;
  double a, b, c;
};

LinearFit fit_at_frequency(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double k) {
  Eigen::MatrixXd design(x.size(), 3);
  design.col(0) = (k * x).array().cos();
  design.col(1) = (k * x).array().sin();
  design.col(2).setOnes();
  const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(y);
  const double rss = (design * coef - y).squaredNorm();
  return {rss, coef(0), coef(1), coef(2)};
}

double wrap_phase(double p) {
  p = std::remainder(p, kTwoPi);
  if (p <= -kPi) p += kTwoPi;
  return p;
}

}  // namespace

FringeFit extract_visibility(const FringeData& f, const FitOptions& opts) {
  f.validate();
  const auto n = static_cast<Eigen::Index>(f.phases.size());
  if (n < 8) {
    throw FitError("extract_visibility: need at least 8 points, got " + std::to_string(n));
  }
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(f.phases.data(), n);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(f.populations.data(), n);
  const double span = x.maxCoeff() - x.minCoeff();

  // Coarse frequency scan with the linear sub-problem solved exactly.
  LinearFit best{std::numeric_limits<double>::infinity(), 0, 0, 0};
  double best_k = opts.min_frequency;
  for (int i = 0; i < opts.scan_points; ++i) {
    const double k = opts.min_frequency +
                     (opts.max_frequency - opts.min_frequency) * i / (opts.scan_points - 1);
    const LinearFit lf = fit_at_frequency(x, y, k);
    if (lf.rss < best.rss) {
      best = lf;
      best_k = k;
    }
  }

  // Levenberg-Marquardt on (A, k, phi0, c).
  Eigen::Vector4d p(std::hypot(best.a, best.b), best_k, std::atan2(-best.b, best.a), best.c);
  auto residuals = [&](const Eigen::Vector4d& q) {
    return Eigen::VectorXd((q(0) * (q(1) * x.array() + q(2)).cos() + q(3)).matrix() - y);
  };
  auto jacobian = [&](const Eigen::Vector4d& q) {
    Eigen::MatrixXd j(n, 4);
    const Eigen::ArrayXd theta = q(1) * x.array() + q(2);
    j.col(0) = theta.cos().matrix();
    j.col(1) = (-q(0) * x.array() * theta.sin()).matrix();
    j.col(2) = (-q(0) * theta.sin()).matrix();
    j.col(3).setOnes();
    return j;
  };

  double rss = residuals(p).squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (rss < 1e-28) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd j = jacobian(p);
    const Eigen::VectorXd r = residuals(p);
    const Eigen::Matrix4d jtj = j.transpose() * j;
    const Eigen::Vector4d jtr = j.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix4d damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Vector4d step = damped.ldlt().solve(-jtr);
      const Eigen::Vector4d trial = p + step;
      const double trial_rss = residuals(trial).squaredNorm();
      if (trial_rss <= rss) {
        const double rel = (rss - trial_rss) / std::max(rss, 1e-300);
        p = trial;
        rss = trial_rss;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (rel < 1e-14 || step.norm() < 1e-14 * (1.0 + p.norm())) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No downhill step at any damping: stationary to working precision.
      converged = true;
      break;
    }
    if (converged) break;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "extract_visibility: no convergence after " << it << " iterations (rss=" << rss
        << ", k=" << p(1) << ", A=" << p(0) << ")";
    throw FitError(msg.str());
  }

  if (p(0) < 0.0) {
    p(0) = -p(0);
    p(2) += kPi;
  }
  if (p(1) < 0.0) {
    p(1) = -p(1);
    p(2) = -p(2);
  }
  if (span * p(1) < kTwoPi * (1.0 - 1e-6)) {
    std::ostringstream msg;
    msg << "extract_visibility: phases span " << span << " rad, less than one period "
        << kTwoPi / p(1) << " of the fitted frequency " << p(1);
    throw FitError(msg.str());
  }

  FringeFit fit;
  fit.visibility = 2.0 * p(0);
  fit.frequency = p(1);
  fit.period = kTwoPi / p(1);
  fit.phase_offset = wrap_phase(p(2));
  fit.offset = p(3);
  fit.rms_residual = std::sqrt(rss / static_cast<double>(n));
  fit.iterations = it;
  if (n > 4) {
    const Eigen::MatrixXd j = jacobian(p);
    const double s2 = rss / static_cast<double>(n - 4);
    const Eigen::Matrix4d cov = s2 * (j.transpose() * j).inverse();
    const Eigen::Vector4d se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.visibility_err = 2.0 * se(0);
    fit.frequency_err = se(1);
    fit.period_err = kTwoPi * se(1) / (p(1) * p(1));
    fit.phase_offset_err = se(2);
    fit.offset_err = se(3);
  }
  return fit;
}

CircuitFidelityResult circuit_fidelity_under_noise(const std::vector<double>& phi_list,
                                                   const PulseSequence& cphase_pulse,
                                                   const NoiseModel& noise, Rng& rng,
                                                   const InterferometerSetup& setup,
                                                   const NuclearProjectors& proj) {
  if (phi_list.empty()) throw std::invalid_argument("circuit_fidelity_under_noise: no phases");
  cphase_pulse.validate();
  const ControlModel model(setup.reg, proj, cphase_pulse.n_slices(), cphase_pulse.slice_ns);
  const std::vector<NoisePoint> ensemble = noise_ensemble(noise, rng);
  const StateVector psi0 = initial_state();

  std::vector<StateVector> ideal;
  ideal.reserve(phi_list.size());
  for (double phi : phi_list) ideal.push_back(run_circuit(build_two_spin_circuit(phi, setup), psi0));

  const std::size_t n_phi = phi_list.size();
  const std::size_t n_noise = ensemble.size();
  std::vector<double> overlaps(n_phi * n_noise, 0.0);
  const long long count = static_cast<long long>(n_noise);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long s = 0; s < count; ++s) {
    const auto& p = ensemble[static_cast<std::size_t>(s)];
    const ComplexMatrix u = model.propagate(cphase_pulse, p.delta_khz, p.delta1);
    for (std::size_t i = 0; i < n_phi; ++i) {
      const StateVector psi = run_circuit(build_two_spin_circuit(phi_list[i], setup, &u), psi0);
      overlaps[i * n_noise + static_cast<std::size_t>(s)] = std::norm(ideal[i].dot(psi));
    }
  }

  CircuitFidelityResult out;
  out.per_phase.assign(n_phi, 0.0);
  for (std::size_t i = 0; i < n_phi; ++i) {
    for (std::size_t s = 0; s < n_noise; ++s) {
      const double o = overlaps[i * n_noise + s];
      out.per_phase[i] += ensemble[s].weight * o;
      out.max_sample = std::max(out.max_sample, o);
    }
    out.mean += out.per_phase[i];
  }
  out.mean /= static_cast<double>(n_phi);
  return out;
}

std::vector<double> default_fidelity_phases() {
  std::vector<double> out;
  for (int k = -4; k <= 4; ++k) out.push_back(k * kPi / 4.0);
  return out;
}

std::string describe_circuit(const Circuit& c) {
  nlohmann::ordered_json j;
  j["label"] = c.label;
  j["n_spins"] = c.n_spins;
  j["order"] = "elements are applied first to last";
  nlohmann::ordered_json elems = nlohmann::ordered_json::array();
  for (const auto& e : c.elements) {
    nlohmann::ordered_json item;
    if (const auto* g = std::get_if<IdealGate>(&e)) {
      item["type"] = "ideal_gate";
      item["name"] = g->name;
      std::vector<std::string> spins;
      for (Spin s : g->spins) spins.emplace_back(to_string(s));
      item["spins"] = spins;
      if (g->shadowed) item["shadowed"] = true;
    } else if (const auto* pg = std::get_if<PulseGate>(&e)) {
      item["type"] = "pulse_gate";
      item["name"] = pg->name;
    } else {
      const auto& ph = std::get<PhaseAccumulation>(e);
      item["type"] = "phase_accumulation";
      item["phi_rad"] = ph.phi;
      std::vector<std::string> spins;
      for (Spin s : ph.spins) spins.emplace_back(to_string(s));
      item["spins"] = spins;
    }
    item["unitary_error"] = max_abs(element_operator(e).adjoint() * element_operator(e) -
                                    ComplexMatrix::Identity(element_operator(e).rows(),
                                                            element_operator(e).cols()));
    elems.push_back(item);
  }
  j["elements"] = elems;
  return j.dump(2);
}

}  // namespace nvmetro
