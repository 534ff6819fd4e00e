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

#include "nvmetro/grape.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace nvmetro {
namespace {

using Vec = Eigen::VectorXd;

Vec pack(const PulseSequence& seq) {
  const auto n = static_cast<Eigen::Index>(seq.n_slices());
  Vec x(static_cast<Eigen::Index>(seq.active.size()) * n);
  for (std::size_t a = 0; a < seq.active.size(); ++a) {
    const auto& ch = seq.channel(seq.active[a]);
    for (Eigen::Index k = 0; k < n; ++k) x(static_cast<Eigen::Index>(a) * n + k) = ch[k];
  }
  return x;
}

void unpack(const Vec& x, PulseSequence& seq) {
  const auto n = static_cast<Eigen::Index>(seq.n_slices());
  for (std::size_t a = 0; a < seq.active.size(); ++a) {
    auto& ch = seq.channel(seq.active[a]);
    for (Eigen::Index k = 0; k < n; ++k) ch[k] = x(static_cast<Eigen::Index>(a) * n + k);
  }
}

Vec clip(Vec x, double cap) { return x.cwiseMax(-cap).cwiseMin(cap); }

struct Objective {
  const ControlModel& model;
  const GateTarget& target;
  const std::vector<NoisePoint>& ensemble;
  const GrapeOptions& opts;
  PulseSequence scratch;

  double value(const Vec& x) {
    unpack(x, scratch);
    return model.ensemble_fidelity(scratch, target, ensemble);
  }

  double value_grad(const Vec& x, Vec& g) {
    unpack(x, scratch);
    g.resize(x.size());
    if (opts.finite_difference) {
      const auto fd = finite_difference_gradient(model, scratch, target, ensemble, opts.fd_step_khz);
      for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = fd[static_cast<std::size_t>(i)];
      return model.ensemble_fidelity(scratch, target, ensemble);
    }
    return model.ensemble_fidelity(scratch, target, ensemble,
                                   std::span<double>(g.data(), static_cast<std::size_t>(g.size())));
  }
};

// Two-loop recursion. Memory holds (s, y) for the minimisation of -F.
Vec lbfgs_direction(const Vec& grad_min, const std::deque<std::pair<Vec, Vec>>& memory) {
  Vec q = grad_min;
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    const auto& [s, y] = memory[i];
    const double rho = 1.0 / y.dot(s);
    alpha[i] = rho * s.dot(q);
    q -= alpha[i] * y;
  }
  if (!memory.empty()) {
    const auto& [s, y] = memory.back();
    q *= s.dot(y) / y.dot(y);
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const auto& [s, y] = memory[i];
    const double rho = 1.0 / y.dot(s);
    const double beta = rho * y.dot(q);
    q += (alpha[i] - beta) * s;
  }
  return -q;  // descent direction for -F, i.e. ascent for F
}

}  // namespace

std::vector<double> finite_difference_gradient(const ControlModel& model,
                                               const PulseSequence& seq,
                                               const GateTarget& target,
                                               const std::vector<NoisePoint>& ensemble,
                                               double step_khz) {
  PulseSequence work = seq;
  std::vector<double> grad;
  grad.reserve(seq.active.size() * static_cast<std::size_t>(seq.n_slices()));
  for (Channel c : seq.active) {
    for (int k = 0; k < seq.n_slices(); ++k) {
      auto& a = work.channel(c)[static_cast<std::size_t>(k)];
      const double a0 = a;
      a = a0 + step_khz;
      const double fp = model.ensemble_fidelity(work, target, ensemble);
      a = a0 - step_khz;
      const double fm = model.ensemble_fidelity(work, target, ensemble);
      a = a0;
      grad.push_back((fp - fm) / (2.0 * step_khz));
    }
  }
  return grad;
}

PulseSequence random_pulse(int n_slices, double slice_ns, std::vector<Channel> active,
                           double amplitude_khz, Rng& rng) {
  PulseSequence seq = PulseSequence::zeros(n_slices, slice_ns, std::move(active));
  for (Channel c : seq.active) {
    for (auto& a : seq.channel(c)) a = amplitude_khz * (2.0 * rng.uniform() - 1.0);
  }
  return seq;
}

GrapeResult grape_optimize(const PulseSequence& initial, const GateTarget& target,
                           const NoiseModel& noise, Rng& rng, const GrapeOptions& opts,
                           const ReducedRegister& reg, const NuclearProjectors& proj) {
  initial.validate();
  target.validate();
  if (target.unitary.rows() != ReducedRegister::kDim) {
    throw std::invalid_argument("grape_optimize: target must act on the 8-dim register");
  }
  const ControlModel model(reg, proj, initial.n_slices(), initial.slice_ns);
  const std::vector<NoisePoint> ensemble = noise_ensemble(noise, rng);
  Objective obj{model, target, ensemble, opts, initial};

  GrapeResult result;
  result.pulse = initial;
  const double cap = initial.amplitude_cap_khz;

  Vec x = clip(pack(initial), cap);
  Vec g;
  double f = obj.value_grad(x, g);
  result.trace.push_back(f);

  if (initial.active.empty() || x.size() == 0) {
    result.converged = f >= opts.target_fidelity;
    result.status = "no active channels";
    return result;
  }

  std::deque<std::pair<Vec, Vec>> memory;
  int stalled = 0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    if (f >= opts.target_fidelity) {
      result.converged = true;
      result.status = "target fidelity reached";
      break;
    }
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm == 0.0) {
      result.converged = true;
      result.status = "zero gradient";
      break;
    }

    bool accepted = false;
    Vec x_new, g_new;
    double f_new = f;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Vec d = memory.empty() ? Vec(g) : lbfgs_direction(-g, memory);
      double slope = g.dot(d);
      if (!(slope > 0.0)) {
        memory.clear();
        d = g;
        slope = g.dot(d);
      }
      double step = memory.empty() ? opts.initial_step_khz / d.lpNorm<Eigen::Infinity>() : 1.0;
      for (int bt = 0; bt < opts.max_backtracks; ++bt, step *= 0.5) {
        Vec trial = clip(x + step * d, cap);
        const double ft = obj.value(trial);
        // Sufficient increase measured along the clipped displacement.
        const double predicted = g.dot(trial - x);
        if (ft > f && ft >= f + opts.armijo * std::max(predicted, 0.0)) {
          x_new = std::move(trial);
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (memory.empty()) break;
        memory.clear();
      }
    }
    if (!accepted) {
      result.status = "line search failed";
      result.converged = stalled > 0;
      break;
    }

    f_new = obj.value_grad(x_new, g_new);
    const Vec s = x_new - x;
    const Vec y = -(g_new - g);  // gradient change of -F
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      memory.emplace_back(s, y);
      if (static_cast<int>(memory.size()) > opts.lbfgs_memory) memory.pop_front();
    }
    const double gain = f_new - f;
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
    result.trace.push_back(f);
    result.iterations = it;
    if (opts.progress) opts.progress(it, f);

    stalled = gain < opts.tolerance ? stalled + 1 : 0;
    if (stalled >= opts.patience) {
      result.converged = true;
      result.status = "fidelity gain below tolerance";
      break;
    }
  }
  if (result.status.empty()) {
    if (f >= opts.target_fidelity) {
      result.converged = true;
      result.status = "target fidelity reached";
    } else {
      result.status = "iteration limit reached";
    }
  }
  unpack(x, result.pulse);
  return result;
}

}  // namespace nvmetro
