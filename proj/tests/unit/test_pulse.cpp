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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvmetro/grape.hpp"
#include "nvmetro/pulse.hpp"

using namespace nvmetro;

namespace {

struct Fixture {
  ReducedRegister reg = make_register(SpinSystem{});
  NuclearProjectors proj = nuclear_projectors();
};

const std::vector<Channel> kMw = {Channel::F1Real, Channel::F1Imag, Channel::F2Real,
                                  Channel::F2Imag};

}  // namespace

TEST_SUITE("pulse-grape") {

TEST_CASE("waveform round trip is exact") {
  Rng rng(3);
  PulseSequence seq = random_pulse(25, 20.0, kMw, 300.0, rng);
  seq.channel(Channel::RfC)[4] = 1.0 / 3.0;
  std::stringstream ss;
  write_waveform(ss, seq);
  const PulseSequence back = read_waveform(ss);
  CHECK(back.slice_ns == 20.0);
  CHECK(back.n_slices() == 25);
  for (Channel c : kAllChannels) CHECK(back.channel(c) == seq.channel(c));
  CHECK(std::count(back.active.begin(), back.active.end(), Channel::RfC) == 1);
  CHECK(std::count(back.active.begin(), back.active.end(), Channel::RfN) == 0);
}

TEST_CASE("malformed waveforms are rejected") {
  std::istringstream no_header("0, 1, 2, 3, 4, 5, 6\n");
  CHECK_THROWS_AS(read_waveform(no_header), std::invalid_argument);
  std::istringstream short_row("# slice_duration_ns = 20\n0, 1, 2\n");
  CHECK_THROWS_AS(read_waveform(short_row), std::invalid_argument);
}

TEST_CASE("pulse validation") {
  PulseSequence seq = PulseSequence::zeros(4, 20.0, kMw);
  CHECK_NOTHROW(seq.validate());
  CHECK(seq.duration_us() == doctest::Approx(0.08));
  seq.channel(Channel::F1Real)[0] = 2.0 * seq.amplitude_cap_khz;
  CHECK_THROWS_AS(seq.validate(), std::invalid_argument);
  CHECK_THROWS_AS(PulseSequence::zeros(0, 20.0, kMw), std::invalid_argument);
}

TEST_CASE("grid noise ensemble") {
  NoiseModel n;
  Rng rng(1);
  const auto ens = noise_ensemble(n, rng);
  CHECK(ens.size() == 49);
  double w = 0, m = 0, v = 0, v1 = 0;
  for (const auto& p : ens) {
    w += p.weight;
    m += p.weight * p.delta_khz;
    v += p.weight * p.delta_khz * p.delta_khz;
    v1 += p.weight * p.delta1 * p.delta1;
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(m) < 1e-10);
  CHECK(v == doctest::Approx(35.0 * 35.0).epsilon(1e-12));
  CHECK(v1 == doctest::Approx(1e-4).epsilon(1e-12));

  n.sigma_amp = 0.0;
  CHECK(noise_ensemble(n, rng).size() == 7);
}

TEST_CASE("Monte-Carlo ensemble is seeded") {
  NoiseModel n;
  n.sampling = NoiseModel::Sampling::MonteCarlo;
  n.n_samples = 30;
  Rng a(8), b(8);
  const auto ea = noise_ensemble(n, a);
  const auto eb = noise_ensemble(n, b);
  REQUIRE(ea.size() == 30);
  for (std::size_t i = 0; i < ea.size(); ++i) {
    CHECK(ea[i].delta_khz == eb[i].delta_khz);
    CHECK(ea[i].weight == doctest::Approx(1.0 / 30));
  }
}

TEST_CASE("targets") {
  const GateTarget cp = default_cphase_target();
  CHECK_NOTHROW(cp.validate());
  for (int i = 0; i < 8; ++i) {
    const double expected = (i == 1 || i == 5) ? -1.0 : 1.0;
    CHECK(cp.unitary(i, i).real() == expected);
  }
  CHECK(gate_fidelity(ComplexMatrix::Identity(8, 8), identity_target()) == doctest::Approx(1.0));
  CHECK(gate_fidelity(cp.unitary, identity_target()) == doctest::Approx(0.5));
  // Global phases do not count.
  CHECK(gate_fidelity(Complex(0, 1) * cp.unitary, cp) == doctest::Approx(1.0));
  CHECK_THROWS_AS(diagonal_phase_target({9}, "bad"), std::invalid_argument);
}

TEST_CASE("propagators are unitary and match the slice model") {
  Fixture f;
  Rng rng(4);
  const PulseSequence seq = random_pulse(30, 20.0, kMw, 500.0, rng);
  const ComplexMatrix u = propagate(seq, f.reg, f.proj, 12.0, 0.01);
  CHECK(is_unitary(u));
  const ControlModel model(f.reg, f.proj, 30, 20.0);
  CHECK(max_abs(model.propagate(seq, 12.0, 0.01) - u) < 1e-13);
  const PulseSequence wrong = random_pulse(31, 20.0, kMw, 500.0, rng);
  CHECK_THROWS_AS(model.propagate(wrong, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("analytic gradient matches central differences") {
  Fixture f;
  Rng rng(5);
  PulseSequence seq = random_pulse(40, 20.0, kMw, 400.0, rng);
  seq.active.push_back(Channel::RfN);
  const ControlModel model(f.reg, f.proj, 40, 20.0);
  const GateTarget target = default_cphase_target();
  const std::vector<NoisePoint> point = {{25.0, -0.008, 1.0}};
  std::vector<double> grad(seq.active.size() * 40);
  model.ensemble_fidelity(seq, target, point, grad);
  const auto fd = finite_difference_gradient(model, seq, target, point, 1e-3);
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    scale = std::max(scale, std::abs(fd[i]));
    err = std::max(err, std::abs(fd[i] - grad[i]));
  }
  CHECK(scale > 1e-6);
  CHECK(err < 1e-6 * scale);
}

TEST_CASE("robust fidelity and maps") {
  Fixture f;
  const PulseSequence zero = PulseSequence::zeros(10, 20.0, kMw);
  NoiseModel quiet;
  quiet.sigma_mag_khz = 0.0;
  quiet.sigma_amp = 0.0;
  Rng rng(1);
  CHECK(robust_fidelity(zero, identity_target(), quiet, rng, f.reg, f.proj) ==
        doctest::Approx(1.0).epsilon(1e-14));
  NoiseModel noisy;
  const double r = robust_fidelity(zero, identity_target(), noisy, rng, f.reg, f.proj);
  CHECK(r < 1.0);
  CHECK(r > 0.99);
  const RealMatrix map =
      fidelity_map(zero, identity_target(), noisy, linspace(-2, 2, 5), linspace(-1, 1, 3), f.reg, f.proj);
  CHECK(map.rows() == 5);
  CHECK(map.cols() == 3);
  CHECK(map(2, 1) == doctest::Approx(1.0));
  CHECK(map(0, 1) < 1.0);
}

TEST_CASE("GRAPE increases fidelity monotonically") {
  Fixture f;
  Rng rng(6);
  const PulseSequence start = random_pulse(60, 20.0, kMw, 300.0, rng);
  NoiseModel noise;
  noise.grid_nodes = 3;
  GrapeOptions opts;
  opts.max_iterations = 15;
  const GrapeResult res = grape_optimize(start, default_cphase_target(), noise, rng, opts, f.reg, f.proj);
  REQUIRE(res.trace.size() >= 2);
  for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] >= res.trace[i - 1]);
  CHECK(res.trace.back() > res.trace.front());
  CHECK_NOTHROW(res.pulse.validate());
  for (Channel c : {Channel::RfN, Channel::RfC}) {
    for (double a : res.pulse.channel(c)) CHECK(a == 0.0);
  }
}

TEST_CASE("GRAPE respects the amplitude cap") {
  Fixture f;
  Rng rng(7);
  PulseSequence start = random_pulse(40, 20.0, kMw, 100.0, rng);
  start.amplitude_cap_khz = 150.0;
  NoiseModel quiet;
  quiet.sigma_mag_khz = 0.0;
  quiet.sigma_amp = 0.0;
  GrapeOptions opts;
  opts.max_iterations = 10;
  opts.initial_step_khz = 200.0;
  const GrapeResult res = grape_optimize(start, default_cphase_target(), quiet, rng, opts, f.reg, f.proj);
  for (Channel c : kMw) {
    for (double a : res.pulse.channel(c)) CHECK(std::abs(a) <= 150.0);
  }
}

TEST_CASE("identity target with a zero pulse converges immediately") {
  Fixture f;
  Rng rng(1);
  NoiseModel quiet;
  quiet.sigma_mag_khz = 0.0;
  quiet.sigma_amp = 0.0;
  const GrapeResult res = grape_optimize(PulseSequence::zeros(10, 20.0, kMw), identity_target(), quiet,
                                         rng, GrapeOptions{}, f.reg, f.proj);
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.trace.back() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("random pulses stay on their channels") {
  Rng rng(2);
  const PulseSequence p = random_pulse(50, 20.0, {Channel::F2Imag}, 75.0, rng);
  for (double a : p.channel(Channel::F2Imag)) CHECK(std::abs(a) <= 75.0);
  for (double a : p.channel(Channel::F1Real)) CHECK(a == 0.0);
}

}  // TEST_SUITE
