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

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nvmetro/budget.hpp"
#include "nvmetro/commands.hpp"
#include "nvmetro/interferometer.hpp"
#include "nvmetro/metrology.hpp"
#include "nvmetro/spin_model.hpp"
#include "nvmetro/stats.hpp"

namespace py = pybind11;
using namespace nvmetro;

namespace {

void export_metrology(py::module_& m) {
  py::class_<CollectiveSpinState>(m, "CollectiveSpinState")
      .def_readonly("n", &CollectiveSpinState::n)
      .def_readonly("amplitudes", &CollectiveSpinState::amplitudes);

  m.def("coherent_spin_state", &coherent_spin_state, py::arg("n"), py::arg("alpha"), py::arg("phi"));
  m.def("ghz_state", &ghz_state, py::arg("n"));
  m.def("dicke_state", &dicke_state, py::arg("n"), py::arg("m"));
  m.def("twin_fock_state", &twin_fock_state, py::arg("n"));
  m.def("one_axis_twisted_state", &one_axis_twisted_state, py::arg("n"), py::arg("mu"));
  m.def("qfi_generator", &qfi_generator, py::arg("state"), py::arg("direction"));
  m.def("qfi_pure", &qfi_pure, py::arg("psi"), py::arg("dpsi"));
  m.def("cramer_rao_bound", &cramer_rao_bound, py::arg("fisher"), py::arg("n_repetitions"));
  m.def("entanglement_witness", &entanglement_witness, py::arg("qfi"), py::arg("n_spins"));

  py::class_<VisibilityQfi>(m, "VisibilityQfi")
      .def_readonly("qfi", &VisibilityQfi::qfi)
      .def_readonly("db_over_sql", &VisibilityQfi::db_over_sql);
  m.def("qfi_from_visibility", &qfi_from_visibility, py::arg("visibility"), py::arg("n_spins"));
  m.def("visibility_from_db", &visibility_from_db, py::arg("db"), py::arg("n_spins"));
  m.def("scaling_prediction", &scaling_prediction, py::arg("n"),
        py::arg("one_spin_visibility") = 0.91, py::arg("per_spin_factor") = 0.96);

  py::class_<ScalingScan>(m, "ScalingScan")
      .def_readonly("qfi", &ScalingScan::qfi)
      .def_readonly("argmax_n", &ScalingScan::argmax_n)
      .def_readonly("plateau", &ScalingScan::plateau)
      .def_readonly("max_qfi", &ScalingScan::max_qfi)
      .def_readonly("unimodal", &ScalingScan::unimodal);
  m.def("scan_scaling", &scan_scaling, py::arg("n_max"), py::arg("one_spin_visibility") = 0.91,
        py::arg("per_spin_factor") = 0.96);
}

void export_budget(py::module_& m) {
  m.def("nv_negative_fidelity", &nv_negative_fidelity, py::arg("p_ion"), py::arg("p_nv0"), py::arg("rsb"));
  m.def("nuclear_polarization_bound", &nuclear_polarization_bound, py::arg("p_e"));
  m.def("chopped_survival", [](double p_joint, double p_nv) { return chopped_survival(p_joint, p_nv); },
        py::arg("p_joint"), py::arg("p_nv"));
  m.def(
      "survival_probability_t1",
      [](double plateau, double y1, double y2) {
        const auto s = survival_probability_t1(plateau, y1, y2);
        return py::make_tuple(s.probability, s.error);
      },
      py::arg("plateau_mean"), py::arg("y_before"), py::arg("y_after"));
  m.def(
      "overall_fidelity",
      [](const std::vector<std::tuple<std::string, double, int>>& rows) {
        ErrorBudgetTable t;
        for (const auto& [label, f, p] : rows) t.entries.push_back({label, f, p, false});
        return overall_fidelity(t);
      },
      py::arg("rows"), "Product of fidelity**power over (label, fidelity, power) rows.");
}

void export_stats(py::module_& m) {
  py::class_<FringeModel>(m, "FringeModel")
      .def(py::init<>())
      .def_readwrite("visibility", &FringeModel::visibility)
      .def_readwrite("n_spins", &FringeModel::n_spins)
      .def_readwrite("offset_phase", &FringeModel::offset_phase)
      .def("probability", &FringeModel::probability)
      .def("working_point", &FringeModel::working_point);

  py::class_<MeasurementCampaign>(m, "MeasurementCampaign")
      .def(py::init<>())
      .def_readwrite("true_phase", &MeasurementCampaign::true_phase)
      .def_readwrite("nu", &MeasurementCampaign::nu)
      .def_readwrite("n_estimates", &MeasurementCampaign::n_estimates)
      .def_readwrite("model", &MeasurementCampaign::model)
      .def_readwrite("seed", &MeasurementCampaign::seed);

  py::class_<CampaignResult>(m, "CampaignResult")
      .def_readonly("estimates", &CampaignResult::estimates)
      .def_readonly("mean", &CampaignResult::mean)
      .def_readonly("variance", &CampaignResult::variance)
      .def_readonly("predicted_variance", &CampaignResult::predicted_variance)
      .def_readonly("clamped", &CampaignResult::clamped);

  py::register_exception<ZeroSlopeError>(m, "ZeroSlopeError", PyExc_ValueError);
  m.def("run_campaign", &run_campaign, py::arg("campaign"),
        py::call_guard<py::gil_scoped_release>());
  m.def("predicted_variance", &predicted_variance, py::arg("model"), py::arg("nu"));
}

void export_interferometer(py::module_& m) {
  m.def(
      "ideal_fringe_fit",
      [](int n_spins, int points) {
        if (n_spins < 1 || n_spins > 3) throw py::value_error("n_spins must be 1, 2 or 3");
        const auto setup = InterferometerSetup::defaults();
        const CircuitBuilder b = [&](double phi) {
          if (n_spins == 1) return build_one_spin_circuit(phi, setup);
          if (n_spins == 2) return build_two_spin_circuit(phi, setup);
          return build_three_spin_circuit(phi, setup);
        };
        const FringeFit f = extract_visibility(fringe(b, linspace(-kPi, kPi, points), setup));
        py::dict d;
        d["visibility"] = f.visibility;
        d["frequency"] = f.frequency;
        d["phase_offset"] = f.phase_offset;
        d["offset"] = f.offset;
        d["rms_residual"] = f.rms_residual;
        return d;
      },
      py::arg("n_spins"), py::arg("points") = 65,
      "Fit of the noiseless fringe of the 1-, 2- or 3-spin circuit.");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the nvmetro library";
  m.attr("__version__") = NVMETRO_VERSION;
  export_metrology(m);
  export_budget(m);
  export_stats(m);
  export_interferometer(m);

  m.def(
      "run_command",
      [](const std::string& name, const std::string& config, const std::string& out_dir,
         std::optional<std::uint64_t> seed, int threads) {
        CommandOptions o;
        o.config_path = config;
        o.out_dir = out_dir;
        o.seed = seed;
        o.threads = threads;
        py::gil_scoped_release release;
        return run_command(name, o);
      },
      py::arg("name"), py::arg("config") = "", py::arg("out_dir") = "out",
      py::arg("seed") = py::none(), py::arg("threads") = 0,
      "Runs a CLI command and returns its exit code.");
}
