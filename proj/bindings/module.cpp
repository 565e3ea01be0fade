#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "starmec/baselines.hpp"
#include "starmec/channel.hpp"
#include "starmec/es.hpp"
#include "starmec/experiments.hpp"
#include "starmec/lp.hpp"
#include "starmec/model.hpp"
#include "starmec/ms.hpp"
#include "starmec/ts.hpp"

namespace py = pybind11;
using namespace starmec;

PYBIND11_MODULE(_core, m) {
  m.doc() = "STAR-RIS wireless-powered MEC computation-rate optimization";

  py::enum_<Protocol>(m, "Protocol")
      .value("ES", Protocol::Es)
      .value("MS", Protocol::Ms)
      .value("TS", Protocol::Ts)
      .value("CONVENTIONAL", Protocol::ConventionalRis);
  py::enum_<Side>(m, "Side")
      .value("REFLECTION", Side::Reflection)
      .value("TRANSMISSION", Side::Transmission);
  py::enum_<Direction>(m, "Direction")
      .value("DOWN", Direction::Down)
      .value("UP", Direction::Up);

  py::class_<SystemParams>(m, "SystemParams")
      .def(py::init<>())
      .def_readwrite("bandwidth_hz", &SystemParams::bandwidth_hz)
      .def_readwrite("noise_power_w", &SystemParams::noise_power_w)
      .def_readwrite("eta", &SystemParams::eta)
      .def_readwrite("p_max_w", &SystemParams::p_max_w)
      .def_readwrite("f_max_hz", &SystemParams::f_max_hz)
      .def_readwrite("kappa", &SystemParams::kappa)
      .def_readwrite("period_s", &SystemParams::period_s)
      .def_readwrite("ap_power_w", &SystemParams::ap_power_w)
      .def_readwrite("num_elements", &SystemParams::num_elements)
      .def_readwrite("num_ues", &SystemParams::num_ues)
      .def_readwrite("cycles_per_bit", &SystemParams::cycles_per_bit)
      .def_readwrite("epsilon_tol", &SystemParams::epsilon_tol)
      .def_readwrite("delta_tol", &SystemParams::delta_tol)
      .def_readwrite("n_max", &SystemParams::n_max)
      .def("validate", &SystemParams::validate);

  py::class_<PathLossParams>(m, "PathLossParams")
      .def(py::init<>())
      .def_readwrite("rho_linear", &PathLossParams::rho_linear)
      .def_readwrite("alpha_ue_ris_up", &PathLossParams::alpha_ue_ris_up)
      .def_readwrite("alpha_ris_ap_up", &PathLossParams::alpha_ris_ap_up)
      .def_readwrite("alpha_ris_ue_down", &PathLossParams::alpha_ris_ue_down)
      .def_readwrite("alpha_ap_ris_down", &PathLossParams::alpha_ap_ris_down)
      .def_readwrite("seed", &PathLossParams::seed);

  py::class_<GeometrySpec>(m, "GeometrySpec")
      .def(py::init<>())
      .def_readwrite("ap_ris_distance_m", &GeometrySpec::ap_ris_distance_m)
      .def_readwrite("ue_ris_min_m", &GeometrySpec::ue_ris_min_m)
      .def_readwrite("ue_ris_max_m", &GeometrySpec::ue_ris_max_m);

  py::class_<UePlacement>(m, "UePlacement")
      .def(py::init<>())
      .def_readwrite("ap_ris_distance_m", &UePlacement::ap_ris_distance_m)
      .def_readwrite("side", &UePlacement::side)
      .def_readwrite("ue_ris_distance_m", &UePlacement::ue_ris_distance_m);

  py::class_<ChannelSet>(m, "ChannelSet")
      .def(py::init<>())
      .def_readwrite("ap_ris_down", &ChannelSet::ap_ris_down)
      .def_readwrite("ap_ris_up", &ChannelSet::ap_ris_up)
      .def_readwrite("ris_ue_down", &ChannelSet::ris_ue_down)
      .def_readwrite("ris_ue_up", &ChannelSet::ris_ue_up)
      .def_readwrite("sides", &ChannelSet::sides)
      .def("num_elements", &ChannelSet::num_elements)
      .def("num_ues", &ChannelSet::num_ues)
      .def_static("zeros", &ChannelSet::zeros);

  py::class_<StarCoefficients>(m, "StarCoefficients")
      .def(py::init<>())
      .def_static("uniform", &StarCoefficients::uniform, py::arg("m"),
                  py::arg("beta_reflect") = 0.5)
      .def_static("ts_default", &StarCoefficients::ts_default)
      .def("violations", &StarCoefficients::violations)
      .def("element_coeffs", &StarCoefficients::element_coeffs)
      .def_readwrite("beta", &StarCoefficients::beta)
      .def_readwrite("theta", &StarCoefficients::theta);

  py::class_<AllocationState>(m, "AllocationState")
      .def(py::init<>())
      .def_static("zeros", &AllocationState::zeros)
      .def_readwrite("tau0", &AllocationState::tau0)
      .def_readwrite("tau_r", &AllocationState::tau_r)
      .def_readwrite("tau_t", &AllocationState::tau_t)
      .def_readwrite("p", &AllocationState::p)
      .def_readwrite("f", &AllocationState::f);

  py::class_<RateReport>(m, "RateReport")
      .def_readonly("total_bits", &RateReport::total_bits)
      .def_readonly("local_bits", &RateReport::local_bits)
      .def_readonly("offload_bits", &RateReport::offload_bits)
      .def_readonly("harvested_j", &RateReport::harvested_j)
      .def_readonly("consumed_j", &RateReport::consumed_j)
      .def_readonly("energy_residual_j", &RateReport::energy_residual_j)
      .def_readonly("energy_residual_norm", &RateReport::energy_residual_norm)
      .def_readonly("violations", &RateReport::violations)
      .def("feasible", &RateReport::feasible, py::arg("tol") = 1e-9)
      .def("max_residual", &RateReport::max_residual);

  py::class_<SolveOptions>(m, "SolveOptions")
      .def(py::init<>())
      .def_readwrite("init_seed", &SolveOptions::init_seed)
      .def_readwrite("jobs", &SolveOptions::jobs)
      .def_readwrite("tau0_step_s", &SolveOptions::tau0_step_s);

  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("protocol", &SolveReport::protocol)
      .def_readonly("total_bits", &SolveReport::total_bits)
      .def_readonly("alloc", &SolveReport::alloc)
      .def_readonly("coeffs", &SolveReport::coeffs)
      .def_readonly("rate", &SolveReport::rate)
      .def_readonly("trace", &SolveReport::trace)
      .def_readonly("tau0_curve", &SolveReport::tau0_curve)
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("converged", &SolveReport::converged)
      .def_readonly("sdp_relaxed_bits", &SolveReport::sdp_relaxed_bits)
      .def_readonly("max_rank_residual_rel", &SolveReport::max_rank_residual_rel);

  m.def("sample_placement", &sample_placement, py::arg("geometry"),
        py::arg("k_r"), py::arg("k_t"), py::arg("seed"));
  m.def("generate_channels", &generate_channels, py::arg("params"),
        py::arg("placement"), py::arg("pathloss"));
  m.def("compose_channel", &compose_channel, py::arg("channels"),
        py::arg("coeffs"), py::arg("ue"), py::arg("direction"));
  m.def("harvested_energy", &harvested_energy, py::arg("params"),
        py::arg("channels"), py::arg("coeffs"), py::arg("tau0"), py::arg("ue"));
  m.def("offload_bits", &offload_bits, py::arg("params"), py::arg("channels"),
        py::arg("coeffs"), py::arg("alloc"), py::arg("protocol"), py::arg("ue"));
  m.def("local_bits_and_energy", &local_bits_and_energy, py::arg("params"),
        py::arg("alloc"), py::arg("ue"));
  m.def("evaluate", &evaluate, py::arg("params"), py::arg("channels"),
        py::arg("coeffs"), py::arg("alloc"), py::arg("protocol"));

  m.def("alternate_es", &alternate_es, py::arg("params"), py::arg("channels"),
        py::arg("tau0"), py::arg("opts") = SolveOptions{},
        py::call_guard<py::gil_scoped_release>());
  m.def("search_tau0_es", &search_tau0_es, py::arg("params"),
        py::arg("channels"), py::arg("opts") = SolveOptions{},
        py::call_guard<py::gil_scoped_release>());
  m.def("solve_ms", &solve_ms, py::arg("params"), py::arg("channels"),
        py::arg("opts") = SolveOptions{},
        py::call_guard<py::gil_scoped_release>());
  m.def("solve_ts", &solve_ts, py::arg("params"), py::arg("channels"),
        py::arg("opts") = SolveOptions{},
        py::call_guard<py::gil_scoped_release>());
  m.def("conventional_ris_solve", &conventional_ris_solve, py::arg("params"),
        py::arg("channels"), py::arg("opts") = SolveOptions{},
        py::call_guard<py::gil_scoped_release>());

  py::class_<LpProblem>(m, "LpProblem")
      .def(py::init<>())
      .def_readwrite("objective", &LpProblem::objective)
      .def_readwrite("constraints", &LpProblem::constraints)
      .def_readwrite("bounds", &LpProblem::bounds);
  py::enum_<LpStatus>(m, "LpStatus")
      .value("OPTIMAL", LpStatus::Optimal)
      .value("INFEASIBLE", LpStatus::Infeasible)
      .value("UNBOUNDED", LpStatus::Unbounded);
  py::class_<LpSolution>(m, "LpSolution")
      .def_readonly("status", &LpSolution::status)
      .def_readonly("x", &LpSolution::x)
      .def_readonly("value", &LpSolution::value);
  m.def("solve_lp", &solve_lp, py::arg("problem"), py::arg("tol") = 1e-9);

  py::class_<BruteForceGrids>(m, "BruteForceGrids")
      .def(py::init<>())
      .def_readwrite("tau0_step_s", &BruteForceGrids::tau0_step_s)
      .def_readwrite("p_points", &BruteForceGrids::p_points)
      .def_readwrite("f_points", &BruteForceGrids::f_points)
      .def_readwrite("phase_points", &BruteForceGrids::phase_points)
      .def_readwrite("beta_points", &BruteForceGrids::beta_points)
      .def_readwrite("time_points", &BruteForceGrids::time_points)
      .def("refined", &BruteForceGrids::refined);
  py::class_<BruteForceResult>(m, "BruteForceResult")
      .def_readonly("total_bits", &BruteForceResult::total_bits)
      .def_readonly("alloc", &BruteForceResult::alloc)
      .def_readonly("coeffs", &BruteForceResult::coeffs);
  m.def("brute_force_small", &brute_force_small, py::arg("params"),
        py::arg("channels"), py::arg("protocol"),
        py::arg("grids") = BruteForceGrids{}, py::arg("budget") = 1e8,
        py::call_guard<py::gil_scoped_release>());

  m.def("load_config", &load_config, py::arg("path"));
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("protocol", &ExperimentConfig::protocol)
      .def_readonly("sweep_axis", &ExperimentConfig::sweep_axis)
      .def_readonly("sweep_values", &ExperimentConfig::sweep_values)
      .def_readonly("output_path", &ExperimentConfig::output_path);
}
