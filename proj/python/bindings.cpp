#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlmcq/errors.hpp"
#include "mlmcq/estimators.hpp"
#include "mlmcq/finite_mdp.hpp"
#include "mlmcq/harness.hpp"
#include "mlmcq/hyperparams.hpp"
#include "mlmcq/lqg.hpp"

namespace py = pybind11;
using namespace mlmcq;

namespace {

py::dict record_dict(const RunRecord& r) {
  py::dict d;
  d["run_id"] = r.run_id;
  d["level"] = r.level;
  d["estimate"] = r.estimate;
  d["wall_time_s"] = r.wall_time_s;
  d["transitions"] = r.transitions;
  d["actions"] = r.actions;
  d["seed"] = r.seed;
  d["error"] = r.error;
  return d;
}

// Configs cross the boundary as JSON text; the Python side uses json.dumps.
py::tuple run_json(const std::string& text) {
  const ExperimentConfig cfg = config_from_json(nlohmann::json::parse(text));
  const auto reference = experiment_reference(cfg);
  std::vector<RunRecord> records;
  {
    py::gil_scoped_release release;
    records = run_experiment(cfg);
  }
  py::list out;
  for (const auto& r : records) out.append(record_dict(r));
  return py::make_tuple(out, summary_json(records, reference, cfg.echo).dump());
}

}  // namespace

PYBIND11_MODULE(_mlmcq, m) {
  m.doc() = "Multilevel Monte Carlo estimation of soft Q-functions";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<InvalidParameter> invalid(m, "InvalidParameter", base.ptr());
  static py::exception<ContractionViolation> contraction(m, "ContractionViolation", base.ptr());
  static py::exception<ConvergenceError> convergence(m, "ConvergenceError", base.ptr());
  static py::exception<ResourceError> resource(m, "ResourceError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidParameter& e) {
      invalid(e.what());
    } catch (const ContractionViolation& e) {
      contraction(e.what());
    } catch (const ConvergenceError& e) {
      convergence(e.what());
    } catch (const ResourceError& e) {
      resource(e.what());
    } catch (const Error& e) {
      base(e.what());
    } catch (const nlohmann::json::exception& e) {
      invalid(e.what());
    }
  });

  py::class_<ValueBounds>(m, "ValueBounds")
      .def_readonly("alpha", &ValueBounds::alpha)
      .def_readonly("beta", &ValueBounds::beta);
  m.def("derive_bounds", &derive_bounds, py::arg("c_min"), py::arg("c_max"), py::arg("gamma"));
  m.def("truncate", py::overload_cast<double, double, double>(&truncate), py::arg("x"),
        py::arg("alpha"), py::arg("beta"));

  m.def("mlmcb_cost", &mlmcb_cost, py::arg("n"), py::arg("M"), py::arg("K"));
  m.def("mlmcu_expected_cost", &mlmcu_expected_cost, py::arg("n"), py::arg("M"), py::arg("r"));

  py::class_<PlainConstants>(m, "PlainConstants")
      .def_readonly("L", &PlainConstants::L)
      .def_readonly("L_prime", &PlainConstants::L_prime)
      .def_readonly("C", &PlainConstants::C)
      .def_readonly("gamma_L", &PlainConstants::gamma_L)
      .def_readonly("contracts", &PlainConstants::contracts);
  m.def("plain_constants", &plain_constants, py::arg("alpha"), py::arg("beta"), py::arg("tau"),
        py::arg("gamma"));

  py::class_<SimpleMcSchedule>(m, "SimpleMcSchedule")
      .def_readonly("n", &SimpleMcSchedule::n)
      .def_readonly("M", &SimpleMcSchedule::M)
      .def_readonly("K", &SimpleMcSchedule::K);
  m.def("simple_mc_schedule", &simple_mc_schedule, py::arg("epsilon"), py::arg("gamma"),
        py::arg("alpha"), py::arg("beta"), py::arg("tau"), py::arg("e0"));

  py::class_<MlmcbSchedule>(m, "MlmcbSchedule")
      .def_readonly("n", &MlmcbSchedule::n)
      .def_readonly("M0", &MlmcbSchedule::M0)
      .def_readonly("K", &MlmcbSchedule::K)
      .def_readonly("Lambda", &MlmcbSchedule::Lambda)
      .def_readonly("D", &MlmcbSchedule::D)
      .def_readonly("kappa", &MlmcbSchedule::kappa);
  m.def("mlmcb_schedule", &mlmcb_schedule, py::arg("epsilon"), py::arg("gamma"),
        py::arg("alpha"), py::arg("beta"), py::arg("tau"));
  m.def("mlmcb_error_bound", &mlmcb_error_bound, py::arg("gamma"), py::arg("alpha"),
        py::arg("beta"), py::arg("tau"), py::arg("n"), py::arg("M"), py::arg("K"),
        py::arg("e0"));

  py::class_<LqgProblem>(m, "LqgProblem")
      .def_readonly("A", &LqgProblem::A)
      .def_readonly("B", &LqgProblem::B)
      .def_readonly("R1", &LqgProblem::R1)
      .def_readonly("R2", &LqgProblem::R2)
      .def_readonly("gamma", &LqgProblem::gamma)
      .def_readonly("tau", &LqgProblem::tau);
  m.def("benchmark_problem", &benchmark_problem, py::arg("d"), py::arg("eps"), py::arg("gamma"));

  py::class_<RiccatiSolution>(m, "RiccatiSolution")
      .def_readonly("P", &RiccatiSolution::P)
      .def_readonly("c", &RiccatiSolution::c)
      .def_readonly("iterations", &RiccatiSolution::iterations)
      .def_readonly("residual", &RiccatiSolution::residual);
  m.def("riccati_solve", &riccati_solve, py::arg("problem"), py::arg("tol") = 1e-12,
        py::arg("max_iter") = 1000000);
  m.def("reference_q", &reference_q, py::arg("problem"), py::arg("solution"), py::arg("s"),
        py::arg("a"));

  m.def("reference_instance_q", [](double gamma, double tau) {
    return value_iteration(reference_instance(gamma, tau));
  }, py::arg("gamma"), py::arg("tau"), "Q* of the 3x3 reference instance by value iteration");

  m.def("rmsre", [](const std::vector<double>& x, double ref) { return rmsre(x, ref); },
        py::arg("estimates"), py::arg("reference"));
  m.def("run_json", &run_json, py::arg("config"),
        "Run an experiment from JSON text; returns (records, summary JSON text).");
}
