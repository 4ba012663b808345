#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cli.hpp"
#include "swarmopt/baseline.hpp"
#include "swarmopt/errors.hpp"
#include "swarmopt/io.hpp"
#include "swarmopt/optimizer.hpp"
#include "swarmopt/verify.hpp"

namespace py = pybind11;
using namespace swarmopt;

namespace {

py::list trace_rows(const std::vector<TraceRow>& trace) {
  py::list out;
  for (const TraceRow& r : trace) {
    py::dict d;
    d["iter"] = r.iter;
    d["best_makespan"] = r.best_makespan;
    d["accept_c1"] = r.accept_c1 < 0 ? py::object(py::none()) : py::object(py::float_(r.accept_c1));
    d["accept_c2"] = r.accept_c2 < 0 ? py::object(py::none()) : py::object(py::float_(r.accept_c2));
    d["batch"] = r.batch;
    d["level"] = r.level;
    out.append(d);
  }
  return out;
}

py::dict run_dict(const RunResult& r) {
  py::dict d;
  d["feasible"] = r.feasible;
  d["x"] = r.x;
  d["makespan"] = r.makespan;
  d["level"] = r.level;
  d["init_x"] = r.init.x;
  d["init_makespan"] = r.init.makespan;
  d["trace"] = trace_rows(r.trace);
  d["warnings"] = r.warnings;
  return d;
}

py::list report_list(const VerificationReport& r) {
  py::list out;
  for (const auto& c : r.checks) {
    py::dict d;
    d["constraint"] = c.constraint;
    d["subject"] = c.subject;
    d["margin"] = c.margin;
    d["passed"] = c.passed;
    out.append(d);
  }
  return out;
}

OptimizerConfig config_from(const std::string& json) { return json.empty() ? OptimizerConfig{} : parse_config(json); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Modular Bayesian optimization of multi-quadrotor time allocations";

  py::register_exception<Error>(m, "SwarmError", PyExc_RuntimeError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", m.attr("SwarmError"));

  py::class_<Environment>(m, "Environment")
      .def_readonly("vehicles", &Environment::vehicles)
      .def_property_readonly("segments", &Environment::segments)
      .def_readonly("d_min", &Environment::d_min)
      .def_property_readonly("formation_segments", [](const Environment& e) { return e.formation.segment_ends; })
      .def("__repr__", [](const Environment& e) {
        return "<Environment vehicles=" + std::to_string(e.vehicles) + " segments=" + std::to_string(e.segments()) + ">";
      });

  m.def("load_environment", [](const std::filesystem::path& p) { return load_environment(p); }, py::arg("path"));
  m.def("parse_environment", [](const std::string& text) { return parse_environment(text); }, py::arg("text"));

  m.def(
      "initialize",
      [](const Environment& env, const std::string& config) {
        const Initialization init = initialize(env, config_from(config));
        py::dict d;
        d["x"] = init.x;
        d["makespan"] = init.makespan;
        d["slowdown"] = init.slowdown;
        return d;
      },
      py::arg("env"), py::arg("config") = "");

  m.def(
      "evaluate",
      [](const Environment& env, const Allocation& x, int level, const std::string& config) {
        const EvaluationRecord r = evaluate(env, x, level, config_from(config));
        py::dict d;
        d["vehicle_labels"] = r.vehicle_labels;
        d["pair_labels"] = r.pair_labels;
        d["makespan"] = r.makespan;
        d["feasible"] = r.feasible();
        d["diagnostic"] = r.diagnostic;
        return d;
      },
      py::arg("env"), py::arg("x"), py::arg("level") = 0, py::arg("config") = "");

  m.def(
      "optimize",
      [](const Environment& env, const std::string& config, bool multi) {
        const OptimizerConfig c = config_from(config);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = multi ? run_multi(env, c) : run_single(env, c);
        }
        return run_dict(r);
      },
      py::arg("env"), py::arg("config") = "", py::arg("multi") = false);

  m.def(
      "formation_baseline",
      [](const Environment& env) {
        const BaselineResult b = formation_baseline(env);
        py::dict d;
        d["makespan"] = b.makespan;
        d["eta"] = b.eta;
        d["durations"] = b.center_durations;
        return d;
      },
      py::arg("env"));

  m.def(
      "verify",
      [](const Environment& env, const Allocation& x, bool high_fidelity, const std::string& config) {
        const OptimizerConfig c = config_from(config);
        const auto trajs = build_trajectories(env, x, c);
        std::vector<const FlatTrajectory*> ptrs;
        for (const auto& t : trajs) ptrs.push_back(&t);
        const VerificationReport r = verify_trajectories(env, ptrs, x, verify_options(c, high_fidelity));
        return py::make_tuple(r.passed, report_list(r));
      },
      py::arg("env"), py::arg("x"), py::arg("high_fidelity") = false, py::arg("config") = "");

  m.def(
      "equalize_intervals",
      [](const Allocation& x, const std::vector<std::pair<int, int>>& ranges) { return equalize_intervals(x, ranges); },
      py::arg("x"), py::arg("ranges"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line with the given arguments; returns (exit code, stdout, stderr).");
}
