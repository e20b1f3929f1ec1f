#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ffcbf/barriers.hpp"
#include "ffcbf/cli.hpp"
#include "ffcbf/controllers.hpp"
#include "ffcbf/io.hpp"
#include "ffcbf/qp.hpp"
#include "ffcbf/scenario.hpp"

namespace py = pybind11;
using namespace ffcbf;

namespace {

ScenarioConfig config_from_text(const std::string& text) {
  return text.empty() ? ScenarioConfig{} : io::config_from_json(io::Json::parse(text));
}

py::dict summary_dict(const BatchSummary& s) {
  py::dict d;
  d["n_trials"] = s.n_trials;
  d["success_rate"] = s.success_rate;
  d["feas_rate"] = s.feas_rate;
  d["deadlock_rate"] = s.deadlock_rate;
  d["unsafe_rate"] = s.unsafe_rate;
  d["avg_time"] = s.avg_time ? py::cast(*s.avg_time) : py::none();
  return d;
}

py::dict trial_dict(const TrialResult& t) {
  py::dict d;
  d["trial_index"] = t.trial_index;
  d["seed"] = t.seed;
  d["success"] = t.success;
  d["always_feasible"] = t.always_feasible;
  d["deadlock"] = t.deadlock;
  d["unsafe"] = t.unsafe;
  d["timeout"] = t.timeout;
  d["completion_time"] = t.completion_time;
  d["min_h0"] = t.min_h0;
  d["min_H"] = t.min_H;
  d["steps"] = t.steps;
  d["error"] = t.error;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Future-focused control barrier function intersection simulator";
  m.attr("__version__") = cli::version();

  py::class_<VehicleState>(m, "VehicleState")
      .def(py::init<>())
      .def(py::init([](double x, double y, double psi, double beta, double v) {
             return VehicleState{x, y, psi, beta, v};
           }),
           py::arg("x"), py::arg("y"), py::arg("psi"), py::arg("beta"), py::arg("v"))
      .def_readwrite("x", &VehicleState::x)
      .def_readwrite("y", &VehicleState::y)
      .def_readwrite("psi", &VehicleState::psi)
      .def_readwrite("beta", &VehicleState::beta)
      .def_readwrite("v", &VehicleState::v)
      .def("__repr__", [](const VehicleState& s) {
        return "VehicleState(x=" + std::to_string(s.x) + ", y=" + std::to_string(s.y) + ", psi=" +
               std::to_string(s.psi) + ", beta=" + std::to_string(s.beta) + ", v=" + std::to_string(s.v) + ")";
      });

  m.def("step",
        [](const VehicleState& s, double omega, double a, double dt) {
          return step(s, {omega, a}, VehicleParams{}, dt);
        },
        py::arg("state"), py::arg("omega"), py::arg("a"), py::arg("dt") = 0.01);
  m.def("planar_velocity", &planar_velocity);
  m.def("lqr_gain", py::overload_cast<double, double, double>(&lqr_gain), py::arg("q_pos") = 1.0,
        py::arg("q_vel") = 2.0, py::arg("r") = 1.0);

  m.def("h0", py::overload_cast<const VehicleState&, const VehicleState&, double>(&h0), py::arg("si"),
        py::arg("sj"), py::arg("R") = 1.25);
  m.def("h_ff", [](const VehicleState& si, const VehicleState& sj) { return h_ff(si, sj, FfParams{}); });
  m.def("h_rff", [](const VehicleState& si, const VehicleState& sj) { return h_rff(si, sj, RffParams{}); });
  m.def("tau_hat", &tau_hat, py::arg("tau_star_hat"), py::arg("tau_bar") = 5.0, py::arg("k") = 1000.0);

  m.def("solve_qp",
        [](const Eigen::VectorXd& target, const Eigen::MatrixXd& A, const Eigen::VectorXd& lower) {
          QpProblem p(target);
          p.A = A;
          p.lower = lower;
          const QpSolution s = solve(p);
          return py::make_tuple(std::string(to_string(s.status)), s.u);
        },
        py::arg("target"), py::arg("A"), py::arg("lower"),
        "Projects target onto {u : A u >= lower}; returns (status, u).");

  m.def("default_config", [] { return io::config_to_json(ScenarioConfig{}).dump(2); },
        "Default configuration as JSON text.");
  m.def("run_trial",
        [](const std::string& config_json, std::size_t index) {
          return trial_dict(run_trial(config_from_text(config_json), index));
        },
        py::arg("config_json") = "", py::arg("index") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("run_batch",
        [](const std::string& config_json, std::size_t n_trials, unsigned threads) {
          BatchOptions opts;
          opts.threads = threads;
          BatchResult r;
          {
            py::gil_scoped_release release;
            r = run_batch(config_from_text(config_json), n_trials, opts);
          }
          py::list trials;
          for (const TrialResult& t : r.trials) trials.append(trial_dict(t));
          py::dict out = summary_dict(r.summary);
          out["trials"] = trials;
          return out;
        },
        py::arg("config_json") = "", py::arg("n_trials") = 10, py::arg("threads") = 0);

  py::register_exception<io::ConfigError>(m, "ConfigError", PyExc_ValueError);
}
