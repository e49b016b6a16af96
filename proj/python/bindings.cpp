#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <vector>

#include "nowpac/bench.hpp"
#include "nowpac/cli.hpp"
#include "nowpac/core.hpp"
#include "nowpac/errors.hpp"
#include "nowpac/subsolver.hpp"
#include "nowpac/surrogate.hpp"

namespace py = pybind11;
using namespace nowpac;

namespace {

/// A problem whose objective and constraints are Python callables. The
/// constraint count comes from evaluating the constraints at x0.
BlackBoxProblem python_problem(const std::string& name, const Vector& x0, py::function objective,
                               std::optional<py::function> constraints) {
  BlackBoxProblem p;
  p.name = name;
  p.n = static_cast<int>(x0.size());
  p.x0 = x0;
  p.r = constraints ? static_cast<int>((*constraints)(x0).cast<Vector>().size()) : 0;
  p.eval = [objective, constraints](const Vector& x) {
    Evaluation e;
    e.f = objective(x).cast<double>();
    e.c = constraints ? (*constraints)(x).cast<Vector>() : Vector();
    return e;
  };
  return p;
}

QuadraticModel to_model(const py::tuple& t) {
  if (t.size() != 3) throw DimensionMismatch("model must be a (c0, g, H) tuple");
  return {t[0].cast<double>(), t[1].cast<Vector>(), t[2].cast<Matrix>()};
}

SubproblemSpec make_spec(std::variant<QuadraticModel, LinearObjective> objective,
                         const std::vector<py::tuple>& constraints, double eps_b, double radius,
                         double p) {
  SubproblemSpec spec;
  spec.objective = std::move(objective);
  for (const auto& c : constraints) spec.constraint_models.push_back(to_model(c));
  spec.ibp = {eps_b, eps_b, p};
  spec.ibp.validate();
  spec.radius = radius;
  return spec;
}

SolverConfig config_or_default(const std::optional<SolverConfig>& config) {
  SolverConfig c = config.value_or(SolverConfig{});
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Derivative-free constrained trust-region optimization";

  auto error = py::register_exception<Error>(m, "NowpacError", PyExc_RuntimeError);
  py::register_exception<InvalidConfig>(m, "InvalidConfig", error);
  py::register_exception<UnknownProblemId>(m, "UnknownProblemId", error);
  py::register_exception<InfeasibleStart>(m, "InfeasibleStart", error);
  py::register_exception<SingularGeometry>(m, "SingularGeometry", error);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", error);
  py::register_exception<NonFiniteEvaluation>(m, "NonFiniteEvaluation", error);
  py::register_exception<SubproblemInfeasibleStart>(m, "SubproblemInfeasibleStart", error);
  py::register_exception<EmptyResults>(m, "EmptyResults", error);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def(py::init([](const py::kwargs& kwargs) {
        SolverConfig c;
        for (const auto& [key, value] : kwargs) {
          const std::string text = py::isinstance<py::bool_>(value)
                                       ? (value.cast<bool>() ? "true" : "false")
                                       : py::str(value).cast<std::string>();
          set_config_field(c, key.cast<std::string>(), text);
        }
        return c;
      }))
      .def_readwrite("eps_b", &SolverConfig::eps_b)
      .def_readwrite("eta_0", &SolverConfig::eta_0)
      .def_readwrite("eta_1", &SolverConfig::eta_1)
      .def_readwrite("gamma", &SolverConfig::gamma)
      .def_readwrite("gamma_inc", &SolverConfig::gamma_inc)
      .def_readwrite("omega", &SolverConfig::omega)
      .def_readwrite("eps_c", &SolverConfig::eps_c)
      .def_readwrite("mu", &SolverConfig::mu)
      .def_readwrite("p", &SolverConfig::p)
      .def_readwrite("q", &SolverConfig::q)
      .def_readwrite("rho_0", &SolverConfig::rho_0)
      .def_readwrite("rho_min", &SolverConfig::rho_min)
      .def_readwrite("rho_max", &SolverConfig::rho_max)
      .def_readwrite("mu_1", &SolverConfig::mu_1)
      .def_readwrite("max_evals", &SolverConfig::max_evals)
      .def_readwrite("feasibility_margin", &SolverConfig::feasibility_margin)
      .def_readwrite("noise_window", &SolverConfig::noise_window)
      .def_readwrite("tau_threshold", &SolverConfig::tau_threshold)
      .def_readwrite("nc_limit", &SolverConfig::nc_limit)
      .def_readwrite("early_termination", &SolverConfig::early_termination)
      .def_readwrite("seed", &SolverConfig::seed)
      .def_readwrite("scale_factor", &SolverConfig::scale_factor)
      .def_readwrite("lambda_threshold", &SolverConfig::lambda_threshold)
      .def_readwrite("eps_b_min_ratio", &SolverConfig::eps_b_min_ratio)
      .def_readwrite("infeasible_escalation", &SolverConfig::infeasible_escalation)
      .def_readwrite("eps_b_max_ratio", &SolverConfig::eps_b_max_ratio)
      .def("validate", &SolverConfig::validate)
      .def("set", &set_config_field, py::arg("key"), py::arg("value"))
      .def("__repr__", [](const SolverConfig& c) {
        std::ostringstream os;
        write_config(os, c);
        return os.str();
      });
  m.def("config_field_names", &config_field_names);

  py::class_<BlackBoxProblem>(m, "Problem")
      .def(py::init(&python_problem), py::arg("name"), py::arg("x0"), py::arg("objective"),
           py::arg("constraints") = py::none())
      .def_readonly("name", &BlackBoxProblem::name)
      .def_readonly("n", &BlackBoxProblem::n)
      .def_readonly("r", &BlackBoxProblem::r)
      .def_readonly("x0", &BlackBoxProblem::x0)
      .def_property_readonly("x_opt",
                             [](const BlackBoxProblem& p) -> std::optional<Vector> {
                               if (!p.known_optimum) return std::nullopt;
                               return p.known_optimum->x;
                             })
      .def_property_readonly("f_opt",
                             [](const BlackBoxProblem& p) -> std::optional<double> {
                               if (!p.known_optimum) return std::nullopt;
                               return p.known_optimum->f;
                             })
      .def("__call__", [](const BlackBoxProblem& p, const Vector& x) {
        if (x.size() != p.n) throw DimensionMismatch("point has the wrong dimension");
        const Evaluation e = p.eval(x);
        return py::make_tuple(e.f, e.c);
      });
  m.def("problem", &problem_by_name, py::arg("name"));
  m.def("problem_names", &problem_names);

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("k", &IterationRecord::k)
      .def_readonly("x", &IterationRecord::x)
      .def_readonly("f", &IterationRecord::f)
      .def_readonly("rho", &IterationRecord::rho)
      .def_readonly("alpha", &IterationRecord::alpha)
      .def_readonly("r_k", &IterationRecord::r_k)
      .def_property_readonly("status", [](const IterationRecord& r) { return to_string(r.status); })
      .def_readonly("hessian_norms", &IterationRecord::hessian_norms)
      .def_readonly("evals_so_far", &IterationRecord::evals_so_far);

  py::class_<OptimizationResult>(m, "OptimizationResult")
      .def_readonly("x_best", &OptimizationResult::x_best)
      .def_readonly("f_best", &OptimizationResult::f_best)
      .def_readonly("c_best", &OptimizationResult::c_best)
      .def_readonly("history", &OptimizationResult::history)
      .def_readonly("evaluations", &OptimizationResult::evaluations)
      .def_readonly("final_rho", &OptimizationResult::final_rho)
      .def_readonly("message", &OptimizationResult::message)
      .def_property_readonly("termination",
                             [](const OptimizationResult& r) { return to_string(r.termination); });

  m.def(
      "optimize",
      [](const BlackBoxProblem& problem, const std::optional<SolverConfig>& config) {
        return optimize(problem, config_or_default(config));
      },
      py::arg("problem"), py::arg("config") = py::none());
  m.def(
      "history_text",
      [](const OptimizationResult& result, const SolverConfig& config, const std::string& name) {
        std::ostringstream os;
        write_history(os, result, config, name);
        return os.str();
      },
      py::arg("result"), py::arg("config"), py::arg("problem_name"));

  py::class_<BenchmarkResult>(m, "BenchmarkResult")
      .def_readonly("case_name", &BenchmarkResult::case_name)
      .def_readonly("sc", &BenchmarkResult::sc)
      .def_readonly("n_evals", &BenchmarkResult::n_evals)
      .def_readonly("d_x", &BenchmarkResult::d_x)
      .def_readonly("d_f_abs", &BenchmarkResult::d_f_abs)
      .def_readonly("d_f_rel", &BenchmarkResult::d_f_rel)
      .def_readonly("n_saved", &BenchmarkResult::n_saved)
      .def_readonly("terminated_by", &BenchmarkResult::terminated_by)
      .def_readonly("seed", &BenchmarkResult::seed)
      .def_readonly("feasible_history", &BenchmarkResult::feasible_history);

  m.def(
      "run_benchmark",
      [](const std::string& problem, double sc, double delta_f, double delta_c, int replicates,
         std::uint64_t seed, const std::optional<SolverConfig>& config, int threads,
         const std::string& history_dir) {
        BenchmarkCase bc;
        bc.name = problem;
        bc.problem = problem_by_name(problem);
        bc.sc = sc;
        if (delta_f > 0.0 || delta_c > 0.0) bc.noise = NoiseSpec{delta_f, delta_c};
        bc.replicates = replicates;
        bc.seed = seed;
        SolverConfig c = config.value_or(SolverConfig{});
        c.rho_min = sc;
        c.validate();
        py::gil_scoped_release release;
        return run_benchmark(bc, c, BenchmarkOptions{history_dir, threads});
      },
      py::arg("problem"), py::arg("sc") = 1e-5, py::arg("delta_f") = 0.0, py::arg("delta_c") = 0.0,
      py::arg("replicates") = 1, py::arg("seed") = 0, py::arg("config") = py::none(),
      py::arg("threads") = 1, py::arg("history_dir") = "");
  m.def("aggregate", &aggregate, py::arg("results"));
  m.def(
      "emit_table",
      [](const std::vector<BenchmarkResult>& results, const std::string& format) {
        if (format != "csv" && format != "markdown") throw InvalidConfig("format must be csv or markdown");
        return emit_table(results, format == "csv" ? TableFormat::csv : TableFormat::markdown);
      },
      py::arg("results"), py::arg("format") = "csv");

  m.def(
      "mfn_model",
      [](const std::vector<Vector>& points, const std::vector<double>& values) {
        if (points.empty() || points.size() != values.size())
          throw DimensionMismatch("need one value per point");
        InterpolationSet set(points.front(), Evaluation{values.front(), Vector()});
        for (std::size_t i = 1; i < points.size(); ++i) set.add(points[i], Evaluation{values[i], Vector()});
        const QuadraticModel q = build_mfn_model(set, values);
        return py::make_tuple(q.c0, q.g, q.H);
      },
      py::arg("points"), py::arg("values"),
      "Minimum Frobenius-norm interpolant about points[0] as (c0, g, H).");
  m.def(
      "trial_step",
      [](const py::tuple& objective, const std::vector<py::tuple>& constraints, double eps_b,
         double radius, double p) {
        const SubproblemSolution sol =
            solve_trial_step(make_spec(to_model(objective), constraints, eps_b, radius, p));
        return py::make_tuple(sol.s, sol.objective_value);
      },
      py::arg("objective"), py::arg("constraints") = std::vector<py::tuple>{}, py::arg("eps_b") = 10.0,
      py::arg("radius") = 1.0, py::arg("p") = 0.0,
      "Model minimizer over the offset feasible set and the ball as (s, decrease).");
  m.def(
      "criticality",
      [](const Vector& g, const std::vector<py::tuple>& constraints, double eps_b, double radius,
         double p) {
        return solve_criticality(g, make_spec(LinearObjective{g}, constraints, eps_b, radius, p));
      },
      py::arg("g"), py::arg("constraints") = std::vector<py::tuple>{}, py::arg("eps_b") = 10.0,
      py::arg("radius") = 1.0, py::arg("p") = 0.0);

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"nowpac"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line tool; returns (exit_code, stdout, stderr).");
}
