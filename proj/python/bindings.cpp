#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "isaacslab/bi_solver.hpp"
#include "isaacslab/cli.hpp"
#include "isaacslab/errors.hpp"
#include "isaacslab/expr.hpp"
#include "isaacslab/game_model.hpp"
#include "isaacslab/hamiltonian.hpp"
#include "isaacslab/policy.hpp"
#include "isaacslab/scenario.hpp"
#include "isaacslab/value_field.hpp"
#include "isaacslab/verifier.hpp"

namespace py = pybind11;
using namespace isaacslab;

namespace {

using FieldPtr = std::shared_ptr<const ValueField>;
// pybind11 holders cannot be pointers to const; fields are never mutated here.
using PyField = std::shared_ptr<ValueField>;

void check_dim(const std::vector<double>& v, int d, const char* what) {
  if (static_cast<int>(v.size()) != d) {
    throw ConfigError(std::string(what) + " must have " + std::to_string(d) + " entries");
  }
}

std::vector<FeedbackPolicy> parse_all(const std::vector<std::string>& texts, const FieldPtr& field) {
  std::vector<FeedbackPolicy> out;
  for (const auto& t : texts) out.push_back(FeedbackPolicy::parse(t, field));
  return out;
}

py::dict payoff_dict(const PayoffEstimate& p) {
  py::dict d;
  d["mean"] = p.mean;
  d["standard_error"] = p.standard_error;
  d["n_paths"] = p.n_paths;
  d["terminal_mean"] = p.terminal_mean;
  d["running_mean"] = p.running_mean;
  d["ill_defined"] = p.ill_defined;
  d["nonfinite_fraction"] = p.nonfinite_fraction;
  d["positive_part"] = p.positive_part;
  d["negative_part"] = p.negative_part;
  d["clamped_fraction"] = p.clamped_fraction;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bellman-Isaacs solver and Monte-Carlo verification core";
  m.attr("__version__") = cli::kVersion;

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
  static py::exception<expr::ExprError> expr_error(m, "ExprError", error.ptr());
  static py::exception<SolverError> solver_error(m, "SolverError", error.ptr());
  static py::exception<SimulationError> simulation_error(m, "SimulationError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const expr::ExprError& e) {
      expr_error(e.what());
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const SolverError& e) {
      solver_error(e.what());
    } catch (const SimulationError& e) {
      simulation_error(e.what());
    } catch (const Error& e) {
      error(e.what());
    }
  });

  py::class_<expr::Ast>(m, "Expression")
      .def(py::init([](const std::string& text) { return expr::parse(text); }), py::arg("text"))
      .def("evaluate",
           [](const expr::Ast& a, const std::map<std::string, double>& env) { return expr::eval(a, env); },
           py::arg("env") = std::map<std::string, double>{})
      .def("free_vars", [](const expr::Ast& a) { return expr::free_vars(a); })
      .def("fold_constants", [](const expr::Ast& a) { return expr::fold_constants(a); })
      .def_property_readonly("source", &expr::Ast::source)
      .def("__str__", [](const expr::Ast& a) { return expr::to_string(a); })
      .def("__repr__", [](const expr::Ast& a) { return "Expression('" + expr::to_string(a) + "')"; });

  py::class_<GameSpec>(m, "GameSpec")
      .def_property_readonly("kind",
                             [](const GameSpec& s) { return s.kind == ModelKind::Game ? "game" : "control"; })
      .def_readonly("d", &GameSpec::d)
      .def_readonly("m", &GameSpec::m)
      .def_readonly("T", &GameSpec::T)
      .def_readonly("name", &GameSpec::name)
      .def_property_readonly("n_controls1", [](const GameSpec& s) { return s.U1.size(); })
      .def_property_readonly("n_controls2", [](const GameSpec& s) { return s.U2.size(); })
      .def("canonical", &GameSpec::canonical);

  m.def("load_spec", [](const std::string& text) { return load_spec(text); }, py::arg("text"),
        "Model from scenario text.");
  m.def("load_scenario_spec", [](const std::string& path) { return load_scenario(path).spec; },
        py::arg("path"), "Model sections of a scenario file.");

  m.def(
      "h0_cv",
      [](const GameSpec& spec, double s, const std::vector<double>& x, const std::vector<double>& p,
         const std::vector<double>& u1, const std::vector<double>& u2) {
        check_dim(x, spec.d, "x");
        check_dim(p, spec.d, "p");
        return h0_cv(spec, s, x, p, u1, u2);
      },
      py::arg("spec"), py::arg("s"), py::arg("x"), py::arg("p"), py::arg("u1"), py::arg("u2"));

  m.def(
      "hamiltonian",
      [](const GameSpec& spec, double s, const std::vector<double>& x, const std::vector<double>& p) {
        check_dim(x, spec.d, "x");
        check_dim(p, spec.d, "p");
        const HamiltonianReport r = hamiltonian(spec, s, x, p);
        py::dict d;
        d["lower"] = r.lower;
        d["upper"] = r.upper;
        d["gap"] = r.gap;
        d["argmax_u1"] = r.argmax_u1;
        d["argmin_u2"] = r.argmin_u2;
        return d;
      },
      py::arg("spec"), py::arg("s"), py::arg("x"), py::arg("p"),
      "Lower and upper Hamiltonians with their selections.");

  py::class_<Grid>(m, "Grid")
      .def(py::init<std::vector<double>, std::vector<double>, std::vector<int>, int, double>(),
           py::arg("lo"), py::arg("hi"), py::arg("counts"), py::arg("time_levels"), py::arg("horizon"))
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("nodes", &Grid::nodes)
      .def_property_readonly("time_levels", &Grid::time_levels)
      .def_property_readonly("dt", &Grid::dt)
      .def("time", &Grid::time, py::arg("level"))
      .def("coords", [](const Grid& g, std::size_t node) {
        std::vector<double> x(static_cast<std::size_t>(g.dim()));
        g.coords(node, x);
        return x;
      });

  m.def("min_time_levels", &min_time_levels, py::arg("spec"), py::arg("grid"),
        "Smallest time-level count the explicit scheme accepts.");

  py::class_<ValueField, PyField>(m, "ValueField")
      .def_property_readonly("grid", &ValueField::grid)
      .def_property_readonly("equation", [](const ValueField& f) { return equation_name(f.equation()); })
      .def_property_readonly("lax_friedrichs", [](const ValueField& f) { return f.scheme().lax_friedrichs; })
      .def_property_readonly("dt_max", [](const ValueField& f) { return f.scheme().dt_max; })
      .def_property_readonly("values",
                             [](const ValueField& f) {
                               const auto v = f.values();
                               py::array_t<double> a({static_cast<py::ssize_t>(f.grid().time_levels()),
                                                      static_cast<py::ssize_t>(f.grid().nodes())});
                               std::copy(v.begin(), v.end(), a.mutable_data());
                               return a;
                             })
      .def(
          "interpolate",
          [](const ValueField& f, double s, const std::vector<double>& x) {
            check_dim(x, f.grid().dim(), "x");
            return f.interpolate(s, x);
          },
          py::arg("s"), py::arg("x"))
      .def(
          "gradient",
          [](const ValueField& f, double s, const std::vector<double>& x) {
            check_dim(x, f.grid().dim(), "x");
            std::vector<double> out(x.size());
            f.interpolate_gradient(s, x, out);
            return out;
          },
          py::arg("s"), py::arg("x"));

  m.def(
      "solve",
      [](const GameSpec& spec, const Grid& grid, const std::string& side, unsigned workers) -> PyField {
        SolverOptions opts;
        opts.side = parse_side(side);
        opts.workers = workers;
        py::gil_scoped_release release;
        return std::make_shared<ValueField>(spec.kind == ModelKind::Control
                                                      ? solve_hjb_control(spec, grid, opts)
                                                      : solve_bi(spec, grid, opts));
      },
      py::arg("spec"), py::arg("grid"), py::arg("side") = "upper", py::arg("workers") = 1u,
      "Upper or lower Bellman-Isaacs value (the HJB value for control models).");

  m.def(
      "residual_max",
      [](const GameSpec& spec, const ValueField& field, unsigned workers) {
        py::gil_scoped_release release;
        return residual(spec, field, workers).max_abs;
      },
      py::arg("spec"), py::arg("field"), py::arg("workers") = 1u);

  m.def(
      "payoff",
      [](const GameSpec& spec, const std::string& policy1, const std::string& policy2, double t,
         const std::vector<double>& x0, std::size_t paths, int steps, std::uint64_t seed, unsigned workers,
         const PyField& field) {
        check_dim(x0, spec.d, "x0");
        const FeedbackPolicy z1 =
            spec.kind == ModelKind::Control ? FeedbackPolicy::passive() : FeedbackPolicy::parse(policy1, field);
        const FeedbackPolicy z2 = FeedbackPolicy::parse(policy2, field);
        PayoffEstimate p;
        {
          py::gil_scoped_release release;
          p = payoff(spec, z1, z2, t, x0, McParams{paths, steps, seed, workers});
        }
        return payoff_dict(p);
      },
      py::arg("spec"), py::arg("policy1"), py::arg("policy2"), py::arg("t"), py::arg("x0"),
      py::arg("paths") = 10000, py::arg("steps") = 200, py::arg("seed") = 1, py::arg("workers") = 1u,
      py::arg("field") = PyField{},
      "Monte-Carlo payoff of a policy pair; policies are \"star\" or ';'-separated expressions.");

  m.def(
      "verify_saddle",
      [](const GameSpec& spec, const PyField& field, const std::vector<std::string>& deviations1,
         const std::vector<std::string>& deviations2, double t, const std::vector<double>& x0,
         std::size_t paths, int steps, std::uint64_t seed, unsigned workers) {
        check_dim(x0, spec.d, "x0");
        const auto dev1 = parse_all(deviations1, field);
        const auto dev2 = parse_all(deviations2, field);
        SaddleReport r;
        {
          py::gil_scoped_release release;
          r = verify_saddle(spec, field, dev1, dev2, t, x0, McParams{paths, steps, seed, workers});
        }
        py::list devs;
        for (const auto& d : r.deviations) {
          py::dict e;
          e["player"] = d.player == Player::One ? 1 : 2;
          e["label"] = d.label;
          e["payoff"] = payoff_dict(d.payoff);
          e["difference"] = d.difference.mean;
          e["difference_se"] = d.difference.standard_error;
          e["holds"] = d.holds;
          e["separated"] = d.separated;
          devs.append(e);
        }
        py::dict out;
        out["value"] = r.value;
        out["allowance"] = r.allowance;
        out["star"] = payoff_dict(r.star);
        out["value_matches"] = r.value_matches;
        out["deviations"] = devs;
        out["passed"] = r.passed;
        return out;
      },
      py::arg("spec"), py::arg("field"), py::arg("deviations1"), py::arg("deviations2"), py::arg("t"),
      py::arg("x0"), py::arg("paths") = 10000, py::arg("steps") = 200, py::arg("seed") = 1,
      py::arg("workers") = 1u, "Saddle inequalities of the synthesized policies under common random numbers.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return std::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool; returns (exit_code, stdout, stderr).");
}
