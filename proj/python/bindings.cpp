#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tmhd/analysis.hpp"
#include "tmhd/cli.hpp"
#include "tmhd/io.hpp"

namespace py = pybind11;
using namespace tmhd;

namespace {

py::array_t<double> diagnostics_array(const std::vector<DiagnosticsRecord>& rows) {
  py::array_t<double> out({static_cast<py::ssize_t>(rows.size()), py::ssize_t{10}});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double v[] = {r.t,         r.E_kin,           r.E_mag,        r.h1_sq,         r.h2_sq,
                        r.l4_fourth, r.grad_ysq_sq, r.taming_fraction, r.div_residual, r.cross_helicity};
    for (py::ssize_t j = 0; j < 10; ++j) a(static_cast<py::ssize_t>(i), j) = v[j];
  }
  return out;
}

py::dict trajectory_dict(const TrajectoryOutput& t) {
  py::dict d;
  d["exit_status"] = to_string(t.exit_status);
  d["message"] = t.message;
  d["steps"] = t.steps_taken;
  d["final_time"] = t.final_time;
  d["sup_h1_sq"] = t.sup_h1_sq;
  d["h2_integral"] = t.h2_integral;
  d["diagnostics"] = diagnostics_array(t.diagnostics);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Galerkin simulator for stochastic tamed MHD on the 3-torus";

  auto base = py::register_exception<Error>(m, "TmhdError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init(&SimConfig::defaults))
      .def_static("parse", &parse_config, py::arg("text"))
      .def_static("load", [](const std::string& path) { return load_config(path); }, py::arg("path"))
      .def("serialize", &serialize_config)
      .def_property_readonly("n", [](const SimConfig& c) { return c.grid.n; })
      .def_property_readonly("cutoff", [](const SimConfig& c) { return c.grid.cutoff; })
      .def_property_readonly("steps", &SimConfig::steps)
      .def_property_readonly("family", [](const SimConfig& c) { return c.family_name; })
      .def_property_readonly("sigma_mass", [](const SimConfig& c) { return c.family.metadata().sigma_mass; })
      .def_readwrite("dt", &SimConfig::dt)
      .def_readwrite("horizon", &SimConfig::horizon)
      .def_readwrite("seed", &SimConfig::seed)
      .def_readwrite("stream", &SimConfig::stream)
      .def_readwrite("record_every", &SimConfig::record_every)
      .def_property(
          "taming_N", [](const SimConfig& c) { return c.taming.N; },
          [](SimConfig& c, double N) { c.taming.N = N; })
      .def("validate", &SimConfig::validate);

  m.def(
      "simulate",
      [](const SimConfig& cfg) {
        TrajectoryOutput t;
        {
          py::gil_scoped_release release;
          t = simulate(cfg);
        }
        return trajectory_dict(t);
      },
      py::arg("config"), "Single trajectory; diagnostics as an (records, 10) array.");

  m.def(
      "verify",
      [](std::uint64_t seed, int samples, int n) {
        RngStream rng{seed, 0, 0};
        FunctionalEstimateReport r;
        {
          py::gil_scoped_release release;
          r = verify_functional_estimates(GridSpec::with_default_cutoff(n), samples, rng);
        }
        py::dict checks;
        for (const auto& c : r.checks) {
          checks[py::str(c.name)] = py::make_tuple(c.observed, c.bound, c.passed);
        }
        for (const auto& a : r.assumptions.checks) {
          checks[py::str("assumption:" + a.name)] = py::make_tuple(a.worst_ratio, 1.0, a.passed);
        }
        return py::make_tuple(r.all_passed(), checks);
      },
      py::arg("seed") = 1, py::arg("samples") = 100, py::arg("n") = 16,
      "Returns (all_passed, {name: (observed, bound, passed)}).");

  m.def(
      "strong_order",
      [](const SimConfig& cfg, const std::vector<double>& levels, int paths, double reference) {
        py::gil_scoped_release release;
        const auto r = estimate_strong_order(cfg, levels, paths, reference);
        return std::make_tuple(r.order, r.errors);
      },
      py::arg("config"), py::arg("levels"), py::arg("paths"), py::arg("reference"));

  m.def(
      "read_snapshot",
      [](const std::string& path) {
        const auto s = read_snapshot(path);
        py::dict d;
        d["t"] = s.t;
        d["taming_N"] = s.taming_N;
        d["n"] = s.y.grid().n;
        d["cutoff"] = s.y.grid().cutoff;
        d["h1_sq"] = sobolev_norm_sq(s.y, 1.0);
        return d;
      },
      py::arg("path"));

  m.def(
      "run_command",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return run_command(args);
      },
      py::arg("args"), "Runs the command-line driver; returns its exit code.");

  m.attr("DIAGNOSTICS_COLUMNS") = std::string(kDiagnosticsHeader);
  m.attr("BUILD_ID") = build_id();
}
