#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hqc/io.hpp"
#include "hqc/runner.hpp"

namespace py = pybind11;
using namespace hqc;

namespace {

// Node values as an (n_q, n_p) array; storage is row-major in (i, j).
py::array_t<double> as_grid_array(const PhaseGrid& g, const RealField& v) {
  py::array_t<double> out({g.n_q(), g.n_p()});
  std::copy(v.data(), v.data() + v.size(), out.mutable_data());
  return out;
}

py::dict diagnostics_columns(const std::vector<Diagnostics>& ticks) {
  const auto n = static_cast<py::ssize_t>(ticks.size());
  py::array_t<double> t(n), trace(n), purity(n), min_eig(n), entropy(n), qm_purity(n);
  for (py::ssize_t k = 0; k < n; ++k) {
    const Diagnostics& d = ticks[static_cast<std::size_t>(k)];
    t.mutable_at(k) = d.time;
    trace.mutable_at(k) = d.trace;
    purity.mutable_at(k) = d.purity_ratio;
    min_eig.mutable_at(k) = d.min_eig;
    entropy.mutable_at(k) = d.qm_entropy;
    qm_purity.mutable_at(k) = d.qm_purity;
  }
  py::list marginals;
  for (const Diagnostics& d : ticks) marginals.append(py::cast(d.quantum_marginal));
  py::dict out;
  out["t"] = t;
  out["trace"] = trace;
  out["purity_ratio"] = purity;
  out["min_eig"] = min_eig;
  out["qm_entropy"] = entropy;
  out["qm_purity"] = qm_purity;
  out["quantum_marginal"] = marginals;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hybrid quantum-classical dynamics on a phase-space grid";

  py::register_exception<NumericalBreakdown>(m, "NumericalBreakdown", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<PhaseGrid>(m, "PhaseGrid")
      .def(py::init<double, double, double, double, int, int>(), py::arg("q_min"), py::arg("q_max"),
           py::arg("p_min"), py::arg("p_max"), py::arg("n_q"), py::arg("n_p"))
      .def_property_readonly("n_q", &PhaseGrid::n_q)
      .def_property_readonly("n_p", &PhaseGrid::n_p)
      .def_property_readonly("dq", &PhaseGrid::dq)
      .def_property_readonly("dp", &PhaseGrid::dp)
      .def_property_readonly("cell_area", &PhaseGrid::cell_area)
      .def("q", &PhaseGrid::q)
      .def("p", &PhaseGrid::p);

  m.def(
      "gaussian_state",
      [](const PhaseGrid& g, double q0, double p0, double sq, double sp) {
        return as_grid_array(g, gaussian_state(g, q0, p0, sq, sp).values());
      },
      py::arg("grid"), py::arg("q0"), py::arg("p0"), py::arg("sigma_q"), py::arg("sigma_p"));

  m.def(
      "harmonic_period",
      [](const PhaseGrid& g, double q0, double p0, double sigma, int steps) {
        const ClassicalDensity rho0 = gaussian_state(g, q0, p0, sigma, sigma);
        const LiouvilleSolver solver(g, ClassicalHamiltonian::harmonic(), 2.0 * M_PI / steps);
        ClassicalDensity rho = rho0;
        {
          py::gil_scoped_release release;
          for (int k = 0; k < steps; ++k) rho = solver.step(rho);
        }
        return py::make_tuple(as_grid_array(g, rho0.values()), as_grid_array(g, rho.values()));
      },
      py::arg("grid"), py::arg("q0"), py::arg("p0"), py::arg("sigma"), py::arg("steps"),
      "Initial and one-period harmonic-oscillator densities.");

  m.def(
      "von_neumann_entropy",
      [](const ComplexMatrix& rho) { return von_neumann_entropy(QuantumDensity::from_matrix(rho)); },
      py::arg("rho"));
  m.def("min_eigenvalue", &min_eigenvalue, py::arg("matrix"));
  m.def("gaussian_decoherence", &gaussian_decoherence, py::arg("gap"), py::arg("sigma_p"), py::arg("t"),
        py::arg("hbar") = 1.0);
  m.def("gaussian_half_time", &gaussian_half_time, py::arg("gap"), py::arg("sigma_p"), py::arg("hbar") = 1.0);

  py::class_<RunConfig>(m, "RunConfig")
      .def_readwrite("name", &RunConfig::name)
      .def_property_readonly("mode", [](const RunConfig& c) { return std::string(to_string(c.mode)); })
      .def_property_readonly("dim", [](const RunConfig& c) { return c.scenario.dim(); })
      .def_property_readonly("notices", [](const RunConfig& c) { return c.notices; })
      .def_property_readonly("sigmas", [](const RunConfig& c) { return c.sigmas; })
      .def_property(
          "output_directory", [](const RunConfig& c) { return c.output.directory; },
          [](RunConfig& c, const std::filesystem::path& p) { c.output.directory = p; })
      .def("resolved_keys", [](const RunConfig& c) { return resolved_keys(c); });

  m.def("parse_config", [](const std::string& text) { return parse_config(text); }, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));
  m.def("describe", &describe, py::arg("config"));

  m.def(
      "execute",
      [](const RunConfig& cfg) {
        std::ostringstream log;
        RunOutcome out;
        {
          py::gil_scoped_release release;
          out = execute(cfg, log);
        }
        py::dict r;
        r["exit_code"] = out.exit_code;
        r["log"] = log.str();
        r["diagnostics"] = diagnostics_columns(out.ticks);
        r["onset_time"] = out.violation ? py::cast(out.violation->onset_time) : py::none();
        if (out.study) {
          py::list rows;
          for (const StudyRow& row : out.study->rows)
            rows.append(py::make_tuple(row.sigma, row.onset_time, row.half_time));
          r["study_rows"] = rows;
          r["fit_exponent"] = out.study->fit_exponent;
        }
        py::list files;
        for (const auto& f : out.files) files.append(f.string());
        r["files"] = files;
        return r;
      },
      py::arg("config"),
      "Run the configured mode; numerical breakdown raises NumericalBreakdown.");

  m.def(
      "run",
      [](const RunConfig& cfg) {
        std::ostringstream log;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run(cfg, log);
        }
        return py::make_tuple(code, log.str());
      },
      py::arg("config"), "Exit-code wrapper: (code, log) with 0 clean, 2 violation, 1 failure.");
}
