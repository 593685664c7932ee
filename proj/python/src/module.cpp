#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "afshape/acf.hpp"
#include "afshape/constellation.hpp"
#include "afshape/designer.hpp"
#include "afshape/errors.hpp"
#include "afshape/harness.hpp"
#include "afshape/io.hpp"
#include "afshape/receivers.hpp"
#include "afshape/waveform.hpp"

namespace py = pybind11;

namespace {

// JSON crosses the boundary as text; Python callers get plain dicts back
// through the json module on the Python side.
afs::io::JsonDocument document(const std::string& text, const char* origin) {
  return afs::io::parse_json(text, origin);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ambiguity-function shaping for sensing-secure OFDM waveforms";

  auto base = py::register_exception<afs::Error>(m, "AfshapeError", PyExc_RuntimeError);
  py::register_exception<afs::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<afs::NameError>(m, "NameError", base.ptr());
  py::register_exception<afs::InfeasibleSecurityError>(m, "InfeasibleSecurityError", base.ptr());
  py::register_exception<afs::InfeasibleAcfError>(m, "InfeasibleAcfError", base.ptr());
  py::register_exception<afs::SolverError>(m, "SolverError", base.ptr());

  py::class_<afs::Constellation>(m, "Constellation")
      .def(py::init([](const std::string& name) { return afs::make_constellation(name); }), py::arg("name"))
      .def_readonly("name", &afs::Constellation::name)
      .def_readonly("points", &afs::Constellation::points)
      .def_readonly("mu4", &afs::Constellation::mu4)
      .def_readonly("nu_m2", &afs::Constellation::nu_m2)
      .def("__repr__", [](const afs::Constellation& c) {
        return "Constellation('" + c.name + "', mu4=" + std::to_string(c.mu4) + ")";
      });

  py::class_<afs::SecureAcfSpec>(m, "SecureAcfSpec")
      .def(py::init([](double alpha_frac, int num_peaks) { return afs::SecureAcfSpec{alpha_frac, num_peaks}; }),
           py::arg("alpha_frac"), py::arg("num_peaks"))
      .def_static("from_kappa_q", &afs::SecureAcfSpec::from_kappa_q, py::arg("kappa"), py::arg("q"))
      .def_readwrite("alpha_frac", &afs::SecureAcfSpec::alpha_frac)
      .def_readwrite("num_peaks", &afs::SecureAcfSpec::num_peaks)
      .def_property_readonly("kappa", &afs::SecureAcfSpec::kappa)
      .def_property_readonly("p", &afs::SecureAcfSpec::p)
      .def_property_readonly("q", &afs::SecureAcfSpec::q);

  py::class_<afs::SecurityMetrics>(m, "SecurityMetrics")
      .def_readonly("psl", &afs::SecurityMetrics::psl_linear)
      .def_readonly("isl", &afs::SecurityMetrics::isl_linear)
      .def_readonly("psl_db", &afs::SecurityMetrics::psl_db)
      .def_readonly("isl_db", &afs::SecurityMetrics::isl_db);

  m.def("structured_allocation",
        [](const afs::SecureAcfSpec& spec, int n, int n0) { return afs::structured_allocation(spec, n, n0).power; },
        py::arg("spec"), py::arg("n"), py::arg("n0") = 1, "Comb power allocation as a float array.");

  m.def("expected_sq_acf",
        [](const afs::RVector& power, const afs::Constellation& c) {
          afs::PowerAllocation a{power, std::nullopt};
          afs::validate_allocation(a, 0.0);
          return afs::expected_sq_acf_exact(a, c).squared;
        },
        py::arg("power"), py::arg("constellation"));

  m.def("metrics",
        [](const afs::RVector& power, const afs::Constellation& c) {
          afs::PowerAllocation a{power, std::nullopt};
          afs::validate_allocation(a, 0.0);
          return afs::metrics_from_profile(afs::expected_sq_acf_exact(a, c));
        },
        py::arg("power"), py::arg("constellation"), "PSL and ISL of the expected squared ACF.");

  m.def("metrics_closed_form", py::overload_cast<const afs::SecureAcfSpec&, const afs::Constellation&>(
                                   &afs::metrics_closed_form),
        py::arg("spec"), py::arg("constellation"));

  m.def("snr_loss",
        [](const afs::RVector& power, const afs::Constellation& c) { return afs::snr_loss(power, c); },
        py::arg("power"), py::arg("constellation"), "Linear RF-vs-MF output SNR ratio.");

  m.def("select_kappa", &afs::select_kappa, py::arg("eps_isl"), py::arg("eps_psl"), py::arg("mu4"),
        py::arg("n"));

  m.def("design",
        [](const std::string& request_json) {
          const afs::DesignResult r = afs::solve_p2(afs::io::design_request_from_json(document(request_json, "<request>")));
          return afs::io::to_json(r).dump();
        },
        py::arg("request_json"), "Solve a design request given as JSON text; returns JSON text.");

  m.def("experiment_ids", &afs::experiment_ids);

  m.def("run_experiment",
        [](const std::string& config_json) {
          const afs::ExperimentConfig cfg = afs::config_from_json(document(config_json, "<config>"));
          afs::ExperimentResult result;
          {
            py::gil_scoped_release release;
            result = afs::run_experiment(cfg);
          }
          py::dict tables;
          for (const auto& t : result.tables) tables[py::str(t.name)] = t.csv;
          return py::make_tuple(tables, result.summary.dump());
        },
        py::arg("config_json"), "Run one experiment; returns ({name: csv_text}, summary_json).");

  m.attr("__version__") = afs::kToolVersion;
}
