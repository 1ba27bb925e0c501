#include <pybind11/pybind11.h>
#include <pybind11/operators.h>
#include <pybind11/stl.h>

#include "kdvlab/birkhoff.hpp"
#include "kdvlab/error.hpp"
#include "kdvlab/experiment.hpp"
#include "kdvlab/verify.hpp"

namespace py = pybind11;
using namespace kdvlab;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

FourierField from_modes(int K, int N, const std::vector<std::pair<int, double>>& entries) {
  FourierField u(K, N);
  for (const auto& [k, v] : entries) {
    if (k == 0 || std::abs(k) > K) throw InvalidArgument("mode index outside +-1..+-K");
    u = u.with_mode(k, u[k] + v);
  }
  return u;
}

}  // namespace

PYBIND11_MODULE(_kdvlab, m) {
  m.doc() = "Periodic KdV: Hill spectra, actions, flows, experiments";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<SpectrumError>(m, "SpectrumError", base.ptr());
  py::register_exception<BlowUpError>(m, "BlowUpError", base.ptr());

  py::class_<FourierField>(m, "FourierField")
      .def(py::init<int, int>(), py::arg("modes"), py::arg("grid_size"))
      .def(py::init<std::vector<double>, std::vector<double>, int>(), py::arg("cos_part"), py::arg("sin_part"),
           py::arg("grid_size"))
      .def_static("from_modes", &from_modes, py::arg("modes"), py::arg("grid_size"), py::arg("entries"),
                  "entries: list of (signed k, value)")
      .def_property_readonly("modes", &FourierField::modes)
      .def_property_readonly("grid_size", &FourierField::grid_size)
      .def_property_readonly("cos_part", [](const FourierField& u) { return to_vector(u.cos_part()); })
      .def_property_readonly("sin_part", [](const FourierField& u) { return to_vector(u.sin_part()); })
      .def("__getitem__", &FourierField::operator[])
      .def("with_mode", &FourierField::with_mode)
      .def("resized", &FourierField::resized)
      .def("l2_norm_squared", &FourierField::l2_norm_squared)
      .def("sobolev_norm", [](const FourierField& u, double p) { return sobolev_norm(u, p); })
      .def("values", [](const FourierField& u) { return synthesize(u); }, "point values on the grid")
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(py::self * double())
      .def(double() * py::self)
      .def(py::self == py::self)
      .def("__repr__", [](const FourierField& u) {
        return "FourierField(modes=" + std::to_string(u.modes()) + ", grid_size=" + std::to_string(u.grid_size()) + ")";
      });

  py::class_<HillSpectrum>(m, "HillSpectrum")
      .def_readonly("n_max", &HillSpectrum::n_max)
      .def_readonly("z", &HillSpectrum::z)
      .def_readonly("eigenvalues", &HillSpectrum::lambda, "lambda_0 .. lambda_{2 n_max}")
      .def_readonly("mu", &HillSpectrum::mu)
      .def_readonly("gaps", &HillSpectrum::gaps);

  py::class_<ActionSpectrum>(m, "ActionSpectrum")
      .def_readonly("n_max", &ActionSpectrum::n_max)
      .def_readonly("I", &ActionSpectrum::I)
      .def_readonly("gaps", &ActionSpectrum::gaps)
      .def_readonly("truncation_estimate", &ActionSpectrum::truncation_estimate);

  m.def("periodic_spectrum", [](const FourierField& u, int n) { return periodic_spectrum(u, n); }, py::arg("u"),
        py::arg("n_max"));
  m.def("hill_spectrum", [](const FourierField& u, int n, double z) { return hill_spectrum(u, n, z); }, py::arg("u"),
        py::arg("n_max"), py::arg("z") = 0.0);
  m.def("discriminant",
        [](const FourierField& u, double l) {
          const auto d = discriminant(u, l);
          return py::make_tuple(d.value, d.derivative);
        },
        py::arg("u"), py::arg("lam"), "(Delta, dDelta/dlambda)");
  m.def("matrix_oracle_spectrum", [](const FourierField& u, int n) { return matrix_oracle_spectrum(u, n); },
        py::arg("u"), py::arg("n_max"));
  m.def("actions", [](const FourierField& u, int n) { return actions(u, n); }, py::arg("u"), py::arg("n_max"));
  m.def("percival_residual", [](const FourierField& u, int n) { return percival_residual(u, n); }, py::arg("u"),
        py::arg("n_max"));
  m.def("percival_residual", [](const FourierField& u, const ActionSpectrum& I) { return percival_residual(u, I); },
        py::arg("u"), py::arg("actions"));
  m.def("hamiltonian", &hamiltonian);
  m.def("evolve_to", [](const FourierField& u, double T, double dt) { return evolve_to(u, T, dt); }, py::arg("u"),
        py::arg("T"), py::arg("dt"), py::call_guard<py::gil_scoped_release>(), "unperturbed KdV flow");
  m.def("frequency_vector",
        [](const std::vector<double>& I, int mm) {
          ActionSpectrum a;
          a.n_max = I.size();
          a.I = I;
          return frequency_vector(a, mm);
        },
        py::arg("I"), py::arg("m"));
  m.def("resonance_indicator",
        [](const std::vector<double>& W, double delta, int mm, int K) {
          const auto h = resonance_indicator(W, {delta, mm, K});
          return py::make_tuple(h.resonant, h.k, h.value);
        },
        py::arg("W"), py::arg("delta"), py::arg("m"), py::arg("K"), "(resonant, minimizing k, min |<W,k>|)");
  m.def("format_double", &format_double);
  m.def("field_to_json", [](const FourierField& u) { return field_to_json(u).dump(); });
  m.def("field_from_json", [](const std::string& s) { return field_from_json(Json::parse(s)); });
  m.def("run_experiment",
        [](const std::string& config, const std::string& out) {
          ExperimentConfig c;
          try {
            c = parse_config(Json::parse(config));
          } catch (const Json::parse_error& e) {
            throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
          }
          RunResult r;
          {
            py::gil_scoped_release release;
            r = run_experiment(c, out);
          }
          return py::make_tuple(r.status, r.summary.dump());
        },
        py::arg("config"), py::arg("out_dir"), "(status, results JSON)");
  m.def("run_criterion",
        [](int id, const std::string& level) {
          CriterionResult r;
          {
            py::gil_scoped_release release;
            r = run_criterion(id, verify_level_from_string(level));
          }
          py::dict d;
          d["id"] = r.id;
          d["title"] = r.title;
          d["passed"] = r.passed;
          d["skipped"] = r.skipped;
          d["detail"] = r.detail;
          d["seconds"] = r.seconds;
          return d;
        },
        py::arg("id"), py::arg("level") = "fast");
}
