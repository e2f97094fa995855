#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "maglab/errors.hpp"
#include "maglab/flow.hpp"
#include "maglab/runner.hpp"

namespace py = pybind11;
using namespace maglab;
using nlohmann::json;

namespace {

std::shared_ptr<const SurfaceModel> surface_of(const std::string& spec) {
  const json j = json::parse(spec, nullptr, false);
  return std::make_shared<const SurfaceModel>(surface_from_config(j.is_discarded() ? json(spec) : j));
}

// States as an (n, 4) array of t, x, y, theta.
py::array_t<double> orbit(const std::string& surface, double lambda, std::array<double, 3> p0, double T,
                          double dt) {
  IntegratorSettings in;
  in.dt = dt;
  const OrbitSegment o = [&] {
    py::gil_scoped_release release;
    return integrate(FlowParams(lambda, surface_of(surface), in), SMPoint(p0[0], p0[1], p0[2]), T);
  }();
  py::array_t<double> out({static_cast<py::ssize_t>(o.size()), py::ssize_t{4}});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const auto r = static_cast<py::ssize_t>(i);
    a(r, 0) = o.times[i];
    for (int k = 0; k < 3; ++k) a(r, k + 1) = o.states[i][k];
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Magnetic flows on a genus-2 surface.";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  static py::exception<HypothesisViolation> refused(m, "HypothesisViolation", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const HypothesisViolation& e) {
      py::object err = py::reinterpret_borrow<py::object>(refused.ptr())(e.what());
      err.attr("hypothesis") = e.hypothesis;
      PyErr_SetObject(refused.ptr(), err.ptr());
    }
  });

  m.def("experiments", &experiment_names);
  m.def("default_config", [](const std::string& e) { return default_config(e).dump(); });
  m.def("check_hypotheses", [](const std::string& e, const std::string& config) {
    check_hypotheses(ExperimentConfig::from_json(e, json::parse(config)));
  });
  m.def(
      "run",
      [](const std::string& e, const std::string& config, const std::string& out) {
        const ExperimentConfig c = ExperimentConfig::from_json(e, json::parse(config));
        py::gil_scoped_release release;
        const RunReport r = run(c);
        if (!out.empty()) write_outputs(r, out);
        return r.to_json().dump();
      },
      py::arg("experiment"), py::arg("config") = "{}", py::arg("out") = "");

  m.def(
      "curvature",
      [](const std::string& surface, py::array_t<double> x, py::array_t<double> y) {
        const auto s = surface_of(surface);
        auto X = x.unchecked<1>();
        auto Y = y.unchecked<1>();
        if (X.shape(0) != Y.shape(0)) throw DomainError("x and y differ in length");
        py::array_t<double> K(X.shape(0));
        auto k = K.mutable_unchecked<1>();
        for (py::ssize_t i = 0; i < X.shape(0); ++i) k(i) = s->curvature(cplx(X(i), Y(i)));
        return K;
      },
      py::arg("surface"), py::arg("x"), py::arg("y"));
  m.def("area", [](const std::string& surface) { return surface_of(surface)->area(); });
  m.def("orbit", &orbit, py::arg("surface"), py::arg("lambda_"), py::arg("p0"), py::arg("T"),
        py::arg("dt") = 1e-3);
}
