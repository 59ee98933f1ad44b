// Python bindings. Structured values cross the boundary as JSON text and are
// decoded on the Python side.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "ibmvar/errors.hpp"
#include "ibmvar/harness.hpp"
#include "ibmvar/hermite.hpp"
#include "ibmvar/limits.hpp"
#include "ibmvar/weights.hpp"

namespace py = pybind11;
using namespace ibmvar;

namespace {

ExperimentConfig config_of(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  if (!j.is_object() || !j.contains("theorem_id")) {
    throw ArgumentError("config needs a theorem_id");
  }
  const TheoremId id = parse_theorem(j["theorem_id"].get<std::string>());
  return config_from_json(j, default_config(id));
}

std::string presets_json() {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : presets()) {
    out.push_back({{"theorem_id", std::string(to_string(p.id))},
                   {"parity", p.parity},
                   {"default_kappa", p.default_kappa},
                   {"functional", p.functional},
                   {"limit", p.limit}});
  }
  return out.dump();
}

std::string run_json(const std::string& config_text, bool include_timing) {
  const ExperimentConfig c = config_of(config_text);
  c.validate();
  ExperimentResult r;
  {
    py::gil_scoped_release release;
    r = run_experiment(c);
  }
  return report_to_json(r.report, include_timing).dump();
}

std::vector<std::vector<double>> rows(const std::string& config_text, int level,
                                      int replicates, bool finite) {
  const ExperimentConfig c = config_of(config_text);
  if (replicates < 0) throw ArgumentError("replicates must be >= 0");
  std::vector<std::vector<double>> out;
  py::gil_scoped_release release;
  for (int r = 0; r < replicates; ++r) {
    const auto rep = static_cast<std::uint64_t>(r);
    out.push_back(finite ? finite_row(c, level, c.master_seed, rep)
                         : limit_row(c, level, c.master_seed, rep));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_ibmvar, m) {
  m.doc() = "Weighted power variations of iterated Brownian motion";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<ResourceError>(m, "ResourceError", PyExc_RuntimeError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

  m.def("gaussian_moment", &gaussian_moment, py::arg("q"));
  m.def(
      "variance_of", [](const std::vector<double>& coeffs) { return variance_of(Poly(coeffs)); },
      py::arg("coeffs"));
  m.def("weights", &registry_names);
  m.def("_presets_json", &presets_json);
  m.def("_default_config_json", [](const std::string& id) {
    return to_json(default_config(parse_theorem(id))).dump();
  });
  m.def("_run_experiment_json", &run_json, py::arg("config"), py::arg("include_timing"));
  m.def(
      "_identity_suite_json",
      [](std::uint64_t seed, int trials) {
        IdentityReport r;
        {
          py::gil_scoped_release release;
          r = identity_suite(seed, trials);
        }
        return identity_to_json(r).dump();
      },
      py::arg("seed"), py::arg("trials"));
  m.def(
      "_finite_rows",
      [](const std::string& c, int level, int reps) { return rows(c, level, reps, true); },
      py::arg("config"), py::arg("level"), py::arg("replicates"));
  m.def(
      "_limit_rows",
      [](const std::string& c, int level, int reps) { return rows(c, level, reps, false); },
      py::arg("config"), py::arg("level"), py::arg("replicates"));
}
