// Python extension module. Structured values cross the boundary as JSON
// text; the pure-Python wrapper in lrce/__init__.py turns them into dicts.
#include <fstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lrce/service.hpp"
#include "lrce/synthetic.hpp"
#include "lrce/workflow.hpp"

namespace py = pybind11;
using namespace lrce;

namespace {

RunConfig config_from(const std::string& config_json) {
  RunConfig cfg = config_json.empty() ? RunConfig{} : RunConfig::from_json(nlohmann::json::parse(config_json));
  cfg.finalize();
  return cfg;
}

class Model {
 public:
  explicit Model(const std::filesystem::path& path) : bundle_(ModelBundle::load(path)) {}

  std::string fingerprint() const { return bundle_.schema.fingerprint(); }
  std::string schema_json() const { return bundle_.schema.to_json().dump(); }
  bool has_gdl() const { return bundle_.gdl.has_value(); }

  std::vector<double> encode(const std::string& query_json) const {
    return encode_query(bundle_.schema, nlohmann::json::parse(query_json));
  }

  double predict(const std::string& query_json) const {
    return bundle_.require_regressor().predict_one(encode(query_json));
  }

  std::string generate(const std::string& query_json, double target, double tolerance, std::size_t steps,
                       const std::string& method, bool timing) const {
    GenerateRequest req;
    req.query = encode(query_json);
    req.target = target;
    req.tolerance = tolerance;
    req.steps = steps;
    CEResult result;
    {
      py::gil_scoped_release release;
      result = run_method(bundle_, method, req);
    }
    auto j = ce_to_json(result, bundle_.schema, timing);
    j["method"] = method;
    return j.dump();
  }

 private:
  ModelBundle bundle_;
};

void save_with_sidecar(const ModelBundle& bundle, const std::string& out) {
  bundle.save(out);
  std::ofstream(out + ".schema.json") << bundle.schema.to_json().dump(2) << '\n';
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the lrce package";
  m.attr("__version__") = kVersion;

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ModelFormatError>(m, "ModelFormatError", PyExc_ValueError);

  m.def(
      "make_synthetic",
      [](std::size_t n, std::uint64_t seed, double noise, const std::string& out) {
        write_csv(out, make_synthetic(n, seed, noise).to_table());
      },
      py::arg("n"), py::arg("seed"), py::arg("noise"), py::arg("out"));

  m.def(
      "train_regressor",
      [](const std::string& data, const std::string& out, const std::string& target, const std::string& config_json) {
        const auto cfg = config_from(config_json);
        const auto table = read_csv(data);
        py::gil_scoped_release release;
        save_with_sidecar(train_regressor_bundle(table, declared_schema(table, std::nullopt, target), cfg), out);
      },
      py::arg("data"), py::arg("out"), py::arg("target") = "", py::arg("config_json") = "");

  m.def(
      "train_ce",
      [](const std::string& data, const std::string& model, const std::string& out, bool with_gdl,
         const std::string& config_json) {
        const auto cfg = config_from(config_json);
        auto bundle = ModelBundle::load(model);
        const auto table = read_csv(data);
        py::gil_scoped_release release;
        train_ce_bundle(bundle, table, cfg, with_gdl);
        save_with_sidecar(bundle, out);
      },
      py::arg("data"), py::arg("model"), py::arg("out"), py::arg("with_gdl") = true, py::arg("config_json") = "");

  py::class_<Model>(m, "Model")
      .def(py::init<std::filesystem::path>(), py::arg("path"))
      .def_property_readonly("fingerprint", &Model::fingerprint)
      .def_property_readonly("has_gdl", &Model::has_gdl)
      .def("schema_json", &Model::schema_json)
      .def("encode", &Model::encode, py::arg("query_json"))
      .def("predict", &Model::predict, py::arg("query_json"))
      .def("generate", &Model::generate, py::arg("query_json"), py::arg("target"), py::arg("tolerance") = 0.05,
           py::arg("steps") = 50, py::arg("method") = "ours", py::arg("timing") = false);
}
