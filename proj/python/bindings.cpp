#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wpcm/errors.hpp"
#include "wpcm/pipeline.hpp"

#include <algorithm>
#include <memory>

namespace py = pybind11;
using namespace wpcm;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Image = py::array_t<float, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vec(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

Array from_vec(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

template <class T>
T parse_config(const std::string& json_text) {
  T c{};
  if (!json_text.empty()) from_json(nlohmann::json::parse(json_text), c);
  c.validate();
  return c;
}

/// height x width x 3 array from the planar image.
Image to_array(const WpcImage& img) {
  Image out({img.height, img.width, 3});
  auto m = out.mutable_unchecked<3>();
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < img.height; ++r)
      for (int col = 0; col < img.width; ++col) m(r, col, c) = img.at(c, r, col);
  return out;
}

WpcImage from_array(const Image& a, ImageRole role) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("expected an array of shape (height, width, 3)");
  WpcImage img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), role);
  auto m = a.unchecked<3>();
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < img.height; ++r)
      for (int col = 0; col < img.width; ++col) img.at(c, r, col) = m(r, col, c);
  return img;
}

ScatterSet to_scatter(const Array& x, const Array& y) {
  const auto xs = to_vec(x), ys = to_vec(y);
  if (xs.size() != ys.size()) throw py::value_error("x and y differ in length");
  ScatterSet s;
  for (std::size_t i = 0; i < xs.size(); ++i) s.points.push_back({xs[i], ys[i], PointLabel::Unknown});
  return s;
}

WpcFunction make_function(const std::string& family, const std::vector<double>& params) {
  WpcFunction f{family_from_string(family), params};
  if (params.size() != (f.family == Family::DE ? 2u : 4u)) throw py::value_error("wrong parameter count for family");
  return f;
}

class PyModel {
 public:
  explicit PyModel(Model m) : model_(std::make_unique<Model>(std::move(m))) {}

  Image infer(const Image& img) const {
    const WpcImage in = from_array(img, ImageRole::ScadaWpc);
    WpcImage out;
    {
      py::gil_scoped_release release;
      out = wpcm::infer(*model_, in);
    }
    return to_array(out);
  }

  std::string model_curve(const Array& x, const Array& y, const std::string& raster, const std::string& extraction) const {
    const ScatterSet s = to_scatter(x, y);
    const auto rc = parse_config<RasterConfig>(raster);
    const auto ec = parse_config<ExtractionConfig>(extraction);
    py::gil_scoped_release release;
    return nlohmann::json(wpcm_curve(s, *model_, rc, ec).curve).dump();
  }

  std::string config() const { return nlohmann::json(model_->config()).dump(); }
  std::size_t parameter_count() const { return model_->net().parameter_count(); }
  bool trained() const { return model_->trained(); }

 private:
  std::unique_ptr<Model> model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the wpcm package";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ExtractionFailure>(m, "ExtractionFailure", PyExc_RuntimeError);
  py::register_exception<CorruptFile>(m, "CorruptFile", PyExc_IOError);

  m.def("sample_wpc_function", [](std::uint64_t seed) {
    Rng rng(seed);
    const WpcFunction f = sample_wpc_function(rng);
    return py::make_tuple(std::string(to_string(f.family)), f.params);
  }, py::arg("seed"));

  m.def("eval_wpc", [](const std::string& family, const std::vector<double>& params, const Array& x) {
    const WpcFunction f = make_function(family, params);
    std::vector<double> y;
    for (double v : to_vec(x)) y.push_back(eval_wpc_function(f, v));
    return from_vec(y);
  }, py::arg("family"), py::arg("params"), py::arg("x"));

  m.def("synthesize_sample", [](std::uint64_t seed, const std::string& config) {
    const auto cfg = parse_config<SynthesisConfig>(config);
    Rng rng(seed);
    const SynthSample s = synthesize_sample(cfg, rng);
    std::vector<double> xs, ys;
    std::vector<std::string> labels;
    for (const auto& p : s.scatter.points) {
      xs.push_back(p.x);
      ys.push_back(p.y);
      labels.emplace_back(to_string(p.label));
    }
    py::dict d;
    d["x"] = from_vec(xs);
    d["y"] = from_vec(ys);
    d["labels"] = labels;
    d["family"] = std::string(to_string(s.truth.family));
    d["params"] = s.truth.params;
    d["truncated"] = s.truncated;
    return d;
  }, py::arg("seed"), py::arg("config") = "");

  m.def("render_scatter", [](const Array& x, const Array& y, const std::string& raster, std::optional<double> marker) {
    auto rc = parse_config<RasterConfig>(raster);
    if (marker) rc.marker_size = *marker;
    return to_array(render_scatter(to_scatter(x, y), rc));
  }, py::arg("x"), py::arg("y"), py::arg("raster") = "", py::arg("marker_size") = py::none());

  m.def("render_curve", [](const std::string& family, const std::vector<double>& params, const std::string& raster) {
    return to_array(render_curve(make_function(family, params), parse_config<RasterConfig>(raster)));
  }, py::arg("family"), py::arg("params"), py::arg("raster") = "");

  m.def("marker_size_for_test", [](long long n, const std::string& raster) {
    return marker_size_for_test(n, parse_config<RasterConfig>(raster));
  }, py::arg("n_data"), py::arg("raster") = "");

  m.def("extract", [](const Image& img, const std::string& raster, const std::string& extraction) {
    return nlohmann::json(extract(from_array(img, ImageRole::Generated), parse_config<RasterConfig>(raster),
                                  parse_config<ExtractionConfig>(extraction)))
        .dump();
  }, py::arg("image"), py::arg("raster") = "", py::arg("extraction") = "");

  m.def("eval_curve", [](const std::string& curve, const Array& x) {
    const auto pw = nlohmann::json::parse(curve).get<PiecewiseWpc>();
    std::vector<double> y;
    for (double v : to_vec(x)) y.push_back(eval_piecewise(pw, v));
    return from_vec(y);
  }, py::arg("curve"), py::arg("x"));

  m.def("evaluate", [](const Array& pred, const Array& truth, const Array& speed, double cws,
                       const std::vector<double>& alphas) {
    return nlohmann::json(evaluate(to_vec(pred), to_vec(truth), to_vec(speed), cws, alphas)).dump();
  }, py::arg("pred"), py::arg("truth"), py::arg("speed"), py::arg("cws"), py::arg("alphas") = default_alphas());

  m.def("fit_benchmark", [](const std::string& kind, const Array& x, const Array& y, const std::string& config) {
    BenchmarkConfig bc;
    if (!config.empty()) from_json(nlohmann::json::parse(config), bc);
    const auto xs = to_vec(x), ys = to_vec(y);
    py::gil_scoped_release release;
    return model_to_json(fit_benchmark(benchmark_from_string(kind), xs, ys, bc)).dump();
  }, py::arg("kind"), py::arg("x"), py::arg("y"), py::arg("config") = "");

  m.def("predict_benchmark", [](const std::string& model, const Array& x) {
    return from_vec(predict(model_from_json(nlohmann::json::parse(model)), to_vec(x)));
  }, py::arg("model"), py::arg("x"));

  m.def("default_config", [] { return nlohmann::json(RunConfig{}).dump(); });
  m.def("desk_profile", [] { return nlohmann::json(RunConfig::desk_profile()).dump(); });

  py::class_<PyModel>(m, "Model")
      .def_static("load", [](const std::string& path) { return PyModel(load_model(path)); }, py::arg("path"))
      .def("infer", &PyModel::infer, py::arg("image"))
      .def("model_curve", &PyModel::model_curve, py::arg("x"), py::arg("y"), py::arg("raster") = "",
           py::arg("extraction") = "")
      .def_property_readonly("config", &PyModel::config)
      .def_property_readonly("parameter_count", &PyModel::parameter_count)
      .def_property_readonly("trained", &PyModel::trained);
}
