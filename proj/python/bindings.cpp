#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mcsff/alignment/fusion.hpp"
#include "mcsff/alignment/metrics.hpp"
#include "mcsff/alignment/pipeline.hpp"
#include "mcsff/cli/app.hpp"
#include "mcsff/cli/config.hpp"
#include "mcsff/error.hpp"

namespace py = pybind11;
using namespace mcsff;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

num::Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-d array");
  num::Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array to_array(const num::Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

py::dict to_dict(const align::AlignmentMetrics& m) {
  py::dict d;
  d["hits1"] = m.hits1;
  d["hits5"] = m.hits5;
  d["hits10"] = m.hits10;
  d["mr"] = m.mr;
  d["mrr"] = m.mrr;
  return d;
}

cli::RunConfig config_from(const std::string& json_text, const std::string& base_dir) {
  return cli::parse_config(nlohmann::json::parse(json_text), base_dir);
}

align::ExperimentData valid_data(const cli::RunConfig& c) {
  auto loaded = cli::load_data(c);
  if (!loaded.report.ok()) {
    std::ostringstream s;
    kg::print_report(s, loaded.report);
    throw ValidationError(s.str());
  }
  return std::move(loaded.data);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-modal entity alignment core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = cli::run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));

  m.def(
      "normalize_config",
      [](const std::string& text, const std::string& base_dir) {
        return cli::to_json(config_from(text, base_dir)).dump();
      },
      py::arg("config_json"), py::arg("base_dir") = "");

  m.def(
      "load_config", [](const std::string& path) { return cli::to_json(cli::load_config(path)).dump(); },
      py::arg("path"));

  m.def(
      "evaluate", [](const Array& scores) { return to_dict(align::evaluate(to_matrix(scores))); },
      py::arg("scores"));

  m.def(
      "align_topk",
      [](const Array& scores, std::size_t row, std::size_t k) {
        return align::align_topk(to_matrix(scores), row, k);
      },
      py::arg("scores"), py::arg("row"), py::arg("k"));

  m.def(
      "fuse_similarity",
      [](std::optional<Array> entity, std::optional<Array> visual, std::optional<Array> attribute,
         std::tuple<double, double, double> weights, bool normalize) {
        std::optional<num::Matrix> se, si, sa;
        if (entity) se = to_matrix(*entity);
        if (visual) si = to_matrix(*visual);
        if (attribute) sa = to_matrix(*attribute);
        align::FusionWeights w{std::get<0>(weights), std::get<1>(weights), std::get<2>(weights)};
        return to_array(align::fuse_similarity(se ? &*se : nullptr, si ? &*si : nullptr, sa ? &*sa : nullptr, w,
                                               normalize)
                            .values);
      },
      py::arg("entity") = py::none(), py::arg("visual") = py::none(), py::arg("attribute") = py::none(),
      py::arg("weights") = std::tuple{align::FusionWeights{}.entity, align::FusionWeights{}.visual,
                                      align::FusionWeights{}.attribute},
      py::arg("normalize") = true);

  m.def(
      "validate",
      [](const std::string& text, const std::string& base_dir) {
        auto loaded = cli::load_data(config_from(text, base_dir));
        std::ostringstream s;
        kg::print_report(s, loaded.report);
        return py::make_tuple(loaded.report.ok(), s.str());
      },
      py::arg("config_json"), py::arg("base_dir") = "");

  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& base_dir) {
        auto c = config_from(text, base_dir);
        auto data = valid_data(c);
        align::ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = align::run_experiment(data, c.experiment);
        }
        py::dict d;
        d["metrics"] = to_dict(r.metrics);
        d["loss"] = r.trained ? r.trained->history.loss : std::vector<double>{};
        d["scores"] = to_array(r.fused);
        return d;
      },
      py::arg("config_json"), py::arg("base_dir") = "");

  m.def(
      "run_ablation",
      [](const std::string& text, const std::string& base_dir) {
        auto c = config_from(text, base_dir);
        auto data = valid_data(c);
        std::vector<align::AblationRow> rows;
        {
          py::gil_scoped_release release;
          rows = align::run_ablation(data, c.experiment);
        }
        py::list out;
        for (const auto& row : rows) out.append(py::make_tuple(row.variant, to_dict(row.metrics)));
        return out;
      },
      py::arg("config_json"), py::arg("base_dir") = "");
}
