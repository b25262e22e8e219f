#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <memory>

#include "statn/dataset.hpp"
#include "statn/errors.hpp"
#include "statn/gradcheck.hpp"
#include "statn/image_io.hpp"
#include "statn/pipeline.hpp"
#include "statn/sampler.hpp"
#include "statn/serialize.hpp"

namespace py = pybind11;
using namespace statn;

namespace {

Tensor tensor_from_flat(std::vector<int> shape, const std::vector<double>& values) {
  Tensor t = Tensor::zeros(std::move(shape));
  if (t.size() != static_cast<std::int64_t>(values.size()))
    throw config_error("value count does not match shape");
  std::memcpy(t.data.data(), values.data(), values.size() * sizeof(double));
  return t;
}

}  // namespace

PYBIND11_MODULE(_statn, m) {
  m.doc() = "learnable statistical shape model in a spatial transformer pipeline";

  py::register_exception<input_error>(m, "InputError");
  py::register_exception<config_error>(m, "ConfigError");
  py::register_exception<format_error>(m, "FormatError");
  py::register_exception<constraint_error>(m, "ConstraintError");
  py::register_exception<numeric_error>(m, "NumericError");

  py::class_<Tensor>(m, "Tensor", py::buffer_protocol())
      .def(py::init(&tensor_from_flat), py::arg("shape"), py::arg("values"))
      .def_static("zeros", [](std::vector<int> shape) { return Tensor::zeros(std::move(shape)); })
      .def_static("full", [](std::vector<int> shape, double v) {
        return Tensor::full(std::move(shape), v);
      })
      .def_property_readonly("shape", [](const Tensor& t) { return t.shape; })
      .def("tolist", [](const Tensor& t) { return t.data; })
      .def("__len__", [](const Tensor& t) { return t.size(); })
      .def_buffer([](Tensor& t) {
        std::vector<py::ssize_t> dims(t.shape.begin(), t.shape.end());
        std::vector<py::ssize_t> strides(dims.size());
        py::ssize_t acc = static_cast<py::ssize_t>(sizeof(double));
        for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
          strides[static_cast<std::size_t>(i)] = acc;
          acc *= dims[static_cast<std::size_t>(i)];
        }
        return py::buffer_info(t.data.data(), sizeof(double),
                               py::format_descriptor<double>::format(),
                               static_cast<py::ssize_t>(dims.size()), dims, strides);
      });

  py::class_<PoseParams>(m, "PoseParams")
      .def_static("identity", &PoseParams::identity, py::arg("dim"))
      .def_readwrite("phi", &PoseParams::phi)
      .def_readwrite("tx", &PoseParams::tx)
      .def_readwrite("ty", &PoseParams::ty)
      .def_readwrite("logs", &PoseParams::logs)
      .def_readwrite("alpha", &PoseParams::alpha);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("image_rows", &ModelConfig::image_rows)
      .def_readwrite("image_cols", &ModelConfig::image_cols)
      .def_readwrite("channels", &ModelConfig::channels)
      .def_readwrite("grid_rows", &ModelConfig::grid_rows)
      .def_readwrite("grid_cols", &ModelConfig::grid_cols)
      .def_readwrite("sample_rows", &ModelConfig::sample_rows)
      .def_readwrite("sample_cols", &ModelConfig::sample_cols)
      .def_readwrite("shape_dim", &ModelConfig::shape_dim)
      .def_readwrite("texture_dim", &ModelConfig::texture_dim)
      .def_readwrite("class_count", &ModelConfig::class_count);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("w_class", &TrainConfig::w_class)
      .def_readwrite("w_tex", &TrainConfig::w_tex)
      .def_readwrite("w_sym", &TrainConfig::w_sym)
      .def_readwrite("w_area", &TrainConfig::w_area)
      .def_readwrite("lr_localiser", &TrainConfig::lr_localiser)
      .def_readwrite("lr_classifier", &TrainConfig::lr_classifier)
      .def_readwrite("lr_shape", &TrainConfig::lr_shape)
      .def_readwrite("lr_texture", &TrainConfig::lr_texture)
      .def_readwrite("area_k", &TrainConfig::area_k)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("steps", &TrainConfig::steps)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("augment", &TrainConfig::augment)
      .def_readwrite("augment_pixels", &TrainConfig::augment_pixels)
      .def_readwrite("val_fraction", &TrainConfig::val_fraction)
      .def_readwrite("val_every", &TrainConfig::val_every)
      .def_readwrite("threads", &TrainConfig::threads);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("image_rows", &SynthConfig::image_rows)
      .def_readwrite("image_cols", &SynthConfig::image_cols)
      .def_readwrite("grid_rows", &SynthConfig::grid_rows)
      .def_readwrite("grid_cols", &SynthConfig::grid_cols)
      .def_readwrite("true_dim", &SynthConfig::true_dim)
      .def_readwrite("phi_max", &SynthConfig::phi_max)
      .def_readwrite("t_max", &SynthConfig::t_max)
      .def_readwrite("logs_max", &SynthConfig::logs_max)
      .def_readwrite("alpha_max", &SynthConfig::alpha_max)
      .def_readwrite("clutter", &SynthConfig::clutter)
      .def_readwrite("count", &SynthConfig::count)
      .def_readwrite("seed", &SynthConfig::seed);

  py::class_<DatasetItem>(m, "DatasetItem")
      .def_readonly("image", &DatasetItem::image)
      .def_readonly("label", &DatasetItem::label)
      .def_readonly("has_truth", &DatasetItem::has_truth)
      .def_readonly("truth", &DatasetItem::truth);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("items", &Dataset::items)
      .def_readonly("class_count", &Dataset::class_count)
      .def_readonly("class_names", &Dataset::class_names)
      .def("count", &Dataset::count);

  py::class_<StaTNModel, std::shared_ptr<StaTNModel>>(m, "Model")
      .def_property_readonly("config", [](const StaTNModel& mdl) { return mdl.config; })
      .def("point_count", &StaTNModel::point_count)
      .def("sample_count", &StaTNModel::sample_count);

  py::class_<StepLog>(m, "StepLog")
      .def_readonly("step", &StepLog::step)
      .def_readonly("loss_class", &StepLog::loss_class)
      .def_readonly("loss_tex", &StepLog::loss_tex)
      .def_readonly("loss_sym", &StepLog::loss_sym)
      .def_readonly("loss_area", &StepLog::loss_area);

  py::class_<EvalLog>(m, "EvalLog")
      .def_readonly("step", &EvalLog::step)
      .def_readonly("accuracy", &EvalLog::accuracy);

  py::class_<TrainLog>(m, "TrainLog")
      .def_readonly("steps", &TrainLog::steps)
      .def_readonly("validation", &TrainLog::validation);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("pose", &FitResult::pose)
      .def_readonly("theta", &FitResult::theta)
      .def_readonly("Y", &FitResult::Y)
      .def_readonly("Z", &FitResult::Z);

  m.def(
      "build_model",
      [](const ModelConfig& cfg, std::uint64_t seed) {
        Rng rng(seed);
        return std::make_shared<StaTNModel>(build_model(cfg, rng));
      },
      py::arg("config"), py::arg("seed") = 1);

  m.def(
      "forward",
      [](const StaTNModel& model, const Tensor& image) {
        const ForwardPass fp = statn_forward(model, image, model.has_classifier());
        py::dict out;
        out["pose"] = fp.pose;
        out["theta"] = fp.theta;
        out["Y"] = fp.grid.Y;
        out["Z"] = fp.Z;
        out["V"] = fp.V;
        if (model.has_classifier()) out["logits"] = fp.logits;
        return out;
      },
      py::arg("model"), py::arg("image"));

  m.def(
      "train",
      [](std::shared_ptr<StaTNModel> model, const Dataset& data, const TrainConfig& cfg) {
        return train(*model, data, cfg);
      },
      py::arg("model"), py::arg("dataset"), py::arg("config"));

  m.def(
      "fit", [](const StaTNModel& model, const Tensor& image) { return fit(model, image); },
      py::arg("model"), py::arg("image"));

  m.def(
      "average_identity",
      [](const StaTNModel& model, const std::vector<Tensor>& images) {
        return average_identity(model, images);
      },
      py::arg("model"), py::arg("images"));

  m.def("synth_generate", [](const SynthConfig& cfg) { return synth_generate(cfg); },
        py::arg("config"));
  m.def("synth_generate_classes", &synth_generate_classes, py::arg("config"),
        py::arg("classes"));
  m.def("make_template", &make_template, py::arg("rows"), py::arg("cols"),
        py::arg("channels") = 1, py::arg("index") = 0);
  m.def("load_image_dir", &load_image_dir, py::arg("path"),
        py::arg("labels_from_subdirs") = false, py::arg("resize_rows") = 0,
        py::arg("resize_cols") = 0);

  m.def("read_ppm", &read_ppm, py::arg("path"));
  m.def("write_ppm", &write_ppm, py::arg("image"), py::arg("path"));
  m.def("bilinear_resize", &bilinear_resize, py::arg("image"), py::arg("rows"),
        py::arg("cols"));

  m.def(
      "save_model",
      [](const StaTNModel& model, const std::string& path) { save_model(model, path); },
      py::arg("model"), py::arg("path"));
  m.def(
      "load_model",
      [](const std::string& path) { return std::make_shared<StaTNModel>(load_model(path)); },
      py::arg("path"));

  m.def(
      "gradient_suite",
      [](std::uint64_t seed, double eps) {
        const GradCheckReport report =
            run_gradient_cases(standard_gradient_cases(seed, false), eps);
        py::list rows;
        for (const auto& r : report.rows)
          rows.append(py::make_tuple(r.name, r.max_error, r.threshold, r.pass));
        return rows;
      },
      py::arg("seed") = 1, py::arg("eps") = 1e-5);
}
