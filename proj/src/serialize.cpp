#include "statn/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "statn/errors.hpp"

namespace statn {

namespace {

constexpr const char* kTag = "statn-v1";

template <typename ModelT, typename TensorPtr>
std::vector<std::pair<std::string, TensorPtr>> named_params(ModelT& m) {
  std::vector<std::pair<std::string, TensorPtr>> out;
  for (std::size_t i = 0; i < m.localiser.params.size(); ++i)
    out.emplace_back("localiser." + std::to_string(i), &m.localiser.params[i].value);
  out.emplace_back("shape.mean", &m.shape_mean.value);
  out.emplace_back("shape.basis", &m.shape_basis.value);
  if (m.has_appearance()) {
    out.emplace_back("texture.mean", &m.tex_mean.value);
    out.emplace_back("texture.basis", &m.tex_basis.value);
  }
  for (std::size_t i = 0; i < m.classifier.params.size(); ++i)
    out.emplace_back("classifier." + std::to_string(i), &m.classifier.params[i].value);
  return out;
}

void write_specs(std::ostream& out, const char* key, const std::vector<LayerSpec>& specs) {
  out << key << " " << specs.size() << "\n";
  for (const auto& s : specs) {
    switch (s.kind) {
      case LayerSpec::Kind::conv:
        out << "conv " << s.kernel << " " << s.out_channels << " " << s.stride << " "
            << s.pad << " " << s.in_channels << "\n";
        break;
      case LayerSpec::Kind::relu:
        out << "relu\n";
        break;
      case LayerSpec::Kind::maxpool:
        out << "maxpool " << s.window << "\n";
        break;
      case LayerSpec::Kind::fc:
        out << "fc " << s.units << " " << s.in_units << "\n";
        break;
    }
  }
}

[[noreturn]] void truncated(const std::string& what) {
  throw format_error("model file truncated while reading " + what);
}

std::string next_token(std::istream& in, const std::string& what) {
  std::string token;
  if (!(in >> token)) truncated(what);
  return token;
}

void expect_keyword(std::istream& in, const std::string& keyword) {
  const std::string got = next_token(in, "'" + keyword + "'");
  if (got != keyword)
    throw format_error("model file: expected '" + keyword + "', found '" + got + "'");
}

int read_int(std::istream& in, const std::string& what) {
  int value = 0;
  if (!(in >> value)) truncated(what);
  return value;
}

std::vector<LayerSpec> read_specs(std::istream& in, const std::string& key) {
  expect_keyword(in, key);
  const int count = read_int(in, key + " count");
  if (count < 0 || count > 1000) throw format_error("model file: bad " + key + " count");
  std::vector<LayerSpec> specs;
  specs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::string kind = next_token(in, key + " layer kind");
    if (kind == "conv") {
      const int kernel = read_int(in, "conv kernel");
      const int oc = read_int(in, "conv out_channels");
      const int stride = read_int(in, "conv stride");
      const int pad = read_int(in, "conv pad");
      const int ic = read_int(in, "conv in_channels");
      specs.push_back(LayerSpec::conv(kernel, oc, stride, pad, ic));
    } else if (kind == "relu") {
      specs.push_back(LayerSpec::relu());
    } else if (kind == "maxpool") {
      specs.push_back(LayerSpec::maxpool(read_int(in, "maxpool window")));
    } else if (kind == "fc") {
      const int units = read_int(in, "fc units");
      const int in_units = read_int(in, "fc in_units");
      specs.push_back(LayerSpec::fc(units, in_units));
    } else {
      throw format_error("model file: unknown layer kind '" + kind + "'");
    }
  }
  return specs;
}

}  // namespace

void save_model(const StaTNModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("save_model: cannot open " + path);
  const ModelConfig& c = model.config;
  out << kTag << "\n";
  out << "image " << c.image_rows << " " << c.image_cols << " " << c.channels << "\n";
  out << "grid " << c.grid_rows << " " << c.grid_cols << "\n";
  out << "sample " << c.sample_rows << " " << c.sample_cols << "\n";
  out << "shape_dim " << c.shape_dim << "\n";
  out << "texture_dim " << c.texture_dim << "\n";
  out << "class_count " << c.class_count << "\n";
  write_specs(out, "localiser_body", c.localiser_body);
  write_specs(out, "classifier_body", c.classifier_body);

  const auto params = named_params<const StaTNModel, const Tensor*>(model);
  out << "tensors " << params.size() << "\n";
  char buf[40];
  for (const auto& [name, tensor] : params) {
    out << "tensor " << name << " " << tensor->rank();
    for (int d : tensor->shape) out << " " << d;
    out << "\n";
    for (std::int64_t i = 0; i < tensor->size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", (*tensor)[i]);
      out << buf << (i + 1 == tensor->size() ? "\n" : " ");
    }
  }
  out << "end\n";
  if (!out) throw input_error("save_model: write failed for " + path);
}

StaTNModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("load_model: cannot open " + path);

  const std::string tag = next_token(in, "format tag");
  if (tag != kTag) throw format_error("unsupported model tag '" + tag + "'");

  ModelConfig cfg;
  expect_keyword(in, "image");
  cfg.image_rows = read_int(in, "image rows");
  cfg.image_cols = read_int(in, "image cols");
  cfg.channels = read_int(in, "image channels");
  expect_keyword(in, "grid");
  cfg.grid_rows = read_int(in, "grid rows");
  cfg.grid_cols = read_int(in, "grid cols");
  expect_keyword(in, "sample");
  cfg.sample_rows = read_int(in, "sample rows");
  cfg.sample_cols = read_int(in, "sample cols");
  expect_keyword(in, "shape_dim");
  cfg.shape_dim = read_int(in, "shape_dim");
  expect_keyword(in, "texture_dim");
  cfg.texture_dim = read_int(in, "texture_dim");
  expect_keyword(in, "class_count");
  cfg.class_count = read_int(in, "class_count");
  cfg.localiser_body = read_specs(in, "localiser_body");
  cfg.classifier_body = read_specs(in, "classifier_body");

  StaTNModel model;
  try {
    Rng rng(0);  // placeholder init; every parameter is overwritten below
    model = build_model(cfg, rng);
  } catch (const config_error& e) {
    throw format_error(std::string("model file describes an invalid model: ") + e.what());
  }

  const auto params = named_params<StaTNModel, Tensor*>(model);
  expect_keyword(in, "tensors");
  const int count = read_int(in, "tensor count");
  if (count != static_cast<int>(params.size()))
    throw format_error("model file: tensor count " + std::to_string(count) +
                       " does not match the declared architecture (" +
                       std::to_string(params.size()) + ")");

  for (const auto& [name, tensor] : params) {
    expect_keyword(in, "tensor");
    const std::string got = next_token(in, "tensor name");
    if (got != name)
      throw format_error("model file: unexpected tensor '" + got + "', expected '" +
                         name + "'");
    const int rank = read_int(in, name + " rank");
    if (rank != tensor->rank())
      throw format_error("model file: tensor " + name + " has rank " +
                         std::to_string(rank) + ", the architecture requires " +
                         std::to_string(tensor->rank()));
    for (int d = 0; d < rank; ++d) {
      const int dim = read_int(in, name + " dims");
      if (dim != tensor->dim(d))
        throw format_error("model file: tensor " + name + " dim " + std::to_string(d) +
                           " is " + std::to_string(dim) + ", the architecture requires " +
                           std::to_string(tensor->dim(d)));
    }
    for (std::int64_t i = 0; i < tensor->size(); ++i)
      if (!(in >> (*tensor)[i])) truncated("values of tensor " + name);
  }
  expect_keyword(in, "end");
  return model;
}

}  // namespace statn
