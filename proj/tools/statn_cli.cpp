#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "statn/errors.hpp"
#include "statn/image_io.hpp"
#include "statn/pipeline.hpp"
#include "statn/sampler.hpp"
#include "statn/serialize.hpp"

namespace fs = std::filesystem;
using namespace statn;

namespace {

struct CliConfig {
  std::string data;
  std::string model_path;
  std::string image_path;
  std::vector<std::string> images;
  std::string out;
  bool labeled = false;
  int image_rows = 0;  // 0 = native size of the first image
  int image_cols = 0;
  int grid_rows = 10, grid_cols = 10;
  int sample_rows = 28, sample_cols = 28;
  int shape_dim = 10, texture_dim = 10;
  TrainConfig train;
  SynthConfig synth;
  int classes = 0;
  double eps = 1e-5;
  std::uint64_t seed = 1;
  std::string fault;
};

void ensure_out_dir(const std::string& out) {
  if (out.empty()) throw input_error("an --out directory is required");
  fs::create_directories(out);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

Tensor as_image(const Tensor& v, int rows, int cols, int channels) {
  return reshaped(v, {rows, cols, channels});
}

void write_theta(const std::string& path, const PoseParams& pose) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot open " + path);
  char buf[40];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << key << " " << buf << "\n";
  };
  put("phi", pose.phi);
  put("tx", pose.tx);
  put("ty", pose.ty);
  put("logs", pose.logs);
  out << "alpha";
  for (double a : pose.alpha) {
    std::snprintf(buf, sizeof buf, "%.17g", a);
    out << " " << buf;
  }
  out << "\n";
  if (!out) throw input_error("write failed for " + path);
}

void add_train_flags(CLI::App* cmd, TrainConfig& t) {
  cmd->add_option("--w-class", t.w_class, "classification loss weight");
  cmd->add_option("--w-tex", t.w_tex, "texture loss weight");
  cmd->add_option("--w-sym", t.w_sym, "symmetry loss weight");
  cmd->add_option("--w-area", t.w_area, "area loss weight");
  cmd->add_option("--lr-localiser", t.lr_localiser, "localiser learning rate");
  cmd->add_option("--lr-classifier", t.lr_classifier, "classifier learning rate");
  cmd->add_option("--lr-shape", t.lr_shape, "shape model learning rate");
  cmd->add_option("--lr-texture", t.lr_texture, "appearance model learning rate");
  cmd->add_option("--area-k", t.area_k, "area loss threshold");
  cmd->add_option("--batch-size", t.batch_size, "minibatch size");
  cmd->add_option("--steps", t.steps, "SGD steps");
  cmd->add_option("--seed", t.seed, "RNG seed");
  cmd->add_flag("--augment", t.augment, "random pad-and-crop jitter");
  cmd->add_option("--augment-pixels", t.augment_pixels, "max jitter in pixels");
  cmd->add_option("--val-fraction", t.val_fraction, "per-class validation fraction");
  cmd->add_option("--val-every", t.val_every, "validation/drift cadence in steps");
  cmd->add_option("--threads", t.threads, "worker threads per batch");
}

int cmd_train(const CliConfig& cli) {
  ensure_out_dir(cli.out);
  const Dataset data =
      load_image_dir(cli.data, cli.labeled, cli.image_rows, cli.image_cols);

  ModelConfig mc;
  mc.image_rows = data.items.front().image.dim(0);
  mc.image_cols = data.items.front().image.dim(1);
  mc.channels = data.items.front().image.dim(2);
  mc.grid_rows = cli.grid_rows;
  mc.grid_cols = cli.grid_cols;
  mc.sample_rows = cli.sample_rows;
  mc.sample_cols = cli.sample_cols;
  mc.shape_dim = cli.shape_dim;
  mc.texture_dim = cli.texture_dim;
  mc.class_count = cli.train.w_class > 0.0 ? data.class_count : 0;

  Rng rng(cli.train.seed);
  StaTNModel model = build_model(mc, rng);
  const TrainLog log = train(model, data, cli.train);
  save_model(model, join_path(cli.out, "model.statn"));

  std::ofstream csv(join_path(cli.out, "log.csv"));
  if (!csv) throw input_error("cannot open log.csv under " + cli.out);
  csv << "step,loss_class,loss_tex,loss_sym,loss_area,val_acc\n";
  std::size_t vi = 0;
  char buf[40];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  for (const StepLog& s : log.steps) {
    csv << s.step << "," << fmt(s.loss_class) << "," << fmt(s.loss_tex) << ","
        << fmt(s.loss_sym) << "," << fmt(s.loss_area) << ",";
    if (vi < log.validation.size() && log.validation[vi].step == s.step)
      csv << fmt(log.validation[vi++].accuracy);
    csv << "\n";
  }
  if (!csv) throw input_error("write failed for log.csv");
  std::printf("trained %d steps on %d images; model.statn and log.csv written to %s\n",
              cli.train.steps, data.count(), cli.out.c_str());
  return 0;
}

int cmd_gradcheck(const CliConfig& cli) {
  const bool fault = cli.fault == "rotation-sign";
  if (!cli.fault.empty() && !fault)
    throw input_error("unknown --fault fixture '" + cli.fault + "'");
  const GradCheckReport report =
      run_gradient_cases(standard_gradient_cases(cli.seed, fault), cli.eps);
  std::fputs(report.to_string().c_str(), stdout);
  return report.all_pass() ? 0 : 1;
}

int cmd_fit(const CliConfig& cli) {
  ensure_out_dir(cli.out);
  const StaTNModel model = load_model(cli.model_path);
  Tensor image = read_ppm(cli.image_path);
  if (image.dim(0) != model.config.image_rows || image.dim(1) != model.config.image_cols)
    image = bilinear_resize(image, model.config.image_rows, model.config.image_cols);
  const FitResult result = fit(model, image);
  write_ppm(render_grid_overlay(image, result.Y, model.tri),
            join_path(cli.out, "overlay.ppm"));
  write_theta(join_path(cli.out, "theta.txt"), result.pose);
  std::printf("fit written to %s (overlay.ppm, theta.txt)\n", cli.out.c_str());
  return 0;
}

int cmd_sample(const CliConfig& cli) {
  ensure_out_dir(cli.out);
  const StaTNModel model = load_model(cli.model_path);
  Tensor image = read_ppm(cli.image_path);
  if (image.dim(0) != model.config.image_rows || image.dim(1) != model.config.image_cols)
    image = bilinear_resize(image, model.config.image_rows, model.config.image_cols);
  const ForwardPass fp = statn_forward(model, image, false);
  write_ppm(as_image(fp.V, model.config.sample_rows, model.config.sample_cols,
                     model.config.channels),
            join_path(cli.out, "resampled.ppm"));
  std::printf("resampled.ppm written to %s\n", cli.out.c_str());
  return 0;
}

int cmd_average(const CliConfig& cli) {
  ensure_out_dir(cli.out);
  const StaTNModel model = load_model(cli.model_path);
  std::vector<Tensor> images;
  images.reserve(cli.images.size());
  for (const std::string& path : cli.images) {
    Tensor image = read_ppm(path);
    if (image.dim(0) != model.config.image_rows ||
        image.dim(1) != model.config.image_cols)
      image = bilinear_resize(image, model.config.image_rows, model.config.image_cols);
    images.push_back(std::move(image));
  }
  write_ppm(average_identity(model, images), join_path(cli.out, "average.ppm"));
  std::printf("average.ppm written to %s (%zu images)\n", cli.out.c_str(),
              images.size());
  return 0;
}

int cmd_synth(const CliConfig& cli) {
  ensure_out_dir(cli.out);
  const Dataset data = cli.classes > 0
                           ? synth_generate_classes(cli.synth, cli.classes)
                           : synth_generate(cli.synth);
  std::ofstream truth(join_path(cli.out, "truth.csv"));
  if (!truth) throw input_error("cannot open truth.csv under " + cli.out);
  truth << "item,label,phi,tx,ty,logs";
  for (int d = 0; d < cli.synth.true_dim; ++d) truth << ",alpha" << d;
  truth << "\n";
  char name[64];
  for (int i = 0; i < data.count(); ++i) {
    const DatasetItem& item = data.items[i];
    std::string dir = cli.out;
    if (item.label >= 0) {
      std::snprintf(name, sizeof name, "class_%d", item.label);
      dir = join_path(cli.out, name);
      fs::create_directories(dir);
    }
    std::snprintf(name, sizeof name, "item_%04d.ppm", i);
    write_ppm(item.image, join_path(dir, name));
    truth << i << "," << item.label << "," << item.truth.phi << "," << item.truth.tx
          << "," << item.truth.ty << "," << item.truth.logs;
    for (double a : item.truth.alpha) truth << "," << a;
    truth << "\n";
  }
  std::printf("%d synthetic images written to %s\n", data.count(), cli.out.c_str());
  return 0;
}

int cmd_components(const CliConfig& cli) {
  ensure_out_dir(cli.out);
  const StaTNModel model = load_model(cli.model_path);
  const int sr = model.config.sample_rows, sc = model.config.sample_cols;
  const int ch = model.config.channels;

  // coefficient spread per component, from data when provided
  std::vector<double> shape_sigma(static_cast<std::size_t>(model.config.shape_dim), 1.0);
  std::vector<double> tex_sigma(
      static_cast<std::size_t>(std::max(model.config.texture_dim, 0)), 1.0);
  if (!cli.data.empty()) {
    const Dataset data = load_image_dir(cli.data, false, model.config.image_rows,
                                        model.config.image_cols);
    std::vector<double> s2(shape_sigma.size(), 0.0), t2(tex_sigma.size(), 0.0);
    for (const auto& item : data.items) {
      const ForwardPass fp = statn_forward(model, item.image, false);
      for (std::size_t d = 0; d < s2.size(); ++d) s2[d] += fp.pose.alpha[d] * fp.pose.alpha[d];
      if (model.has_appearance()) {
        const AppearanceModel app = model.appearance_view();
        for (std::size_t d = 0; d < t2.size(); ++d) {
          double coeff = 0.0;
          for (int i = 0; i < app.length(); ++i)
            coeff += app.basis(i, static_cast<int>(d)) * (fp.V[i] - app.mean[i]);
          t2[d] += coeff * coeff;
        }
      }
    }
    for (std::size_t d = 0; d < s2.size(); ++d)
      shape_sigma[d] = std::max(std::sqrt(s2[d] / data.count()), 1e-6);
    for (std::size_t d = 0; d < t2.size(); ++d)
      tex_sigma[d] = std::max(std::sqrt(t2[d] / data.count()), 1e-6);
  }

  if (model.has_appearance())
    write_ppm(as_image(model.tex_mean.value, sr, sc, ch),
              join_path(cli.out, "mean_texture.ppm"));

  const Tensor canvas =
      Tensor::full({model.config.image_rows, model.config.image_cols, ch}, 0.0);
  const ShapeModel shape = model.shape_view();
  char name[64];
  for (int d = 0; d < std::min(3, model.config.shape_dim); ++d) {
    for (int sign : {+1, -1}) {
      PoseParams pose = PoseParams::identity(model.config.shape_dim);
      pose.alpha[static_cast<std::size_t>(d)] = 2.0 * sign * shape_sigma[static_cast<std::size_t>(d)];
      const GridTrace trace = grid_generate(shape, pose);
      std::snprintf(name, sizeof name, "shape_%d_%s.ppm", d, sign > 0 ? "plus" : "minus");
      write_ppm(render_grid_overlay(canvas, trace.Y, model.tri), join_path(cli.out, name));
    }
  }
  if (model.has_appearance()) {
    for (int d = 0; d < std::min(3, model.config.texture_dim); ++d) {
      for (int sign : {+1, -1}) {
        Tensor tex = model.tex_mean.value;
        for (int i = 0; i < tex.dim(0); ++i)
          tex[i] += 2.0 * sign * tex_sigma[static_cast<std::size_t>(d)] *
                    model.tex_basis.value(i, d);
        std::snprintf(name, sizeof name, "texture_%d_%s.ppm", d,
                      sign > 0 ? "plus" : "minus");
        write_ppm(as_image(tex, sr, sc, ch), join_path(cli.out, name));
      }
    }
  }
  std::printf("component visualisations written to %s\n", cli.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statistical transformer network trainer and tools"};
  app.require_subcommand(1);
  CliConfig cli;

  CLI::App* train_cmd = app.add_subcommand("train", "train a model on an image directory");
  train_cmd->add_option("--data", cli.data, "dataset directory")->required();
  train_cmd->add_option("--out", cli.out, "output directory")->required();
  train_cmd->add_flag("--labeled", cli.labeled, "treat subdirectories as class labels");
  train_cmd->add_option("--image-rows", cli.image_rows, "resize images to this many rows");
  train_cmd->add_option("--image-cols", cli.image_cols, "resize images to this many cols");
  train_cmd->add_option("--grid-rows", cli.grid_rows, "shape grid rows");
  train_cmd->add_option("--grid-cols", cli.grid_cols, "shape grid cols");
  train_cmd->add_option("--sample-rows", cli.sample_rows, "sampling grid rows");
  train_cmd->add_option("--sample-cols", cli.sample_cols, "sampling grid cols");
  train_cmd->add_option("--shape-dim", cli.shape_dim, "shape model components");
  train_cmd->add_option("--texture-dim", cli.texture_dim, "appearance model components");
  add_train_flags(train_cmd, cli.train);

  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  grad_cmd->add_option("--eps", cli.eps, "finite-difference step");
  grad_cmd->add_option("--seed", cli.seed, "RNG seed");
  grad_cmd->add_option("--fault", cli.fault, "planted-bug fixture (rotation-sign)")
      ->group("");  // hidden: test fixture only

  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model to one image");
  fit_cmd->add_option("--model", cli.model_path, "model file")->required();
  fit_cmd->add_option("--image", cli.image_path, "input image (PPM)")->required();
  fit_cmd->add_option("--out", cli.out, "output directory")->required();

  CLI::App* sample_cmd = app.add_subcommand("sample", "resample one image through the model");
  sample_cmd->add_option("--model", cli.model_path, "model file")->required();
  sample_cmd->add_option("--image", cli.image_path, "input image (PPM)")->required();
  sample_cmd->add_option("--out", cli.out, "output directory")->required();

  CLI::App* avg_cmd = app.add_subcommand("average", "average resampled images");
  avg_cmd->add_option("--model", cli.model_path, "model file")->required();
  avg_cmd->add_option("--out", cli.out, "output directory")->required();
  avg_cmd->add_option("images", cli.images, "input images (PPM)")->required();

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--out", cli.out, "output directory")->required();
  synth_cmd->add_option("--count", cli.synth.count, "number of images");
  synth_cmd->add_option("--image-rows", cli.synth.image_rows, "image rows");
  synth_cmd->add_option("--image-cols", cli.synth.image_cols, "image cols");
  synth_cmd->add_option("--grid-rows", cli.synth.grid_rows, "generator grid rows");
  synth_cmd->add_option("--grid-cols", cli.synth.grid_cols, "generator grid cols");
  synth_cmd->add_option("--true-dim", cli.synth.true_dim, "generator shape components");
  synth_cmd->add_option("--phi-max", cli.synth.phi_max, "max |rotation| (radians)");
  synth_cmd->add_option("--t-max", cli.synth.t_max, "max |translation| (normalized)");
  synth_cmd->add_option("--logs-max", cli.synth.logs_max, "max |log scale|");
  synth_cmd->add_option("--alpha-max", cli.synth.alpha_max, "max |shape coefficient|");
  synth_cmd->add_option("--clutter", cli.synth.clutter, "background clutter level [0,1]");
  synth_cmd->add_option("--seed", cli.synth.seed, "RNG seed");
  synth_cmd->add_option("--classes", cli.classes, "class count (0 = unlabeled)");

  CLI::App* comp_cmd = app.add_subcommand("components", "visualise model components");
  comp_cmd->add_option("--model", cli.model_path, "model file")->required();
  comp_cmd->add_option("--out", cli.out, "output directory")->required();
  comp_cmd->add_option("--data", cli.data,
                       "image directory for estimating component spread");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(cli);
    if (grad_cmd->parsed()) return cmd_gradcheck(cli);
    if (fit_cmd->parsed()) return cmd_fit(cli);
    if (sample_cmd->parsed()) return cmd_sample(cli);
    if (avg_cmd->parsed()) return cmd_average(cli);
    if (synth_cmd->parsed()) return cmd_synth(cli);
    if (comp_cmd->parsed()) return cmd_components(cli);
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const format_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
