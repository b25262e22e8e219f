#include "statn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "statn/errors.hpp"
#include "statn/image_io.hpp"
#include "statn/manifold.hpp"
#include "statn/sampler.hpp"
#include "statn/triangulation.hpp"

namespace statn {

bool Dataset::labeled() const {
  if (class_count <= 0 || items.empty()) return false;
  for (const auto& item : items)
    if (item.label < 0 || item.label >= class_count) return false;
  return true;
}

Tensor make_template(int rows, int cols, int channels, int index) {
  if (rows < 2 || cols < 2 || channels < 1)
    throw config_error("make_template: bad dimensions");
  Tensor t({rows, cols, channels});
  const double pi = 3.14159265358979323846;
  const int fr = index % 3 + 1;
  const int fy = (index / 3) % 3 + 1;
  const double phase = 0.6 * (index % 5);
  for (int r = 0; r < rows; ++r) {
    const double y = -1.0 + 2.0 * r / (rows - 1);
    for (int c = 0; c < cols; ++c) {
      const double x = -1.0 + 2.0 * c / (cols - 1);
      const double rho = std::sqrt(x * x + y * y);
      for (int k = 0; k < channels; ++k) {
        const double v = 0.5 + 0.25 * std::cos(2.0 * pi * fr * rho + phase + 0.4 * k) +
                         0.25 * std::cos(pi * fy * y + 0.3 * phase);
        t(r, c, k) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return t;
}

namespace {

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

}  // namespace

Tensor render_posed_template(const Tensor& template_image, const ShapeModel& shape,
                             const PoseParams& pose, int out_rows, int out_cols,
                             double background) {
  if (template_image.rank() != 3)
    throw input_error("render_posed_template: template must be {H,W,C}");
  if (out_rows < 2 || out_cols < 2)
    throw config_error("render_posed_template: output must be at least 2x2");
  const int channels = template_image.dim(2);
  const Tensor warped = grid_generate(shape, pose).Y;
  const Tensor domain = regular_grid(shape.grid_rows, shape.grid_cols);
  const Triangulation tri = Triangulation::regular(shape.grid_rows, shape.grid_cols);

  Tensor out = Tensor::full({out_rows, out_cols, channels}, background);
  std::vector<int> hit_r, hit_c;
  std::vector<double> coords;  // template-domain positions, packed x then y per hit

  for (int r = 0; r < out_rows; ++r) {
    const double py = -1.0 + 2.0 * r / (out_rows - 1);
    for (int c = 0; c < out_cols; ++c) {
      const double px = -1.0 + 2.0 * c / (out_cols - 1);
      for (const auto& t : tri.triangles) {
        const double axp = warped(0, t[0]), ayp = warped(1, t[0]);
        const double ux = warped(0, t[1]) - axp, uy = warped(1, t[1]) - ayp;
        const double vx = warped(0, t[2]) - axp, vy = warped(1, t[2]) - ayp;
        const double det = cross2(ux, uy, vx, vy);
        if (std::abs(det) < 1e-14) continue;
        const double s = cross2(px - axp, py - ayp, vx, vy) / det;
        const double q = cross2(ux, uy, px - axp, py - ayp) / det;
        const double tol = -1e-9;
        if (s < tol || q < tol || 1.0 - s - q < tol) continue;
        hit_r.push_back(r);
        hit_c.push_back(c);
        coords.push_back((1.0 - s - q) * domain(0, t[0]) + s * domain(0, t[1]) +
                         q * domain(0, t[2]));
        coords.push_back((1.0 - s - q) * domain(1, t[0]) + s * domain(1, t[1]) +
                         q * domain(1, t[2]));
        break;
      }
    }
  }

  if (!hit_r.empty()) {
    const int hits = static_cast<int>(hit_r.size());
    Tensor grid({2, hits});
    for (int i = 0; i < hits; ++i) {
      grid(0, i) = coords[static_cast<std::size_t>(2 * i)];
      grid(1, i) = coords[static_cast<std::size_t>(2 * i) + 1];
    }
    const Tensor values = bilinear_sample(template_image, grid);
    for (int i = 0; i < hits; ++i)
      for (int k = 0; k < channels; ++k) out(hit_r[i], hit_c[i], k) = values(i, k);
  }
  return out;
}

namespace {

void validate_synth(const SynthConfig& cfg) {
  if (cfg.count < 1) throw config_error("synth: count must be >= 1");
  if (cfg.image_rows < 4 || cfg.image_cols < 4)
    throw config_error("synth: image must be at least 4x4");
  if (cfg.grid_rows < 2 || cfg.grid_cols < 2)
    throw config_error("synth: grid must be at least 2x2");
  const int n = cfg.grid_rows * cfg.grid_cols;
  if (cfg.true_dim < 1 || cfg.true_dim > 2 * n)
    throw config_error("synth: true_dim must be in [1, 2N]");
  if (cfg.phi_max < 0.0 || cfg.t_max < 0.0 || cfg.logs_max < 0.0 || cfg.alpha_max < 0.0)
    throw config_error("synth: pose ranges must be non-negative");
  if (cfg.clutter < 0.0 || cfg.clutter > 1.0)
    throw config_error("synth: clutter level must be in [0,1]");
}

// deformation basis with zero-centroid columns, so the grid centroid of every
// generated shape equals its translation
ShapeModel centred_true_shape(const SynthConfig& cfg, Rng& rng) {
  ShapeModel shape = ShapeModel::init(cfg.grid_rows, cfg.grid_cols, cfg.true_dim, rng);
  const int n = shape.point_count();
  for (int d = 0; d < cfg.true_dim; ++d) {
    double mx = 0.0, my = 0.0;
    for (int j = 0; j < n; ++j) {
      mx += shape.basis(2 * j, d);
      my += shape.basis(2 * j + 1, d);
    }
    mx /= n;
    my /= n;
    for (int j = 0; j < n; ++j) {
      shape.basis(2 * j, d) -= mx;
      shape.basis(2 * j + 1, d) -= my;
    }
  }
  shape.basis = polar_factor(shape.basis);
  return shape;
}

Tensor clutter_background(int rows, int cols, int channels, double level, Rng& rng) {
  Tensor coarse({5, 5, channels});
  for (double& v : coarse.data) v = rng.uniform() * level;
  Tensor bg = bilinear_resize(coarse, rows, cols);
  const int rects = static_cast<int>(rng.uniform_index(4));
  for (int i = 0; i < rects; ++i) {
    const int r0 = static_cast<int>(rng.uniform_index(rows));
    const int c0 = static_cast<int>(rng.uniform_index(cols));
    const int rh = 1 + static_cast<int>(rng.uniform_index(std::max(1, rows / 3)));
    const int rw = 1 + static_cast<int>(rng.uniform_index(std::max(1, cols / 3)));
    std::vector<double> value(static_cast<std::size_t>(channels));
    for (double& v : value) v = rng.uniform() * level;
    for (int r = r0; r < std::min(rows, r0 + rh); ++r)
      for (int c = c0; c < std::min(cols, c0 + rw); ++c)
        for (int k = 0; k < channels; ++k) bg(r, c, k) = value[static_cast<std::size_t>(k)];
  }
  return bg;
}

Dataset generate_impl(const SynthConfig& cfg, const std::vector<Tensor>& templates,
                      int classes, ShapeModel* true_shape) {
  validate_synth(cfg);
  Rng rng(cfg.seed);
  const ShapeModel shape = centred_true_shape(cfg, rng);
  if (true_shape) *true_shape = shape;
  const int channels = templates.front().dim(2);

  Dataset data;
  data.class_count = classes;
  data.items.reserve(static_cast<std::size_t>(cfg.count));
  for (int i = 0; i < cfg.count; ++i) {
    DatasetItem item;
    item.label = classes > 0 ? i % classes : -1;
    PoseParams pose;
    pose.phi = rng.uniform(-cfg.phi_max, cfg.phi_max);
    pose.tx = rng.uniform(-cfg.t_max, cfg.t_max);
    pose.ty = rng.uniform(-cfg.t_max, cfg.t_max);
    pose.logs = rng.uniform(-cfg.logs_max, cfg.logs_max);
    pose.alpha.resize(static_cast<std::size_t>(cfg.true_dim));
    for (double& a : pose.alpha) a = rng.uniform(-cfg.alpha_max, cfg.alpha_max);

    const Tensor& tmpl = templates[static_cast<std::size_t>(std::max(item.label, 0))];
    Tensor clean = render_posed_template(tmpl, shape, pose, cfg.image_rows,
                                         cfg.image_cols, /*background=*/-1.0);
    Tensor image;
    if (cfg.clutter > 0.0) {
      image = clutter_background(cfg.image_rows, cfg.image_cols, channels, cfg.clutter, rng);
      for (std::int64_t j = 0; j < clean.size(); ++j)
        if (clean[j] >= 0.0) image[j] = clean[j];
    } else {
      image = std::move(clean);
      for (double& v : image.data)
        if (v < 0.0) v = 0.0;
    }
    item.image = std::move(image);
    item.truth = std::move(pose);
    item.has_truth = true;
    data.items.push_back(std::move(item));
  }
  return data;
}

}  // namespace

Dataset synth_generate(const SynthConfig& config, ShapeModel* true_shape) {
  std::vector<Tensor> templates;
  if (config.template_image.size() > 0) {
    if (config.template_image.rank() != 3)
      throw config_error("synth: template must be {H,W,C}");
    templates.push_back(config.template_image);
  } else {
    templates.push_back(make_template(config.image_rows, config.image_cols, 1, 0));
  }
  return generate_impl(config, templates, 0, true_shape);
}

Dataset synth_generate_classes(const SynthConfig& config, int classes) {
  if (classes < 2) throw config_error("synth: need at least 2 classes");
  std::vector<Tensor> templates;
  templates.reserve(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c)
    templates.push_back(make_template(config.image_rows, config.image_cols, 1, c));
  return generate_impl(config, templates, classes, nullptr);
}

Dataset load_image_dir(const std::string& path, bool labels_from_subdirs,
                       int resize_rows, int resize_cols) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) throw input_error("load_image_dir: not a directory: " + path);

  Dataset data;
  std::vector<std::pair<std::string, int>> files;  // path, label
  if (labels_from_subdirs) {
    std::vector<std::string> subdirs;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_directory()) subdirs.push_back(entry.path().filename().string());
    std::sort(subdirs.begin(), subdirs.end());
    data.class_names = subdirs;
    data.class_count = static_cast<int>(subdirs.size());
    for (int label = 0; label < data.class_count; ++label) {
      std::vector<std::string> names;
      for (const auto& entry :
           fs::directory_iterator(fs::path(path) / subdirs[static_cast<std::size_t>(label)]))
        if (entry.is_regular_file()) names.push_back(entry.path().string());
      std::sort(names.begin(), names.end());
      for (auto& name : names) files.emplace_back(std::move(name), label);
    }
  } else {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file()) names.push_back(entry.path().string());
    std::sort(names.begin(), names.end());
    for (auto& name : names) files.emplace_back(std::move(name), -1);
  }

  int target_rows = resize_rows, target_cols = resize_cols;
  for (const auto& [file, label] : files) {
    Tensor image;
    try {
      image = read_ppm(file);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "warning: skipping %s: %s\n", file.c_str(), e.what());
      continue;
    }
    if (target_rows <= 0 || target_cols <= 0) {
      target_rows = image.dim(0);
      target_cols = image.dim(1);
    }
    if (image.dim(0) != target_rows || image.dim(1) != target_cols)
      image = bilinear_resize(image, target_rows, target_cols);
    DatasetItem item;
    item.image = std::move(image);
    item.label = label;
    data.items.push_back(std::move(item));
  }
  if (data.items.empty())
    throw input_error("load_image_dir: no readable images under " + path);
  return data;
}

}  // namespace statn
