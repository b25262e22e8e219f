#include "statn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <utility>

#include "statn/errors.hpp"
#include "statn/manifold.hpp"
#include "statn/sampler.hpp"

namespace statn {

std::vector<LayerSpec> default_localiser_body(int image_rows, int image_cols) {
  static const int channels[] = {8, 12, 16, 16, 16, 16};
  std::vector<LayerSpec> body;
  int extent = std::min(image_rows, image_cols);
  int i = 0;
  while (extent > 8 && i < 6) {
    body.push_back(LayerSpec::conv(3, channels[i], /*stride=*/2, /*pad=*/1));
    body.push_back(LayerSpec::relu());
    extent = (extent - 1) / 2 + 1;
    ++i;
  }
  body.push_back(LayerSpec::fc(64));
  body.push_back(LayerSpec::relu());
  return body;
}

std::vector<LayerSpec> default_classifier_body() {
  return {LayerSpec::fc(32), LayerSpec::relu()};
}

ShapeModel StaTNModel::shape_view() const {
  ShapeModel s;
  s.mean = shape_mean.value;
  s.basis = shape_basis.value;
  s.grid_rows = config.grid_rows;
  s.grid_cols = config.grid_cols;
  return s;
}

AppearanceModel StaTNModel::appearance_view() const {
  AppearanceModel a;
  a.mean = tex_mean.value;
  a.basis = tex_basis.value;
  return a;
}

StaTNModel build_model(const ModelConfig& config, Rng& rng) {
  ModelConfig cfg = config;
  if (cfg.image_rows < 2 || cfg.image_cols < 2 || cfg.channels < 1)
    throw config_error("build_model: image must be at least 2x2x1");
  if (cfg.grid_rows < 2 || cfg.grid_cols < 2)
    throw config_error("build_model: shape grid must be at least 2x2");
  if (cfg.sample_rows < 2 || cfg.sample_cols < 2)
    throw config_error("build_model: sampling grid must be at least 2x2");
  const int n = cfg.grid_rows * cfg.grid_cols;
  const int m = cfg.sample_rows * cfg.sample_cols;
  if (cfg.shape_dim < 1 || cfg.shape_dim > 2 * n)
    throw config_error("build_model: shape_dim must be in [1, 2N]");
  if (cfg.texture_dim < 0 || cfg.texture_dim > m * cfg.channels)
    throw config_error("build_model: texture_dim must be in [0, M*C]");
  if (cfg.class_count < 0) throw config_error("build_model: negative class_count");
  if (cfg.localiser_body.empty())
    cfg.localiser_body = default_localiser_body(cfg.image_rows, cfg.image_cols);
  if (cfg.class_count > 0 && cfg.classifier_body.empty())
    cfg.classifier_body = default_classifier_body();

  StaTNModel model;
  model.config = cfg;

  auto loc_specs = cfg.localiser_body;
  loc_specs.push_back(LayerSpec::fc(cfg.shape_dim + 4));
  model.localiser = LayerStack::build(std::move(loc_specs),
                                      {cfg.image_rows, cfg.image_cols, cfg.channels}, rng);
  // zeroed regression head: the untrained network outputs the identity pose
  const std::size_t np = model.localiser.params.size();
  model.localiser.params[np - 2].value.fill(0.0);
  model.localiser.params[np - 1].value.fill(0.0);

  ShapeModel shape = ShapeModel::init(cfg.grid_rows, cfg.grid_cols, cfg.shape_dim, rng);
  model.shape_mean = Param(std::move(shape.mean), Constraint::centred, 0.01);
  model.shape_basis = Param(std::move(shape.basis), Constraint::stiefel, 0.01);

  if (cfg.texture_dim > 0) {
    AppearanceModel app = AppearanceModel::init(m * cfg.channels, cfg.texture_dim, rng);
    model.tex_mean = Param(std::move(app.mean), Constraint::none, 1.0);
    model.tex_basis = Param(std::move(app.basis), Constraint::stiefel, 1.0);
  }
  if (cfg.class_count > 0) {
    auto cls_specs = cfg.classifier_body;
    cls_specs.push_back(LayerSpec::fc(cfg.class_count));
    model.classifier = LayerStack::build(
        std::move(cls_specs), {cfg.sample_rows, cfg.sample_cols, cfg.channels}, rng);
  }
  model.upsample = precompute_upsample_weights(cfg.grid_rows, cfg.grid_cols,
                                               cfg.sample_rows, cfg.sample_cols);
  model.tri = Triangulation::regular(cfg.grid_rows, cfg.grid_cols);
  return model;
}

namespace {

void check_image(const StaTNModel& model, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != model.config.image_rows ||
      image.dim(1) != model.config.image_cols || image.dim(2) != model.config.channels)
    throw input_error("statn: image dims do not match the model");
}

}  // namespace

PoseParams localiser_forward(const StaTNModel& model, const Tensor& image) {
  check_image(model, image);
  const Tensor theta = model.localiser.forward(image);
  return PoseParams::from_vector(theta, model.config.shape_dim);
}

ForwardPass statn_forward(const StaTNModel& model, const Tensor& image,
                          bool with_classifier) {
  check_image(model, image);
  ForwardPass fp;
  fp.theta = model.localiser.forward(image, &fp.loc_acts);
  fp.pose = PoseParams::from_vector(fp.theta, model.config.shape_dim);
  fp.grid = grid_generate(model.shape_view(), fp.pose);
  fp.Z = upsample_grid(fp.grid.Y, model.upsample);
  fp.V = bilinear_sample(image, fp.Z);
  if (with_classifier && model.has_classifier()) {
    Tensor cls_in = reshaped(fp.V, {model.config.sample_rows, model.config.sample_cols,
                                    model.config.channels});
    fp.logits = model.classifier.forward(cls_in, &fp.cls_acts);
  }
  return fp;
}

GradAccum GradAccum::zeros_like(const StaTNModel& model) {
  GradAccum acc;
  acc.localiser = model.localiser.make_grad_buffer();
  acc.classifier = model.classifier.make_grad_buffer();
  acc.shape_mean = Tensor::zeros(model.shape_mean.value.shape);
  acc.shape_basis = Tensor::zeros(model.shape_basis.value.shape);
  if (model.has_appearance()) {
    acc.tex_mean = Tensor::zeros(model.tex_mean.value.shape);
    acc.tex_basis = Tensor::zeros(model.tex_basis.value.shape);
  }
  return acc;
}

void GradAccum::add_scaled(const GradAccum& other, double factor) {
  for (std::size_t i = 0; i < localiser.size(); ++i)
    axpy(localiser[i], factor, other.localiser[i]);
  for (std::size_t i = 0; i < classifier.size(); ++i)
    axpy(classifier[i], factor, other.classifier[i]);
  axpy(shape_mean, factor, other.shape_mean);
  axpy(shape_basis, factor, other.shape_basis);
  axpy(tex_mean, factor, other.tex_mean);
  axpy(tex_basis, factor, other.tex_basis);
  loss_class += factor * other.loss_class;
  loss_tex += factor * other.loss_tex;
  loss_sym += factor * other.loss_sym;
  loss_area += factor * other.loss_area;
}

void GradAccum::scale(double factor) {
  for (auto& t : localiser)
    for (double& v : t.data) v *= factor;
  for (auto& t : classifier)
    for (double& v : t.data) v *= factor;
  for (Tensor* t : {&shape_mean, &shape_basis, &tex_mean, &tex_basis})
    for (double& v : t->data) v *= factor;
  loss_class *= factor;
  loss_tex *= factor;
  loss_sym *= factor;
  loss_area *= factor;
}

double item_loss(const StaTNModel& model, const Tensor& image, int label,
                 const TrainConfig& config) {
  const bool classify = config.w_class > 0.0;
  if (classify && !model.has_classifier())
    throw config_error("item_loss: classification weight set on a model without classifier");
  const ForwardPass fp = statn_forward(model, image, classify);
  double total = 0.0;
  if (classify) total += config.w_class * softmax_cross_entropy(fp.logits, label);
  if (config.w_tex > 0.0 && model.has_appearance())
    total += config.w_tex * texture_loss(model.appearance_view(), fp.V);
  if (config.w_sym > 0.0)
    total += config.w_sym *
             symmetry_loss(fp.V, model.config.sample_rows, model.config.sample_cols);
  if (config.w_area > 0.0)
    total += config.w_area * area_loss(fp.grid.Y, model.tri, config.area_k);
  return total;
}

double item_backward(const StaTNModel& model, const Tensor& image, int label,
                     const TrainConfig& config, GradAccum& acc) {
  const bool classify = config.w_class > 0.0;
  if (classify && !model.has_classifier())
    throw config_error("item_backward: classification weight set on a model without classifier");
  const int m = model.sample_count();
  const int ch = model.config.channels;
  const ForwardPass fp = statn_forward(model, image, classify);
  double total = 0.0;

  Tensor dV({m, ch});
  if (classify) {
    const double lc = softmax_cross_entropy(fp.logits, label);
    acc.loss_class += lc;
    total += config.w_class * lc;
    Tensor dlogits = softmax_cross_entropy_backward(fp.logits, label);
    for (double& v : dlogits.data) v *= config.w_class;
    Tensor dcls_in = model.classifier.backward(fp.cls_acts, dlogits, acc.classifier);
    axpy(dV, 1.0, reshaped(std::move(dcls_in), {m, ch}));
  }
  if (config.w_tex > 0.0 && model.has_appearance()) {
    Tensor dv({m, ch});
    Tensor dmean(model.tex_mean.value.shape);
    Tensor dbasis(model.tex_basis.value.shape);
    const double lt =
        texture_loss_backward(model.appearance_view(), fp.V, &dv, &dmean, &dbasis);
    acc.loss_tex += lt;
    total += config.w_tex * lt;
    axpy(dV, config.w_tex, dv);
    axpy(acc.tex_mean, config.w_tex, dmean);
    axpy(acc.tex_basis, config.w_tex, dbasis);
  }
  if (config.w_sym > 0.0) {
    Tensor dv({m, ch});
    const double ls = symmetry_loss_backward(fp.V, model.config.sample_rows,
                                             model.config.sample_cols, &dv);
    acc.loss_sym += ls;
    total += config.w_sym * ls;
    axpy(dV, config.w_sym, dv);
  }

  Tensor dZ({2, m});
  bilinear_sample_backward(image, fp.Z, dV, nullptr, &dZ);
  Tensor dY({2, model.point_count()});
  upsample_grid_backward(model.upsample, dZ, &dY);

  if (config.w_area > 0.0) {
    Tensor dy({2, model.point_count()});
    const double la = area_loss_backward(fp.grid.Y, model.tri, config.area_k, &dy);
    acc.loss_area += la;
    total += config.w_area * la;
    axpy(dY, config.w_area, dy);
  }

  const ShapeModel shape = model.shape_view();
  const PoseGrad pg = grid_generate_backward(shape, fp.pose, fp.grid, dY,
                                             &acc.shape_basis, &acc.shape_mean);
  model.localiser.backward(fp.loc_acts, pg.to_vector(), acc.localiser);
  return total;
}

namespace {

constexpr std::uint64_t kSplitSalt = 0x9e3779b97f4a7c15ULL;

// content shifted by (dx, dy) pixels, zero fill
Tensor shift_image(const Tensor& image, int dx, int dy) {
  const int h = image.dim(0), w = image.dim(1), c = image.dim(2);
  Tensor out({h, w, c});
  for (int r = 0; r < h; ++r) {
    const int sr = r - dy;
    if (sr < 0 || sr >= h) continue;
    for (int col = 0; col < w; ++col) {
      const int sc = col - dx;
      if (sc < 0 || sc >= w) continue;
      for (int k = 0; k < c; ++k) out(r, col, k) = image(sr, sc, k);
    }
  }
  return out;
}

void make_split(const Dataset& dataset, const StaTNModel& model, const TrainConfig& cfg,
                std::vector<int>* train_idx, std::vector<int>* val_idx) {
  const int n = dataset.count();
  if (!(model.has_classifier() && dataset.labeled() && cfg.val_fraction > 0.0)) {
    train_idx->resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) (*train_idx)[i] = i;
    return;
  }
  Rng rng(cfg.seed ^ kSplitSalt);
  std::vector<std::vector<int>> per_class(static_cast<std::size_t>(dataset.class_count));
  for (int i = 0; i < n; ++i)
    per_class[static_cast<std::size_t>(dataset.items[i].label)].push_back(i);
  for (auto& bucket : per_class) {
    for (std::size_t i = bucket.size(); i > 1; --i)
      std::swap(bucket[i - 1], bucket[rng.uniform_index(i)]);
    const auto n_val = static_cast<std::size_t>(cfg.val_fraction * bucket.size());
    for (std::size_t i = 0; i < bucket.size(); ++i)
      (i < n_val ? val_idx : train_idx)->push_back(bucket[i]);
  }
  std::sort(train_idx->begin(), train_idx->end());
  std::sort(val_idx->begin(), val_idx->end());
}

double validation_accuracy(const StaTNModel& model, const Dataset& dataset,
                           const std::vector<int>& val_idx) {
  int correct = 0;
  for (int i : val_idx) {
    const ForwardPass fp = statn_forward(model, dataset.items[i].image, true);
    int best = 0;
    for (int k = 1; k < fp.logits.dim(0); ++k)
      if (fp.logits[k] > fp.logits[best]) best = k;
    if (best == dataset.items[i].label) ++correct;
  }
  return val_idx.empty() ? 0.0 : static_cast<double>(correct) / val_idx.size();
}

void apply_updates(StaTNModel& model, GradAccum& grads, const TrainConfig& cfg) {
  for (std::size_t i = 0; i < model.localiser.params.size(); ++i) {
    model.localiser.params[i].grad = std::move(grads.localiser[i]);
    constrained_sgd_step(model.localiser.params[i], cfg.lr_localiser);
  }
  for (std::size_t i = 0; i < model.classifier.params.size(); ++i) {
    model.classifier.params[i].grad = std::move(grads.classifier[i]);
    constrained_sgd_step(model.classifier.params[i], cfg.lr_classifier);
  }
  model.shape_mean.grad = std::move(grads.shape_mean);
  constrained_sgd_step(model.shape_mean, cfg.lr_shape);
  model.shape_basis.grad = std::move(grads.shape_basis);
  constrained_sgd_step(model.shape_basis, cfg.lr_shape);
  if (model.has_appearance()) {
    model.tex_mean.grad = std::move(grads.tex_mean);
    constrained_sgd_step(model.tex_mean, cfg.lr_texture);
    model.tex_basis.grad = std::move(grads.tex_basis);
    constrained_sgd_step(model.tex_basis, cfg.lr_texture);
  }
}

void validate_train_config(const StaTNModel& model, const Dataset& dataset,
                           const TrainConfig& cfg) {
  if (dataset.items.empty()) throw input_error("train: empty dataset");
  if (cfg.batch_size < 1) throw config_error("train: batch size must be >= 1");
  if (cfg.steps < 0) throw config_error("train: negative step count");
  if (cfg.threads < 1) throw config_error("train: thread count must be >= 1");
  if (!(cfg.lr_localiser >= 0.0) || !(cfg.lr_classifier >= 0.0) ||
      !(cfg.lr_shape >= 0.0) || !(cfg.lr_texture >= 0.0))
    throw config_error("train: learning rates must be non-negative");
  if (cfg.w_class < 0.0 || cfg.w_tex < 0.0 || cfg.w_sym < 0.0 || cfg.w_area < 0.0)
    throw config_error("train: loss weights must be non-negative");
  if (cfg.w_class > 0.0 && !model.has_classifier())
    throw config_error("train: classification weight set on a model without classifier");
  if (cfg.w_class > 0.0 && !dataset.labeled())
    throw config_error("train: classification weight set but the dataset is unlabeled");
  if (cfg.w_tex > 0.0 && !model.has_appearance())
    throw config_error("train: texture weight set on a model without appearance model");
  if (cfg.augment && cfg.augment_pixels < 0)
    throw config_error("train: negative augmentation jitter");
}

}  // namespace

TrainLog train(StaTNModel& model, const Dataset& dataset, const TrainConfig& cfg) {
  validate_train_config(model, dataset, cfg);
  check_image(model, dataset.items.front().image);

  std::vector<int> train_idx, val_idx;
  make_split(dataset, model, cfg, &train_idx, &val_idx);
  if (train_idx.empty()) throw input_error("train: no items left after the validation split");

  TrainLog log;
  Rng rng(cfg.seed);
  struct Draw {
    int index;
    int dx = 0, dy = 0;
  };
  std::vector<Draw> batch(static_cast<std::size_t>(cfg.batch_size));

  for (int step = 0; step < cfg.steps; ++step) {
    for (auto& d : batch) {
      d.index = train_idx[rng.uniform_index(train_idx.size())];
      if (cfg.augment && cfg.augment_pixels > 0) {
        const int span = 2 * cfg.augment_pixels + 1;
        d.dx = static_cast<int>(rng.uniform_index(span)) - cfg.augment_pixels;
        d.dy = static_cast<int>(rng.uniform_index(span)) - cfg.augment_pixels;
      }
    }

    auto run_item = [&](const Draw& d, GradAccum& acc) {
      const DatasetItem& item = dataset.items[d.index];
      if (cfg.augment && (d.dx != 0 || d.dy != 0))
        item_backward(model, shift_image(item.image, d.dx, d.dy), item.label, cfg, acc);
      else
        item_backward(model, item.image, item.label, cfg, acc);
    };

    GradAccum total = GradAccum::zeros_like(model);
    const int workers = std::min(cfg.threads, cfg.batch_size);
    if (workers <= 1) {
      for (const Draw& d : batch) run_item(d, total);
    } else {
      // contiguous chunks with per-worker accumulators, reduced in a fixed
      // order so results do not depend on scheduling
      std::vector<GradAccum> partial;
      partial.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) partial.push_back(GradAccum::zeros_like(model));
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w]() {
          const int lo = static_cast<int>(static_cast<std::int64_t>(cfg.batch_size) * w / workers);
          const int hi =
              static_cast<int>(static_cast<std::int64_t>(cfg.batch_size) * (w + 1) / workers);
          for (int i = lo; i < hi; ++i) run_item(batch[static_cast<std::size_t>(i)], partial[static_cast<std::size_t>(w)]);
        });
      for (auto& t : pool) t.join();
      for (auto& p : partial) total.add_scaled(p, 1.0);
    }
    total.scale(1.0 / cfg.batch_size);

    if (!std::isfinite(total.loss_class + total.loss_tex + total.loss_sym + total.loss_area))
      throw numeric_error("train: non-finite loss at step " + std::to_string(step));

    log.steps.push_back({step, total.loss_class, total.loss_tex, total.loss_sym,
                         total.loss_area});
    apply_updates(model, total, cfg);

    const bool last = step + 1 == cfg.steps;
    const bool cadence = cfg.val_every > 0 && (step + 1) % cfg.val_every == 0;
    if (last || cadence) {
      log.drift.push_back({step, stiefel_deviation(model.shape_basis.value),
                           centred_deviation(model.shape_mean.value),
                           model.has_appearance()
                               ? stiefel_deviation(model.tex_basis.value)
                               : 0.0});
      if (!val_idx.empty())
        log.validation.push_back({step, validation_accuracy(model, dataset, val_idx)});
    }
  }
  return log;
}

FitResult fit(const StaTNModel& model, const Tensor& image) {
  ForwardPass fp = statn_forward(model, image, false);
  FitResult r;
  r.pose = std::move(fp.pose);
  r.theta = std::move(fp.theta);
  r.Y = std::move(fp.grid.Y);
  r.Z = std::move(fp.Z);
  return r;
}

Tensor average_identity(const StaTNModel& model, const std::vector<Tensor>& images) {
  if (images.empty()) throw input_error("average_identity: no images");
  Tensor sum({model.config.sample_rows, model.config.sample_cols, model.config.channels});
  for (const Tensor& image : images) {
    const ForwardPass fp = statn_forward(model, image, false);
    axpy(sum, 1.0, reshaped(fp.V, sum.shape));
  }
  for (double& v : sum.data) v /= static_cast<double>(images.size());
  return sum;
}

}  // namespace statn
