#pragma once

#include <cstdint>
#include <vector>

#include "statn/dataset.hpp"
#include "statn/gradcheck.hpp"
#include "statn/layers.hpp"
#include "statn/losses.hpp"
#include "statn/param.hpp"
#include "statn/rng.hpp"
#include "statn/shape_model.hpp"
#include "statn/triangulation.hpp"
#include "statn/upsampler.hpp"

namespace statn {

struct ModelConfig {
  int image_rows = 64;
  int image_cols = 64;
  int channels = 1;
  int grid_rows = 10;   // low-resolution shape grid
  int grid_cols = 10;
  int sample_rows = 28;  // high-resolution sampling grid
  int sample_cols = 28;
  int shape_dim = 10;
  int texture_dim = 10;  // 0 disables the appearance model
  int class_count = 0;   // 0 disables the classifier
  std::vector<LayerSpec> localiser_body;   // regression head fc(D+4) appended
  std::vector<LayerSpec> classifier_body;  // head fc(class_count) appended
};

// small stride-2 conv stack sized to the input
std::vector<LayerSpec> default_localiser_body(int image_rows, int image_cols);
std::vector<LayerSpec> default_classifier_body();

// Full network: localiser -> shape decode/scale/rotate/translate -> grid
// upsample -> bilinear sample (-> classifier). Shape and appearance bases are
// Stiefel-constrained, the mean shape centred.
struct StaTNModel {
  ModelConfig config;
  LayerStack localiser;
  Param shape_mean;   // {2, N}, centred
  Param shape_basis;  // {2N, D}, Stiefel
  Param tex_mean;     // {M*C}
  Param tex_basis;    // {M*C, D_tex}, Stiefel
  LayerStack classifier;
  UpsampleWeights upsample;
  Triangulation tri;

  bool has_appearance() const { return config.texture_dim > 0; }
  bool has_classifier() const { return config.class_count > 0; }
  int point_count() const { return config.grid_rows * config.grid_cols; }
  int sample_count() const { return config.sample_rows * config.sample_cols; }

  ShapeModel shape_view() const;
  AppearanceModel appearance_view() const;
};

// He-initialised stacks, zeroed regression head (identity pose at start),
// regular-grid mean, orthonormalised random bases.
StaTNModel build_model(const ModelConfig& config, Rng& rng);

PoseParams localiser_forward(const StaTNModel& model, const Tensor& image);

// One full forward pass with every intermediate kept for the backward pass
// and for visualisation.
struct ForwardPass {
  std::vector<Tensor> loc_acts;
  Tensor theta;  // {D+4}
  PoseParams pose;
  GridTrace grid;  // grid.Y is the low-resolution grid
  Tensor Z;        // {2, M}
  Tensor V;        // {M, C}
  std::vector<Tensor> cls_acts;
  Tensor logits;
};

ForwardPass statn_forward(const StaTNModel& model, const Tensor& image,
                          bool with_classifier = true);

struct TrainConfig {
  double w_class = 0.0;
  double w_tex = 1.0;
  double w_sym = 0.0;
  double w_area = 0.0;
  double lr_localiser = 0.001;
  double lr_classifier = 0.001;
  double lr_shape = 0.01;
  double lr_texture = 1.0;
  double area_k = 0.99;
  int batch_size = 16;
  int steps = 1000;
  std::uint64_t seed = 1;
  bool augment = false;
  int augment_pixels = 8;
  double val_fraction = 0.1;
  int val_every = 100;  // validation / drift cadence; 0 = final step only
  int threads = 1;
};

struct StepLog {
  int step;  // 0-based
  double loss_class, loss_tex, loss_sym, loss_area;  // batch means, unweighted
};
struct EvalLog {
  int step;
  double accuracy;
};
struct DriftLog {
  int step;
  double shape_basis_dev, shape_mean_dev, tex_basis_dev;
};
struct TrainLog {
  std::vector<StepLog> steps;
  std::vector<EvalLog> validation;
  std::vector<DriftLog> drift;
};

// Minibatch SGD with constrained updates for the shape/appearance manifolds.
// Deterministic for a fixed seed and thread count.
TrainLog train(StaTNModel& model, const Dataset& dataset, const TrainConfig& config);

struct FitResult {
  PoseParams pose;
  Tensor theta;
  Tensor Y;  // {2, N}
  Tensor Z;  // {2, M}
};

FitResult fit(const StaTNModel& model, const Tensor& image);

// elementwise mean of the resampled outputs, {sample_rows, sample_cols, C}
Tensor average_identity(const StaTNModel& model, const std::vector<Tensor>& images);

// Per-item hybrid loss and its gradients; the building block of `train` and
// of the end-to-end finite-difference check.
struct GradAccum {
  std::vector<Tensor> localiser;
  std::vector<Tensor> classifier;
  Tensor shape_mean, shape_basis, tex_mean, tex_basis;
  double loss_class = 0.0, loss_tex = 0.0, loss_sym = 0.0, loss_area = 0.0;

  static GradAccum zeros_like(const StaTNModel& model);
  void add_scaled(const GradAccum& other, double scale);
  void scale(double factor);
};

double item_loss(const StaTNModel& model, const Tensor& image, int label,
                 const TrainConfig& config);
double item_backward(const StaTNModel& model, const Tensor& image, int label,
                     const TrainConfig& config, GradAccum& acc);

// Finite-difference suite covering every layer and loss plus a tiny
// end-to-end model. fault_rotation_sign flips the analytic rotation gradient
// (fixture for verifying that the suite catches a planted bug).
std::vector<GradCheckCase> standard_gradient_cases(std::uint64_t seed,
                                                   bool fault_rotation_sign = false);

}  // namespace statn
