#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "statn/shape_model.hpp"
#include "statn/tensor.hpp"

namespace statn {

struct DatasetItem {
  Tensor image;    // {H, W, C}, values in [0,1]
  int label = -1;  // -1 = unlabeled
  bool has_truth = false;
  PoseParams truth;  // generator pose for synthetic items
};

struct Dataset {
  std::vector<DatasetItem> items;
  int class_count = 0;
  std::vector<std::string> class_names;

  int count() const { return static_cast<int>(items.size()); }
  bool labeled() const;  // class_count > 0 and every item carries a label
};

// Synthetic deformable-template data: each image is the template warped by a
// random pose drawn from the ranges below, composited over seeded clutter.
// The drawing pose is recorded as ground truth.
struct SynthConfig {
  Tensor template_image;  // {H, W, C}; empty -> built-in pattern 0
  int image_rows = 64;
  int image_cols = 64;
  int grid_rows = 6;
  int grid_cols = 6;
  int true_dim = 4;  // deformation components of the generating shape model
  double phi_max = 0.0;
  double t_max = 0.0;
  double logs_max = 0.0;
  double alpha_max = 0.0;
  double clutter = 0.0;  // background noise level in [0,1]
  int count = 100;
  std::uint64_t seed = 1;
};

// true_shape (optional) receives the generating shape model so tests can
// replay recorded poses.
Dataset synth_generate(const SynthConfig& config, ShapeModel* true_shape = nullptr);

// one template pattern per class, labels round-robin
Dataset synth_generate_classes(const SynthConfig& config, int classes);

// deterministic left-right symmetric toy pattern; index selects the texture
Tensor make_template(int rows, int cols, int channels, int index);

// Warp the template so that sampling the result along the posed grid
// reproduces the template contents. Pixels outside the warped grid get
// `background`.
Tensor render_posed_template(const Tensor& template_image, const ShapeModel& shape,
                             const PoseParams& pose, int out_rows, int out_cols,
                             double background = 0.0);

// Reads every image under `path` (PPM). With labels_from_subdirs, each
// immediate subdirectory is one class, indexed lexicographically. Images are
// resized to resize_rows x resize_cols (0 = size of the first readable
// image). Unreadable files produce a warning on stderr and are skipped.
Dataset load_image_dir(const std::string& path, bool labels_from_subdirs,
                       int resize_rows = 0, int resize_cols = 0);

}  // namespace statn
