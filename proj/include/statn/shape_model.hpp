#pragma once

#include <vector>

#include "statn/rng.hpp"
#include "statn/tensor.hpp"

namespace statn {

// Per-image pose regressed by the localiser: rotation angle, translation,
// log-scale and shape coefficients, in that order in the regression output.
struct PoseParams {
  double phi = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double logs = 0.0;
  std::vector<double> alpha;

  static PoseParams identity(int dim) {
    PoseParams p;
    p.alpha.assign(static_cast<std::size_t>(dim), 0.0);
    return p;
  }
  static PoseParams from_vector(const Tensor& theta, int dim);
  Tensor to_vector() const;  // {D+4}
};

// Learnable linear shape model: decoded shapes are  vec(X) = basis * alpha + vec(mean).
// vec() packs point j as entries (2j, 2j+1) = (x_j, y_j). The mean is a 2xN
// matrix on the centred-matrices manifold, the basis a 2N x D column-orthonormal
// matrix on the Stiefel manifold.
struct ShapeModel {
  Tensor mean;   // {2, N}, coordinates in [-1, 1]
  Tensor basis;  // {2N, D}
  int grid_rows = 0;
  int grid_cols = 0;

  int point_count() const { return grid_rows * grid_cols; }
  int dim() const { return basis.rank() == 2 ? basis.dim(1) : 0; }

  // mean = centred regular grid, basis = orthonormalised seeded Gaussian
  static ShapeModel init(int rows, int cols, int dim, Rng& rng);
};

// Regular grid over [-1,1]^2, row-major: point (r,c) has
// x = -1 + 2c/(cols-1), y = -1 + 2r/(rows-1). Returns {2, rows*cols}.
Tensor regular_grid(int rows, int cols);

Tensor shape_decode(const ShapeModel& model, const std::vector<double>& alpha);
// dX: {2,N} upstream gradient. Outputs may be null to skip.
void shape_decode_backward(const ShapeModel& model, const std::vector<double>& alpha,
                           const Tensor& dX, std::vector<double>* dalpha, Tensor* dbasis,
                           Tensor* dmean);

double exp_scale(double logs);
double exp_scale_backward(double logs, double ds);

Tensor apply_scale(double s, const Tensor& X);
void apply_scale_backward(double s, const Tensor& X, const Tensor& dXs, double* ds,
                          Tensor* dX);

Tensor rotation_matrix(double phi);  // {2,2}
Tensor rotation_matrix_dphi(double phi);
double rotation_matrix_backward(double phi, const Tensor& dR);

Tensor apply_rotation(const Tensor& R, const Tensor& X);
void apply_rotation_backward(const Tensor& R, const Tensor& X, const Tensor& dXr,
                             Tensor* dR, Tensor* dX);

Tensor apply_translation(double tx, double ty, const Tensor& X);
void apply_translation_backward(const Tensor& dY, double* dtx, double* dty, Tensor* dX);

// Full grid generator: Y = s R (decode(alpha)) + t, with cached intermediates
// for the backward pass.
struct GridTrace {
  Tensor X;   // decoded shape
  Tensor Xs;  // scaled
  Tensor Xr;  // rotated
  Tensor Y;   // translated
  Tensor R;
  double s = 1.0;
};

GridTrace grid_generate(const ShapeModel& model, const PoseParams& pose);

struct PoseGrad {
  double phi = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double logs = 0.0;
  std::vector<double> alpha;
  Tensor to_vector() const;  // {D+4}, same packing as PoseParams
};

// Backpropagates dY through translate/rotate/scale/decode. dmean/dbasis may
// be null when the shape model is frozen.
PoseGrad grid_generate_backward(const ShapeModel& model, const PoseParams& pose,
                                const GridTrace& trace, const Tensor& dY, Tensor* dbasis,
                                Tensor* dmean);

}  // namespace statn
