#pragma once

#include <vector>

#include "statn/rng.hpp"
#include "statn/tensor.hpp"
#include "statn/triangulation.hpp"

namespace statn {

// Linear appearance model over flattened textures: reconstruction of v is
// w = F F^T (v - b) + b with an orthonormal basis F {L, D} and mean b {L}.
struct AppearanceModel {
  Tensor mean;
  Tensor basis;

  int length() const { return mean.dim(0); }
  int dim() const { return basis.dim(1); }

  // mid-gray mean, random orthonormal basis
  static AppearanceModel init(int length, int dim, Rng& rng);
};

Tensor appearance_project(const AppearanceModel& model, const Tensor& v);

// squared reconstruction error ||w - v||^2
double texture_loss(const AppearanceModel& model, const Tensor& v);

// Accumulates into any non-null outputs (pre-shaped by the caller) and
// returns the loss value.
double texture_loss_backward(const AppearanceModel& model, const Tensor& v,
                             Tensor* dv, Tensor* dmean, Tensor* dbasis);

// left-right mirror permutation of a row-major rows x cols grid
std::vector<int> mirror_index(int rows, int cols);

// V is {M, C} sampled at the points of a rows x cols grid (row-major).
double symmetry_loss(const Tensor& V, int rows, int cols);
double symmetry_loss_backward(const Tensor& V, int rows, int cols, Tensor* dV);

double signed_area(double px, double py, double qx, double qy, double rx,
                   double ry);

// hinge on small / inverted triangles: sum_t max(0, exp(-a_t) - k)
double area_loss(const Tensor& Y, const Triangulation& tri, double k);
double area_loss_backward(const Tensor& Y, const Triangulation& tri, double k,
                          Tensor* dY);

struct LossWeights {
  double classification = 0.0;
  double texture = 0.0;
  double symmetry = 0.0;
  double area = 0.0;
};

}  // namespace statn
