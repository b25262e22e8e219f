#pragma once

#include <array>
#include <vector>

#include "statn/tensor.hpp"
#include "statn/triangulation.hpp"

namespace statn {

// Sparse interpolation matrix W (N x M): column j holds the barycentric
// weights of high-resolution grid point j with respect to the three vertices
// of its containing template triangle. Columns sum to 1.
struct UpsampleWeights {
  int low_rows = 0, low_cols = 0;
  int high_rows = 0, high_cols = 0;
  std::vector<std::array<int, 3>> vertices;   // per high point: low-grid indices
  std::vector<std::array<double, 3>> weights; // matching barycentric weights
  std::vector<int> triangle;                  // containing triangle index

  int low_count() const { return low_rows * low_cols; }
  int high_count() const { return high_rows * high_cols; }
};

// Locates each point of the regular high-res grid over [-1,1]^2 in the
// template triangulation of the regular low-res grid. Points on shared edges
// go to the lower-indexed triangle.
UpsampleWeights precompute_upsample_weights(int low_rows, int low_cols, int high_rows,
                                            int high_cols);

// Z = Y W  (Y: {2,N} -> Z: {2,M})
Tensor upsample_grid(const Tensor& Y, const UpsampleWeights& w);
// scatters dZ back through W^T into dY
void upsample_grid_backward(const UpsampleWeights& w, const Tensor& dZ, Tensor* dY);

}  // namespace statn
