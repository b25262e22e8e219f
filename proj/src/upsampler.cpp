#include "statn/upsampler.hpp"

#include <algorithm>
#include <cmath>

#include "statn/errors.hpp"

namespace statn {

Triangulation Triangulation::regular(int rows, int cols) {
  if (rows < 2 || cols < 2)
    throw config_error("triangulation: needs at least 2x2 vertices");
  Triangulation t;
  t.rows = rows;
  t.cols = cols;
  t.triangles.reserve(static_cast<std::size_t>(2 * (rows - 1) * (cols - 1)));
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) {
      const int tl = r * cols + c;
      const int tr = tl + 1;
      const int bl = tl + cols;
      const int br = bl + 1;
      t.triangles.push_back({tl, tr, br});  // above the tl->br diagonal
      t.triangles.push_back({tl, br, bl});  // below it
    }
  return t;
}

std::vector<std::pair<int, int>> Triangulation::edges() const {
  std::vector<std::pair<int, int>> e;
  e.reserve(triangles.size() * 3);
  for (const auto& tri : triangles)
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      e.emplace_back(a, b);
    }
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

UpsampleWeights precompute_upsample_weights(int low_rows, int low_cols, int high_rows,
                                            int high_cols) {
  if (low_rows < 2 || low_cols < 2)
    throw config_error("upsample: low-resolution grid needs at least 2x2 vertices");
  if (high_rows < 1 || high_cols < 1)
    throw config_error("upsample: degenerate high-resolution dims");
  if (static_cast<std::int64_t>(high_rows) * high_cols <
      static_cast<std::int64_t>(low_rows) * low_cols)
    throw config_error("upsample: M must be >= N");

  UpsampleWeights w;
  w.low_rows = low_rows;
  w.low_cols = low_cols;
  w.high_rows = high_rows;
  w.high_cols = high_cols;
  const int m = high_rows * high_cols;
  w.vertices.resize(static_cast<std::size_t>(m));
  w.weights.resize(static_cast<std::size_t>(m));
  w.triangle.resize(static_cast<std::size_t>(m));

  for (int hr = 0; hr < high_rows; ++hr) {
    for (int hc = 0; hc < high_cols; ++hc) {
      const int j = hr * high_cols + hc;
      // position in low-grid cell units
      const double u = (high_cols > 1 ? static_cast<double>(hc) / (high_cols - 1) : 0.5) *
                       (low_cols - 1);
      const double v = (high_rows > 1 ? static_cast<double>(hr) / (high_rows - 1) : 0.5) *
                       (low_rows - 1);
      int c = std::min(static_cast<int>(std::floor(u)), low_cols - 2);
      int r = std::min(static_cast<int>(std::floor(v)), low_rows - 2);
      const double lu = u - c;
      const double lv = v - r;

      const int tl = r * low_cols + c;
      const int tr = tl + 1;
      const int bl = tl + low_cols;
      const int br = bl + 1;
      const int cell_tri = 2 * (r * (low_cols - 1) + c);

      // cell diagonal runs tl->br; the diagonal itself belongs to the
      // lower-indexed (upper) triangle
      if (lu >= lv) {
        w.vertices[j] = {tl, tr, br};
        w.weights[j] = {1.0 - lu, lu - lv, lv};
        w.triangle[j] = cell_tri;
      } else {
        w.vertices[j] = {tl, br, bl};
        w.weights[j] = {1.0 - lv, lu, lv - lu};
        w.triangle[j] = cell_tri + 1;
      }
    }
  }
  return w;
}

Tensor upsample_grid(const Tensor& Y, const UpsampleWeights& w) {
  if (Y.rank() != 2 || Y.dim(0) != 2 || Y.dim(1) != w.low_count())
    throw config_error("upsample_grid: grid shape mismatch");
  const int m = w.high_count();
  Tensor z({2, m});
  for (int j = 0; j < m; ++j) {
    const auto& vx = w.vertices[j];
    const auto& wt = w.weights[j];
    z(0, j) = wt[0] * Y(0, vx[0]) + wt[1] * Y(0, vx[1]) + wt[2] * Y(0, vx[2]);
    z(1, j) = wt[0] * Y(1, vx[0]) + wt[1] * Y(1, vx[1]) + wt[2] * Y(1, vx[2]);
  }
  return z;
}

void upsample_grid_backward(const UpsampleWeights& w, const Tensor& dZ, Tensor* dY) {
  if (dZ.rank() != 2 || dZ.dim(0) != 2 || dZ.dim(1) != w.high_count())
    throw config_error("upsample_grid_backward: gradient shape mismatch");
  for (int j = 0; j < w.high_count(); ++j) {
    const auto& vx = w.vertices[j];
    const auto& wt = w.weights[j];
    for (int k = 0; k < 3; ++k) {
      (*dY)(0, vx[k]) += wt[k] * dZ(0, j);
      (*dY)(1, vx[k]) += wt[k] * dZ(1, j);
    }
  }
}

}  // namespace statn
