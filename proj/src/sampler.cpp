#include "statn/sampler.hpp"

#include <cmath>

#include "statn/errors.hpp"
#include "statn/shape_model.hpp"

namespace statn {

namespace {

inline double tent(double d) {
  const double w = 1.0 - std::abs(d);
  return w > 0.0 ? w : 0.0;
}

}  // namespace

Tensor bilinear_sample(const Tensor& image, const Tensor& grid) {
  if (image.rank() != 3) throw config_error("bilinear_sample: image must be HxWxC");
  if (grid.rank() != 2 || grid.dim(0) != 2)
    throw config_error("bilinear_sample: grid must be {2,M}");
  const int h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const int m = grid.dim(1);

  Tensor v({m, c});
  for (int i = 0; i < m; ++i) {
    const double px = norm_to_pixel(grid(0, i), w);
    const double py = norm_to_pixel(grid(1, i), h);
    const int kx0 = static_cast<int>(std::floor(px));
    const int ky0 = static_cast<int>(std::floor(py));
    double* out = &v(i, 0);
    for (int ky = ky0; ky <= ky0 + 1; ++ky) {
      if (ky < 0 || ky >= h) continue;
      const double wy = tent(py - ky);
      if (wy == 0.0) continue;
      for (int kx = kx0; kx <= kx0 + 1; ++kx) {
        if (kx < 0 || kx >= w) continue;
        const double wxy = tent(px - kx) * wy;
        if (wxy == 0.0) continue;
        const double* px_val = &image(ky, kx, 0);
        for (int ch = 0; ch < c; ++ch) out[ch] += wxy * px_val[ch];
      }
    }
  }
  return v;
}

void bilinear_sample_backward(const Tensor& image, const Tensor& grid, const Tensor& dV,
                              Tensor* dimage, Tensor* dgrid) {
  const int h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const int m = grid.dim(1);
  if (dV.rank() != 2 || dV.dim(0) != m || dV.dim(1) != c)
    throw config_error("bilinear_sample_backward: dV shape mismatch");

  const double sx = pixel_grad_scale(w);
  const double sy = pixel_grad_scale(h);
  for (int i = 0; i < m; ++i) {
    const double px = norm_to_pixel(grid(0, i), w);
    const double py = norm_to_pixel(grid(1, i), h);
    const int kx0 = static_cast<int>(std::floor(px));
    const int ky0 = static_cast<int>(std::floor(py));
    const double* gv = &dV(i, 0);
    double gx = 0.0, gy = 0.0;
    for (int ky = ky0; ky <= ky0 + 1; ++ky) {
      if (ky < 0 || ky >= h) continue;
      const double dy = py - ky;
      const double wy = tent(dy);
      const double slope_y = std::abs(dy) < 1.0 ? (dy > 0.0 ? -1.0 : (dy < 0.0 ? 1.0 : 0.0)) : 0.0;
      for (int kx = kx0; kx <= kx0 + 1; ++kx) {
        if (kx < 0 || kx >= w) continue;
        const double dx = px - kx;
        const double wx = tent(dx);
        const double slope_x =
            std::abs(dx) < 1.0 ? (dx > 0.0 ? -1.0 : (dx < 0.0 ? 1.0 : 0.0)) : 0.0;
        double gdot = 0.0;
        const double* px_val = &image(ky, kx, 0);
        for (int ch = 0; ch < c; ++ch) {
          const double g = gv[ch];
          gdot += g * px_val[ch];
          if (dimage) (*dimage)(ky, kx, ch) += wx * wy * g;
        }
        gx += gdot * slope_x * wy;
        gy += gdot * slope_y * wx;
      }
    }
    if (dgrid) {
      (*dgrid)(0, i) += gx * sx;
      (*dgrid)(1, i) += gy * sy;
    }
  }
}

Tensor bilinear_resize(const Tensor& image, int out_h, int out_w) {
  const Tensor grid = regular_grid(out_h, out_w);
  const Tensor v = bilinear_sample(image, grid);
  Tensor out({out_h, out_w, image.dim(2)});
  out.data = v.data;  // {M,C} row-major == {H',W',C}
  return out;
}

}  // namespace statn
