#pragma once

#include "statn/tensor.hpp"

namespace statn {

// Normalized [-1,1] coordinates map to pixel centres: -1 -> first pixel,
// +1 -> last pixel (1-based pixel index p = (x+1)/2*(extent-1)+1).
inline double norm_to_pixel(double x, int extent) {
  return (x + 1.0) * 0.5 * (extent - 1);
}
inline double pixel_grad_scale(int extent) { return 0.5 * (extent - 1); }

// Samples image I (H x W x C) at grid Z ({2,M}, normalized coordinates) with
// the tent kernel max(0, 1-|.|). Points outside the image fade to zero.
// Returns {M, C}.
Tensor bilinear_sample(const Tensor& image, const Tensor& grid);

// dimage / dgrid may be null to skip. The coordinate derivative uses the
// strict-interior subgradient: a pixel contributes only when its kernel
// distance is < 1, and the slope at distance exactly 0 is taken as 0.
void bilinear_sample_backward(const Tensor& image, const Tensor& grid, const Tensor& dV,
                              Tensor* dimage, Tensor* dgrid);

// Bilinear resize via sampling on the regular grid (the identity-warp case).
Tensor bilinear_resize(const Tensor& image, int out_h, int out_w);

}  // namespace statn
