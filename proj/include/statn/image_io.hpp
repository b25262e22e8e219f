#pragma once

#include <string>

#include "statn/tensor.hpp"
#include "statn/triangulation.hpp"

namespace statn {

// Binary PPM (P6, maxval 255). Values are clamped to [0,1] and quantised as
// round(v * 255). Accepts {H,W,1} (grey replicated) or {H,W,3}.
void write_ppm(const Tensor& image, const std::string& path);

// -> {H,W,3} with values byte/255
Tensor read_ppm(const std::string& path);

// Copy of the image with the triangulation edges of `grid` ({2, points})
// drawn as 1-pixel lines in a fixed colour.
Tensor render_grid_overlay(const Tensor& image, const Tensor& grid,
                           const Triangulation& tri);

}  // namespace statn
