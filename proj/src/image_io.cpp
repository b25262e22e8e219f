#include "statn/image_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "statn/errors.hpp"
#include "statn/sampler.hpp"

namespace statn {

void write_ppm(const Tensor& image, const std::string& path) {
  if (image.rank() != 3 || (image.dim(2) != 1 && image.dim(2) != 3))
    throw input_error("write_ppm: image must be {H,W,1} or {H,W,3}");
  const int h = image.dim(0), w = image.dim(1), c = image.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("write_ppm: cannot open " + path);
  out << "P6\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col)
      for (int k = 0; k < 3; ++k) {
        double v = image(r, col, c == 1 ? 0 : k);
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        row[static_cast<std::size_t>(col) * 3 + k] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw input_error("write_ppm: write failed for " + path);
}

namespace {

// next integer token, skipping whitespace and # comments
int read_header_int(std::istream& in, const std::string& path) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  if (ch == EOF || !std::isdigit(ch))
    throw input_error("read_ppm: malformed header in " + path);
  long value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    if (value > 1 << 24) throw input_error("read_ppm: header value out of range in " + path);
    ch = in.get();
  }
  if (ch != EOF) in.unget();
  return static_cast<int>(value);
}

}  // namespace

Tensor read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("read_ppm: cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6')
    throw input_error("read_ppm: not a P6 file: " + path);
  const int w = read_header_int(in, path);
  const int h = read_header_int(in, path);
  const int maxval = read_header_int(in, path);
  if (w < 1 || h < 1) throw input_error("read_ppm: bad dimensions in " + path);
  if (maxval != 255) throw input_error("read_ppm: unsupported maxval in " + path);
  const int sep = in.get();
  if (sep == EOF || !std::isspace(sep))
    throw input_error("read_ppm: malformed header in " + path);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw input_error("read_ppm: truncated pixel data in " + path);
  Tensor image({h, w, 3});
  for (std::size_t i = 0; i < bytes.size(); ++i)
    image.data[i] = static_cast<double>(bytes[i]) / 255.0;
  return image;
}

Tensor render_grid_overlay(const Tensor& image, const Tensor& grid,
                           const Triangulation& tri) {
  if (image.rank() != 3) throw input_error("render_grid_overlay: image must be {H,W,C}");
  if (grid.rank() != 2 || grid.dim(0) != 2 || grid.dim(1) != tri.rows * tri.cols)
    throw input_error("render_grid_overlay: grid does not match the triangulation");
  const int h = image.dim(0), w = image.dim(1), c = image.dim(2);
  Tensor out = image;
  const double colour[3] = {0.1, 1.0, 0.2};
  auto plot = [&](int r, int col) {
    if (r < 0 || r >= h || col < 0 || col >= w) return;
    for (int k = 0; k < c; ++k) out(r, col, k) = (c == 3) ? colour[k] : 1.0;
  };
  for (const auto& [a, b] : tri.edges()) {
    const double ax = norm_to_pixel(grid(0, a), w), ay = norm_to_pixel(grid(1, a), h);
    const double bx = norm_to_pixel(grid(0, b), w), by = norm_to_pixel(grid(1, b), h);
    const int steps =
        static_cast<int>(std::ceil(std::max(std::abs(bx - ax), std::abs(by - ay))));
    for (int i = 0; i <= steps; ++i) {
      const double t = steps == 0 ? 0.0 : static_cast<double>(i) / steps;
      plot(static_cast<int>(std::lround(ay + t * (by - ay))),
           static_cast<int>(std::lround(ax + t * (bx - ax))));
    }
  }
  return out;
}

}  // namespace statn
