#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "statn/errors.hpp"
#include "statn/image_io.hpp"
#include "statn/rng.hpp"
#include "statn/shape_model.hpp"
#include "statn/tensor.hpp"
#include "statn/triangulation.hpp"

using namespace statn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& name) { path = fs::temp_directory_path() / name; }
  ~TempFile() { fs::remove(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("a single red pixel produces the exact byte stream") {
  TempFile f("statn_red.ppm");
  Tensor red({1, 1, 3});
  red(0, 0, 0) = 1.0;
  write_ppm(red, f.str());
  const std::string bytes = slurp(f.str());
  const std::string expect = std::string("P6\n1 1\n255\n") + '\xff' + '\0' + '\0';
  CHECK(bytes.size() == expect.size());
  CHECK(bytes == expect);
}

TEST_CASE("a 2x2 gradient matches the hand-computed byte stream") {
  TempFile f("statn_grad.ppm");
  // grey values 0, 1/3, 2/3, 1 -> bytes round(v*255) = 0, 85, 170, 255
  Tensor g({2, 2, 1});
  g(0, 0, 0) = 0.0;
  g(0, 1, 0) = 1.0 / 3.0;
  g(1, 0, 0) = 2.0 / 3.0;
  g(1, 1, 0) = 1.0;
  write_ppm(g, f.str());
  std::string expect = "P6\n2 2\n255\n";
  const unsigned char bytes[4] = {0, 85, 170, 255};
  for (unsigned char b : bytes) {
    expect += static_cast<char>(b);
    expect += static_cast<char>(b);
    expect += static_cast<char>(b);
  }
  CHECK(slurp(f.str()) == expect);
}

TEST_CASE("ppm round-trip stays within one quantisation step") {
  TempFile f("statn_roundtrip.ppm");
  Rng rng(263);
  Tensor image({9, 7, 3});
  for (double& v : image.data) v = rng.uniform();
  write_ppm(image, f.str());
  const Tensor back = read_ppm(f.str());
  REQUIRE(back.shape == image.shape);
  CHECK(max_abs_diff(back, image) <= 1.0 / 255.0 + 1e-12);

  // a second round-trip is exact: the data is already quantised
  TempFile f2("statn_roundtrip2.ppm");
  write_ppm(back, f2.str());
  const Tensor back2 = read_ppm(f2.str());
  CHECK(max_abs_diff(back2, back) == 0.0);

  // out-of-range values clamp instead of wrapping
  Tensor wild({1, 2, 1});
  wild(0, 0, 0) = -3.0;
  wild(0, 1, 0) = 7.5;
  TempFile f3("statn_clamp.ppm");
  write_ppm(wild, f3.str());
  const Tensor clamped = read_ppm(f3.str());
  CHECK(clamped(0, 0, 0) == 0.0);
  CHECK(clamped(0, 1, 0) == 1.0);
}

TEST_CASE("ppm reader rejects malformed input") {
  TempFile f("statn_bad.ppm");
  std::ofstream(f.str(), std::ios::binary) << "P5\n1 1\n255\n ";
  CHECK_THROWS_AS(read_ppm(f.str()), input_error);

  std::ofstream(f.str(), std::ios::binary) << "P6\n2 2\n255\nabc";  // truncated pixels
  CHECK_THROWS_AS(read_ppm(f.str()), input_error);

  std::ofstream(f.str(), std::ios::binary) << "P6\n1 1\n65535\n ab";
  CHECK_THROWS_AS(read_ppm(f.str()), input_error);

  CHECK_THROWS_AS(read_ppm("/nonexistent/statn.ppm"), input_error);

  // comments in the header are legal
  std::ofstream(f.str(), std::ios::binary)
      << "P6\n# a comment\n1 1\n255\n" << '\xff' << '\xff' << '\xff';
  const Tensor t = read_ppm(f.str());
  CHECK(t(0, 0, 0) == 1.0);
}

TEST_CASE("grid overlay draws exactly the triangulation edges") {
  const Tensor black = Tensor::zeros({21, 21, 1});
  const Triangulation tri = Triangulation::regular(3, 3);
  const Tensor grid = regular_grid(3, 3);
  const Tensor overlay = render_grid_overlay(black, grid, tri);
  REQUIRE(overlay.dim(2) == 1);

  int lit = 0;
  for (double v : overlay.data)
    if (v != 0.0) ++lit;
  CHECK(lit > 0);

  // only line pixels are non-black: every lit pixel lies on some edge segment
  for (int r = 0; r < 21; ++r)
    for (int c = 0; c < 21; ++c) {
      if (overlay(r, c, 0) == 0.0) continue;
      bool on_edge = false;
      for (const auto& e : tri.edges()) {
        const double ax = (grid(0, e.first) + 1.0) * 0.5 * 20;
        const double ay = (grid(1, e.first) + 1.0) * 0.5 * 20;
        const double bx = (grid(0, e.second) + 1.0) * 0.5 * 20;
        const double by = (grid(1, e.second) + 1.0) * 0.5 * 20;
        // distance from (c, r) to segment ab
        const double vx = bx - ax, vy = by - ay;
        const double len2 = vx * vx + vy * vy;
        double t = len2 > 0 ? ((c - ax) * vx + (r - ay) * vy) / len2 : 0.0;
        t = std::max(0.0, std::min(1.0, t));
        const double dx = c - (ax + t * vx), dy = r - (ay + t * vy);
        if (dx * dx + dy * dy <= 0.51) on_edge = true;
      }
      CHECK(on_edge);
    }

  // a degenerate grid collapses to a single marker block
  Tensor point({2, 9});
  for (int j = 0; j < 9; ++j) {
    point(0, j) = 0.1;
    point(1, j) = -0.2;
  }
  const Tensor mark = render_grid_overlay(black, point, tri);
  int lit2 = 0;
  for (double v : mark.data)
    if (v != 0.0) ++lit2;
  CHECK(lit2 >= 1);
  CHECK(lit2 <= 4);
}

TEST_CASE("overlay on an rgb image uses the highlight colour") {
  const Tensor black = Tensor::zeros({15, 15, 3});
  const Triangulation tri = Triangulation::regular(2, 2);
  const Tensor overlay = render_grid_overlay(black, regular_grid(2, 2), tri);
  bool any = false;
  for (int r = 0; r < 15; ++r)
    for (int c = 0; c < 15; ++c)
      if (overlay(r, c, 1) > 0.0) {
        any = true;
        // green-dominant line colour
        CHECK(overlay(r, c, 1) > overlay(r, c, 0));
        CHECK(overlay(r, c, 1) > overlay(r, c, 2));
      }
  CHECK(any);
}
