#pragma once

#include <array>
#include <utility>
#include <vector>

namespace statn {

// Fixed template triangulation of the regular rows x cols grid: every cell is
// split along its top-left -> bottom-right diagonal, vertices ordered so the
// regular grid has positive signed areas.
struct Triangulation {
  int rows = 0;
  int cols = 0;
  std::vector<std::array<int, 3>> triangles;

  static Triangulation regular(int rows, int cols);

  int triangle_count() const { return static_cast<int>(triangles.size()); }

  // unique undirected edges, sorted
  std::vector<std::pair<int, int>> edges() const;
};

}  // namespace statn
