#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace statn {

// Dense n-dimensional array of doubles, row-major. The whole library runs in
// double precision so that finite-difference checks have headroom.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> dims);
  Tensor(std::vector<int> dims, std::vector<double> values);

  static Tensor zeros(std::vector<int> dims) { return Tensor(std::move(dims)); }
  static Tensor full(std::vector<int> dims, double value);

  int rank() const { return static_cast<int>(shape.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  double& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

  // rank-2 access
  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
  const double& operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i) * shape[1] + j];
  }

  // rank-3 access
  double& operator()(int i, int j, int k) {
    return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }
  const double& operator()(int i, int j, int k) const {
    return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }

  // rank-4 access
  double& operator()(int i, int j, int k, int l) {
    return data[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }
  const double& operator()(int i, int j, int k, int l) const {
    return data[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
  void fill(double value);
};

std::int64_t shape_product(const std::vector<int>& dims);

// same data, new shape (element counts must agree)
Tensor reshaped(Tensor t, std::vector<int> dims);

// y += a * x (shapes must match)
void axpy(Tensor& y, double a, const Tensor& x);
double dot(const Tensor& a, const Tensor& b);
double frobenius_norm(const Tensor& a);
double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace statn
