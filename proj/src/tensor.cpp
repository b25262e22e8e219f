#include "statn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <utility>

#include "statn/errors.hpp"

namespace statn {

std::int64_t shape_product(const std::vector<int>& dims) {
  std::int64_t n = 1;
  for (int d : dims) {
    if (d <= 0) throw config_error("tensor dimension must be positive");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> dims) : shape(std::move(dims)) {
  data.assign(static_cast<std::size_t>(shape_product(shape)), 0.0);
}

Tensor::Tensor(std::vector<int> dims, std::vector<double> values)
    : shape(std::move(dims)), data(std::move(values)) {
  if (shape_product(shape) != static_cast<std::int64_t>(data.size()))
    throw config_error("tensor data length does not match shape");
}

Tensor Tensor::full(std::vector<int> dims, double value) {
  Tensor t(std::move(dims));
  t.fill(value);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double value) {
  for (double& v : data) v = value;
}

void axpy(Tensor& y, double a, const Tensor& x) {
  if (!y.same_shape(x)) throw config_error("axpy: shape mismatch");
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
}

double dot(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw config_error("dot: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

double frobenius_norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::abs(v));
  return m;
}

Tensor reshaped(Tensor t, std::vector<int> dims) {
  if (shape_product(dims) != t.size())
    throw config_error("reshaped: element count mismatch");
  t.shape = std::move(dims);
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw config_error("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace statn
