#include "statn/losses.hpp"

#include <cmath>

#include "statn/errors.hpp"
#include "statn/manifold.hpp"

namespace statn {

AppearanceModel AppearanceModel::init(int length, int dim, Rng& rng) {
  if (length < 1) throw config_error("AppearanceModel: length must be positive");
  if (dim < 1 || dim > length)
    throw config_error("AppearanceModel: dim must be in [1, length]");
  AppearanceModel m;
  m.mean = Tensor::full({length}, 0.5);
  Tensor draw({length, dim});
  for (double& v : draw.data) v = rng.gaussian();
  m.basis = polar_factor(draw);
  return m;
}

namespace {

void check_texture_args(const AppearanceModel& model, const Tensor& v) {
  if (model.mean.rank() != 1 || model.basis.rank() != 2 ||
      model.basis.dim(0) != model.mean.dim(0))
    throw config_error("appearance model: mean {L} and basis {L, D} expected");
  if (v.size() != model.mean.size())
    throw config_error("appearance model: texture length mismatch");
}

}  // namespace

Tensor appearance_project(const AppearanceModel& model, const Tensor& v) {
  check_texture_args(model, v);
  const int length = model.length(), dim = model.dim();
  std::vector<double> coeff(static_cast<std::size_t>(dim), 0.0);
  for (int a = 0; a < dim; ++a) {
    double s = 0.0;
    for (int i = 0; i < length; ++i)
      s += model.basis(i, a) * (v[i] - model.mean[i]);
    coeff[a] = s;
  }
  Tensor w = v;
  for (int i = 0; i < length; ++i) {
    double s = model.mean[i];
    for (int a = 0; a < dim; ++a) s += model.basis(i, a) * coeff[a];
    w[i] = s;
  }
  return w;
}

double texture_loss(const AppearanceModel& model, const Tensor& v) {
  const Tensor w = appearance_project(model, v);
  double loss = 0.0;
  for (std::int64_t i = 0; i < v.size(); ++i) {
    const double r = w[i] - v[i];
    loss += r * r;
  }
  return loss;
}

double texture_loss_backward(const AppearanceModel& model, const Tensor& v,
                             Tensor* dv, Tensor* dmean, Tensor* dbasis) {
  check_texture_args(model, v);
  if (dv && !dv->same_shape(v))
    throw config_error("texture_loss_backward: dv shape mismatch");
  if (dmean && !dmean->same_shape(model.mean))
    throw config_error("texture_loss_backward: dmean shape mismatch");
  if (dbasis && !dbasis->same_shape(model.basis))
    throw config_error("texture_loss_backward: dbasis shape mismatch");

  const int length = model.length(), dim = model.dim();

  // d = v - b, t = F^T d, r = F t - d = (F F^T - I) d
  std::vector<double> d(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) d[i] = v[i] - model.mean[i];
  std::vector<double> t(static_cast<std::size_t>(dim), 0.0);
  for (int a = 0; a < dim; ++a)
    for (int i = 0; i < length; ++i) t[a] += model.basis(i, a) * d[i];
  std::vector<double> r(static_cast<std::size_t>(length));
  double loss = 0.0;
  for (int i = 0; i < length; ++i) {
    double w = 0.0;
    for (int a = 0; a < dim; ++a) w += model.basis(i, a) * t[a];
    r[i] = w - d[i];
    loss += r[i] * r[i];
  }

  if (dv || dmean) {
    // dl/dv = 2 (F F^T - I) r, dl/db = -dl/dv
    std::vector<double> s(static_cast<std::size_t>(dim), 0.0);
    for (int a = 0; a < dim; ++a)
      for (int i = 0; i < length; ++i) s[a] += model.basis(i, a) * r[i];
    for (int i = 0; i < length; ++i) {
      double g = -r[i];
      for (int a = 0; a < dim; ++a) g += model.basis(i, a) * s[a];
      g *= 2.0;
      if (dv) (*dv)[i] += g;
      if (dmean) (*dmean)[i] -= g;
    }
  }
  if (dbasis) {
    // dl/dF = 2 (r d^T + d r^T) F
    std::vector<double> s(static_cast<std::size_t>(dim), 0.0);
    for (int a = 0; a < dim; ++a)
      for (int i = 0; i < length; ++i) s[a] += model.basis(i, a) * r[i];
    for (int i = 0; i < length; ++i)
      for (int a = 0; a < dim; ++a)
        (*dbasis)(i, a) += 2.0 * (r[i] * t[a] + d[i] * s[a]);
  }
  return loss;
}

std::vector<int> mirror_index(int rows, int cols) {
  if (rows < 1 || cols < 1) throw config_error("mirror_index: empty grid");
  std::vector<int> sigma(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      sigma[static_cast<std::size_t>(r) * cols + c] = r * cols + (cols - 1 - c);
  return sigma;
}

namespace {

void check_symmetry_args(const Tensor& V, int rows, int cols) {
  if (V.rank() != 2) throw config_error("symmetry_loss: V must be {M, C}");
  if (V.dim(0) != rows * cols)
    throw config_error("symmetry_loss: V rows do not match the grid");
}

}  // namespace

double symmetry_loss(const Tensor& V, int rows, int cols) {
  check_symmetry_args(V, rows, cols);
  const auto sigma = mirror_index(rows, cols);
  const int m = V.dim(0), ch = V.dim(1);
  double loss = 0.0;
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < ch; ++c) {
      const double diff = V(i, c) - V(sigma[i], c);
      loss += diff * diff;
    }
  return loss;
}

double symmetry_loss_backward(const Tensor& V, int rows, int cols, Tensor* dV) {
  check_symmetry_args(V, rows, cols);
  if (dV && !dV->same_shape(V))
    throw config_error("symmetry_loss_backward: dV shape mismatch");
  const auto sigma = mirror_index(rows, cols);
  const int m = V.dim(0), ch = V.dim(1);
  double loss = 0.0;
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < ch; ++c) {
      const double diff = V(i, c) - V(sigma[i], c);
      loss += diff * diff;
      // point i appears once directly and once as the mirror of sigma(i)
      if (dV) (*dV)(i, c) += 4.0 * diff;
    }
  return loss;
}

double signed_area(double px, double py, double qx, double qy, double rx,
                   double ry) {
  return 0.5 * ((qx - px) * (ry - py) - (rx - px) * (qy - py));
}

namespace {

void check_area_args(const Tensor& Y, const Triangulation& tri, double k) {
  if (Y.rank() != 2 || Y.dim(0) != 2)
    throw config_error("area_loss: Y must be {2, N}");
  if (tri.rows * tri.cols != Y.dim(1))
    throw config_error("area_loss: triangulation does not match the grid");
  if (!(k > 0.0)) throw config_error("area_loss: threshold must be positive");
}

}  // namespace

double area_loss(const Tensor& Y, const Triangulation& tri, double k) {
  check_area_args(Y, tri, k);
  double loss = 0.0;
  for (const auto& t : tri.triangles) {
    const double a = signed_area(Y(0, t[0]), Y(1, t[0]), Y(0, t[1]),
                                 Y(1, t[1]), Y(0, t[2]), Y(1, t[2]));
    const double term = std::exp(-a) - k;
    if (term > 0.0) loss += term;
  }
  return loss;
}

double area_loss_backward(const Tensor& Y, const Triangulation& tri, double k,
                          Tensor* dY) {
  check_area_args(Y, tri, k);
  if (dY && !dY->same_shape(Y))
    throw config_error("area_loss_backward: dY shape mismatch");
  double loss = 0.0;
  for (const auto& t : tri.triangles) {
    const double px = Y(0, t[0]), py = Y(1, t[0]);
    const double qx = Y(0, t[1]), qy = Y(1, t[1]);
    const double rx = Y(0, t[2]), ry = Y(1, t[2]);
    const double a = signed_area(px, py, qx, qy, rx, ry);
    const double term = std::exp(-a) - k;
    if (term <= 0.0) continue;
    loss += term;
    if (!dY) continue;
    const double coef = -std::exp(-a);
    (*dY)(0, t[0]) += coef * 0.5 * (qy - ry);
    (*dY)(1, t[0]) += coef * 0.5 * (rx - qx);
    (*dY)(0, t[1]) += coef * 0.5 * (ry - py);
    (*dY)(1, t[1]) += coef * 0.5 * (px - rx);
    (*dY)(0, t[2]) += coef * 0.5 * (py - qy);
    (*dY)(1, t[2]) += coef * 0.5 * (qx - px);
  }
  return loss;
}

}  // namespace statn
