#include "statn/shape_model.hpp"

#include <cmath>

#include "statn/errors.hpp"

namespace statn {

PoseParams PoseParams::from_vector(const Tensor& theta, int dim) {
  if (theta.size() != dim + 4)
    throw config_error("pose vector must have D+4 entries");
  PoseParams p;
  p.phi = theta[0];
  p.tx = theta[1];
  p.ty = theta[2];
  p.logs = theta[3];
  p.alpha.assign(theta.data.begin() + 4, theta.data.end());
  return p;
}

Tensor PoseParams::to_vector() const {
  Tensor t({static_cast<int>(alpha.size()) + 4});
  t[0] = phi;
  t[1] = tx;
  t[2] = ty;
  t[3] = logs;
  for (std::size_t i = 0; i < alpha.size(); ++i) t[4 + static_cast<int>(i)] = alpha[i];
  return t;
}

Tensor PoseGrad::to_vector() const {
  Tensor t({static_cast<int>(alpha.size()) + 4});
  t[0] = phi;
  t[1] = tx;
  t[2] = ty;
  t[3] = logs;
  for (std::size_t i = 0; i < alpha.size(); ++i) t[4 + static_cast<int>(i)] = alpha[i];
  return t;
}

Tensor regular_grid(int rows, int cols) {
  if (rows < 2 || cols < 2) throw config_error("regular_grid: needs at least 2x2 vertices");
  Tensor g({2, rows * cols});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int j = r * cols + c;
      g(0, j) = -1.0 + 2.0 * c / (cols - 1);
      g(1, j) = -1.0 + 2.0 * r / (rows - 1);
    }
  return g;
}

ShapeModel ShapeModel::init(int rows, int cols, int dim, Rng& rng) {
  const int n = rows * cols;
  if (dim < 0 || dim >= 2 * n) throw config_error("shape dim must satisfy 0 <= D < 2N");

  ShapeModel m;
  m.grid_rows = rows;
  m.grid_cols = cols;
  m.mean = regular_grid(rows, cols);
  // exact centring so the manifold invariant holds at init
  for (int i = 0; i < 2; ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += m.mean(i, j);
    mean /= n;
    for (int j = 0; j < n; ++j) m.mean(i, j) -= mean;
  }

  // random orthonormal basis: Gaussian draw + modified Gram-Schmidt with a
  // second pass for numerical orthogonality
  Tensor f({2 * n, dim});
  for (double& v : f.data) v = rng.gaussian();
  for (int pass = 0; pass < 2; ++pass) {
    for (int d = 0; d < dim; ++d) {
      for (int prev = 0; prev < d; ++prev) {
        double proj = 0.0;
        for (int i = 0; i < 2 * n; ++i) proj += f(i, d) * f(i, prev);
        for (int i = 0; i < 2 * n; ++i) f(i, d) -= proj * f(i, prev);
      }
      double norm = 0.0;
      for (int i = 0; i < 2 * n; ++i) norm += f(i, d) * f(i, d);
      norm = std::sqrt(norm);
      if (norm < 1e-12) throw numeric_error("shape basis init: rank-deficient draw");
      for (int i = 0; i < 2 * n; ++i) f(i, d) /= norm;
    }
  }
  m.basis = std::move(f);
  return m;
}

Tensor shape_decode(const ShapeModel& model, const std::vector<double>& alpha) {
  const int n = model.point_count();
  const int d = model.dim();
  if (static_cast<int>(alpha.size()) != d)
    throw config_error("shape_decode: coefficient count mismatch");

  Tensor x = model.mean;
  for (int j = 0; j < n; ++j) {
    double ax = 0.0, ay = 0.0;
    for (int k = 0; k < d; ++k) {
      ax += model.basis(2 * j, k) * alpha[k];
      ay += model.basis(2 * j + 1, k) * alpha[k];
    }
    x(0, j) += ax;
    x(1, j) += ay;
  }
  return x;
}

void shape_decode_backward(const ShapeModel& model, const std::vector<double>& alpha,
                           const Tensor& dX, std::vector<double>* dalpha, Tensor* dbasis,
                           Tensor* dmean) {
  const int n = model.point_count();
  const int d = model.dim();
  if (dalpha) {
    dalpha->assign(static_cast<std::size_t>(d), 0.0);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < d; ++k)
        (*dalpha)[k] += dX(0, j) * model.basis(2 * j, k) + dX(1, j) * model.basis(2 * j + 1, k);
  }
  if (dbasis) {
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < d; ++k) {
        (*dbasis)(2 * j, k) += dX(0, j) * alpha[k];
        (*dbasis)(2 * j + 1, k) += dX(1, j) * alpha[k];
      }
  }
  if (dmean) axpy(*dmean, 1.0, dX);
}

double exp_scale(double logs) { return std::exp(logs); }

double exp_scale_backward(double logs, double ds) { return ds * std::exp(logs); }

Tensor apply_scale(double s, const Tensor& X) {
  Tensor out = X;
  for (double& v : out.data) v *= s;
  return out;
}

void apply_scale_backward(double s, const Tensor& X, const Tensor& dXs, double* ds,
                          Tensor* dX) {
  if (ds) *ds += dot(dXs, X);
  if (dX) axpy(*dX, s, dXs);
}

Tensor rotation_matrix(double phi) {
  Tensor r({2, 2});
  const double c = std::cos(phi), s = std::sin(phi);
  r(0, 0) = c;
  r(0, 1) = -s;
  r(1, 0) = s;
  r(1, 1) = c;
  return r;
}

Tensor rotation_matrix_dphi(double phi) {
  Tensor r({2, 2});
  const double c = std::cos(phi), s = std::sin(phi);
  r(0, 0) = -s;
  r(0, 1) = -c;
  r(1, 0) = c;
  r(1, 1) = -s;
  return r;
}

double rotation_matrix_backward(double phi, const Tensor& dR) {
  return dot(dR, rotation_matrix_dphi(phi));
}

Tensor apply_rotation(const Tensor& R, const Tensor& X) {
  if (R.rank() != 2 || R.dim(0) != 2 || R.dim(1) != 2 || X.rank() != 2 || X.dim(0) != 2)
    throw config_error("apply_rotation: shape mismatch");
  const int n = X.dim(1);
  Tensor out({2, n});
  for (int j = 0; j < n; ++j) {
    out(0, j) = R(0, 0) * X(0, j) + R(0, 1) * X(1, j);
    out(1, j) = R(1, 0) * X(0, j) + R(1, 1) * X(1, j);
  }
  return out;
}

void apply_rotation_backward(const Tensor& R, const Tensor& X, const Tensor& dXr,
                             Tensor* dR, Tensor* dX) {
  const int n = X.dim(1);
  if (dR) {
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += dXr(i, j) * X(k, j);
        (*dR)(i, k) += acc;
      }
  }
  if (dX) {
    for (int j = 0; j < n; ++j) {
      (*dX)(0, j) += R(0, 0) * dXr(0, j) + R(1, 0) * dXr(1, j);
      (*dX)(1, j) += R(0, 1) * dXr(0, j) + R(1, 1) * dXr(1, j);
    }
  }
}

Tensor apply_translation(double tx, double ty, const Tensor& X) {
  const int n = X.dim(1);
  Tensor out = X;
  for (int j = 0; j < n; ++j) {
    out(0, j) += tx;
    out(1, j) += ty;
  }
  return out;
}

void apply_translation_backward(const Tensor& dY, double* dtx, double* dty, Tensor* dX) {
  const int n = dY.dim(1);
  if (dtx)
    for (int j = 0; j < n; ++j) *dtx += dY(0, j);
  if (dty)
    for (int j = 0; j < n; ++j) *dty += dY(1, j);
  if (dX) axpy(*dX, 1.0, dY);
}

GridTrace grid_generate(const ShapeModel& model, const PoseParams& pose) {
  GridTrace t;
  t.X = shape_decode(model, pose.alpha);
  t.s = exp_scale(pose.logs);
  t.Xs = apply_scale(t.s, t.X);
  t.R = rotation_matrix(pose.phi);
  t.Xr = apply_rotation(t.R, t.Xs);
  t.Y = apply_translation(pose.tx, pose.ty, t.Xr);
  return t;
}

PoseGrad grid_generate_backward(const ShapeModel& model, const PoseParams& pose,
                                const GridTrace& trace, const Tensor& dY, Tensor* dbasis,
                                Tensor* dmean) {
  PoseGrad g;
  Tensor dXr = Tensor::zeros(trace.Xr.shape);
  apply_translation_backward(dY, &g.tx, &g.ty, &dXr);

  Tensor dR({2, 2});
  Tensor dXs = Tensor::zeros(trace.Xs.shape);
  apply_rotation_backward(trace.R, trace.Xs, dXr, &dR, &dXs);
  g.phi = rotation_matrix_backward(pose.phi, dR);

  double ds = 0.0;
  Tensor dX = Tensor::zeros(trace.X.shape);
  apply_scale_backward(trace.s, trace.X, dXs, &ds, &dX);
  g.logs = exp_scale_backward(pose.logs, ds);

  shape_decode_backward(model, pose.alpha, dX, &g.alpha, dbasis, dmean);
  return g;
}

}  // namespace statn
