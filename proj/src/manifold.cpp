#include "statn/manifold.hpp"

#include <cmath>

#include "statn/errors.hpp"

namespace statn {

namespace {

constexpr double kStiefelEntryTol = 1e-4;
constexpr int kDriftCheckPeriod = 100;
constexpr double kDriftTol = 1e-8;

void require_2d(const Tensor& x, const char* who) {
  if (x.rank() != 2) throw config_error(std::string(who) + ": matrix expected");
}

}  // namespace

double stiefel_deviation(const Tensor& X) {
  require_2d(X, "stiefel_deviation");
  const int n = X.dim(0), k = X.dim(1);
  double sum = 0.0;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      double g = 0.0;
      for (int i = 0; i < n; ++i) g += X(i, a) * X(i, b);
      const double d = g - (a == b ? 1.0 : 0.0);
      sum += d * d;
    }
  return std::sqrt(sum);
}

double centred_deviation(const Tensor& X) {
  require_2d(X, "centred_deviation");
  const int m = X.dim(0), n = X.dim(1);
  double worst = 0.0;
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += X(i, j);
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

void jacobi_eigh(const Tensor& A, Tensor* eigenvalues, Tensor* eigenvectors) {
  require_2d(A, "jacobi_eigh");
  const int k = A.dim(0);
  if (A.dim(1) != k) throw config_error("jacobi_eigh: matrix must be square");

  Tensor b = A;
  Tensor v({k, k});
  for (int i = 0; i < k; ++i) v(i, i) = 1.0;

  const double scale = std::max(1.0, frobenius_norm(A));
  const double tol = 1e-14 * scale;

  auto off_norm = [&]() {
    double s = 0.0;
    for (int p = 0; p < k; ++p)
      for (int q = p + 1; q < k; ++q) s += 2.0 * b(p, q) * b(p, q);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
    for (int p = 0; p < k; ++p)
      for (int q = p + 1; q < k; ++q) {
        const double apq = b(p, q);
        if (std::abs(apq) <= tol * 1e-2) continue;
        const double tau = (b(q, q) - b(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int i = 0; i < k; ++i) {
          const double bip = b(i, p), biq = b(i, q);
          b(i, p) = c * bip - s * biq;
          b(i, q) = s * bip + c * biq;
        }
        for (int i = 0; i < k; ++i) {
          const double bpi = b(p, i), bqi = b(q, i);
          b(p, i) = c * bpi - s * bqi;
          b(q, i) = s * bpi + c * bqi;
        }
        for (int i = 0; i < k; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
  }

  if (eigenvalues) {
    *eigenvalues = Tensor({k});
    for (int i = 0; i < k; ++i) (*eigenvalues)[i] = b(i, i);
  }
  if (eigenvectors) *eigenvectors = std::move(v);
}

Tensor polar_factor(const Tensor& A) {
  require_2d(A, "polar_factor");
  const int n = A.dim(0), k = A.dim(1);
  if (n < k) throw config_error("polar_factor: matrix must have at least as many rows as columns");

  // Gram matrix and its inverse square root
  Tensor g({k, k});
  for (int a = 0; a < k; ++a)
    for (int b = a; b < k; ++b) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += A(i, a) * A(i, b);
      g(a, b) = s;
      g(b, a) = s;
    }

  Tensor evals, evecs;
  jacobi_eigh(g, &evals, &evecs);

  double lmax = 0.0;
  for (int i = 0; i < k; ++i) lmax = std::max(lmax, evals[i]);
  for (int i = 0; i < k; ++i)
    if (!(evals[i] > 1e-12 * std::max(1.0, lmax)))
      throw numeric_error("polar_factor: rank-deficient input (eigenvalue " +
                          std::to_string(evals[i]) + ")");

  Tensor inv_sqrt({k, k});
  for (int a = 0; a < k; ++a)
    for (int b = a; b < k; ++b) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += evecs(a, i) * evecs(b, i) / std::sqrt(evals[i]);
      inv_sqrt(a, b) = s;
      inv_sqrt(b, a) = s;
    }

  Tensor q({n, k});
  for (int i = 0; i < n; ++i)
    for (int b = 0; b < k; ++b) {
      double s = 0.0;
      for (int a = 0; a < k; ++a) s += A(i, a) * inv_sqrt(a, b);
      q(i, b) = s;
    }
  return q;
}

Tensor proj_centred(const Tensor& X, const Tensor& U) {
  require_2d(U, "proj_centred");
  if (!X.same_shape(U)) throw config_error("proj_centred: shape mismatch");
  const int m = U.dim(0), n = U.dim(1);
  Tensor t = U;
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += U(i, j);
    mean /= n;
    for (int j = 0; j < n; ++j) t(i, j) -= mean;
  }
  return t;
}

Tensor retr_centred(const Tensor& X, const Tensor& V) {
  if (!X.same_shape(V)) throw config_error("retr_centred: shape mismatch");
  const double tol_x = 1e-6 * std::max(1.0, max_abs(X));
  const double tol_v = 1e-6 * std::max(1.0, max_abs(V));
  if (centred_deviation(X) > tol_x)
    throw constraint_error("retr_centred: point is not centred");
  if (centred_deviation(V) > tol_v)
    throw constraint_error("retr_centred: tangent vector is not row-centred");
  Tensor y = X;
  axpy(y, 1.0, V);
  return y;
}

Tensor proj_stiefel(const Tensor& X, const Tensor& U) {
  require_2d(X, "proj_stiefel");
  if (!X.same_shape(U)) throw config_error("proj_stiefel: shape mismatch");
  if (stiefel_deviation(X) > kStiefelEntryTol)
    throw constraint_error("proj_stiefel: point is off the Stiefel manifold");
  const int n = X.dim(0), k = X.dim(1);

  // sym(X^T U)
  Tensor s({k, k});
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      double g = 0.0;
      for (int i = 0; i < n; ++i) g += X(i, a) * U(i, b);
      s(a, b) = g;
    }
  for (int a = 0; a < k; ++a)
    for (int b = a; b < k; ++b) {
      const double m = 0.5 * (s(a, b) + s(b, a));
      s(a, b) = m;
      s(b, a) = m;
    }

  Tensor t = U;
  for (int i = 0; i < n; ++i)
    for (int b = 0; b < k; ++b) {
      double g = 0.0;
      for (int a = 0; a < k; ++a) g += X(i, a) * s(a, b);
      t(i, b) -= g;
    }
  return t;
}

Tensor retr_stiefel(const Tensor& X, const Tensor& V) {
  if (!X.same_shape(V)) throw config_error("retr_stiefel: shape mismatch");
  Tensor a = X;
  axpy(a, 1.0, V);
  return polar_factor(a);
}

void constrained_sgd_step(Param& param, double lr) {
  if (!param.grad.same_shape(param.value))
    throw config_error("constrained_sgd_step: gradient shape mismatch");

  switch (param.constraint) {
    case Constraint::none:
      axpy(param.value, -lr, param.grad);
      ++param.step_count;
      break;
    case Constraint::stiefel: {
      if (stiefel_deviation(param.value) > kStiefelEntryTol)
        throw constraint_error("constrained_sgd_step: Stiefel invariant violated on entry");
      Tensor step = param.grad;
      for (double& v : step.data) v *= -lr;
      param.value = retr_stiefel(param.value, proj_stiefel(param.value, step));
      ++param.step_count;
      if (param.step_count % kDriftCheckPeriod == 0 &&
          stiefel_deviation(param.value) > kDriftTol)
        param.value = polar_factor(param.value);
      break;
    }
    case Constraint::centred: {
      const double tol = 1e-6 * std::max(1.0, max_abs(param.value));
      if (centred_deviation(param.value) > tol)
        throw constraint_error("constrained_sgd_step: centred invariant violated on entry");
      Tensor step = param.grad;
      for (double& v : step.data) v *= -lr;
      param.value = retr_centred(param.value, proj_centred(param.value, step));
      ++param.step_count;
      if (param.step_count % kDriftCheckPeriod == 0 &&
          centred_deviation(param.value) > kDriftTol)
        param.value = proj_centred(param.value, param.value);
      break;
    }
  }
  if (!param.value.all_finite())
    throw numeric_error("constrained_sgd_step: non-finite parameter after update");
}

}  // namespace statn
