#pragma once

#include "statn/param.hpp"
#include "statn/tensor.hpp"

namespace statn {

// Constraint-preserving SGD pieces: tangent-space projections and retractions
// for the Stiefel manifold (orthonormal bases) and the centred-matrices
// manifold (zero row-sum means).

double stiefel_deviation(const Tensor& X);  // ||X^T X - I_k||_F
double centred_deviation(const Tensor& X);  // ||X 1_n||_inf

// Eigendecomposition of a symmetric k x k matrix by cyclic Jacobi sweeps
// (off-diagonal norm driven below 1e-14 relative to ||A||_F). Eigenvectors
// are returned as columns.
void jacobi_eigh(const Tensor& A, Tensor* eigenvalues, Tensor* eigenvectors);

// Orthogonal polar factor Q of a full-column-rank A: the nearest matrix with
// orthonormal columns in Frobenius norm, computed through the k x k
// eigendecomposition of A^T A.
Tensor polar_factor(const Tensor& A);

// centred manifold: tangent projection just removes each row's mean
Tensor proj_centred(const Tensor& X, const Tensor& U);
Tensor retr_centred(const Tensor& X, const Tensor& V);

// Stiefel manifold: Proj(U) = U - X sym(X^T U), Retr(V) = polar(X + V)
Tensor proj_stiefel(const Tensor& X, const Tensor& U);
Tensor retr_stiefel(const Tensor& X, const Tensor& V);

// One SGD step honouring the parameter's constraint tag. Unconstrained
// parameters take the plain Euclidean step; constrained ones project the
// scaled negative gradient to the tangent space and retract. Every 100 steps
// drift beyond 1e-8 is repaired by re-retraction.
void constrained_sgd_step(Param& param, double lr);

}  // namespace statn
