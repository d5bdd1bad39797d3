#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "grp/types.hpp"

namespace grp::linalg {

struct PowerResult {
  double eigenvalue = 0.0;
  Vector eigenvector;
  long iterations = 0;
};

// Power iteration for the dominant eigenpair of a symmetric PSD operator.
// `apply(v)` returns the operator applied to v. When `deflate_ones` is set the
// iterate is kept orthogonal to the all-ones vector. Stops when the residual
// ||Av - mu v|| drops below rel_tol * |mu|; for symmetric operators that
// residual bounds the eigenvalue error.
template <typename Apply>
PowerResult power_iteration(Apply&& apply, Vector start, bool deflate_ones = false,
                            double rel_tol = 1e-10, long max_iter = 100000) {
  const auto n = start.size();
  auto orthogonalize = [&](Vector& v) {
    if (deflate_ones) v.array() -= v.mean();
  };
  orthogonalize(start);
  double norm = start.norm();
  if (norm == 0.0) throw NumericalError("power iteration: start vector is degenerate");
  Vector v = start / norm;

  PowerResult result;
  for (long it = 1; it <= max_iter; ++it) {
    Vector w = apply(v);
    orthogonalize(w);
    const double mu = v.dot(w);
    const double wnorm = w.norm();
    // Zero operator on the working subspace.
    if (wnorm <= std::numeric_limits<double>::min() * static_cast<double>(n)) {
      result.eigenvalue = 0.0;
      result.eigenvector = v;
      result.iterations = it;
      return result;
    }
    const double residual = (w - mu * v).norm();
    v = w / wnorm;
    if (residual <= rel_tol * std::abs(mu)) {
      result.eigenvalue = mu;
      result.eigenvector = v;
      result.iterations = it;
      return result;
    }
  }
  throw NumericalError("power iteration did not converge after " + std::to_string(max_iter) +
                       " iterations");
}

// Block power iteration with a Rayleigh-Ritz step for the dominant eigenpair
// of a symmetric PSD operator. Same residual stopping rule as
// power_iteration, but the top Ritz pair converges at the rate
// lambda_{p+1}/lambda_1, so a cluster of up to `block` leading eigenvalues
// does not stall it. `start` holds the block columns.
template <typename Apply>
PowerResult block_power_iteration(Apply&& apply, Matrix start, bool deflate_ones = false,
                                  double rel_tol = 1e-10, long max_iter = 100000) {
  const auto n = start.rows();
  const auto p = start.cols();
  require(p >= 1 && p <= n, "block size must lie in [1, n]");
  require(!deflate_ones || p < n, "block must fit in the complement of the ones vector");
  // QR of [1, V] keeps the block orthonormal and orthogonal to 1 even when
  // V loses rank.
  auto orthonormalize = [&](Matrix& V) {
    const Eigen::Index lead = deflate_ones ? 1 : 0;
    Matrix M(n, p + lead);
    if (deflate_ones) M.col(0).setOnes();
    M.rightCols(p) = V;
    Eigen::HouseholderQR<Matrix> qr(M);
    const Matrix Q = qr.householderQ() * Matrix::Identity(n, p + lead);
    V = Q.rightCols(p);
  };
  Matrix V = std::move(start);
  orthonormalize(V);

  PowerResult result;
  for (long it = 1; it <= max_iter; ++it) {
    Matrix W(n, p);
    for (Eigen::Index j = 0; j < p; ++j) W.col(j) = apply(Vector(V.col(j)));
    if (deflate_ones) W.rowwise() -= W.colwise().mean();
    if (W.norm() <= std::numeric_limits<double>::min() * static_cast<double>(n)) {
      result.eigenvalue = 0.0;
      result.eigenvector = V.col(0);
      result.iterations = it;
      return result;
    }
    const Matrix H = 0.5 * (V.transpose() * W + W.transpose() * V);
    Eigen::SelfAdjointEigenSolver<Matrix> ritz(H);
    const Vector s = ritz.eigenvectors().col(p - 1);
    const double mu = ritz.eigenvalues()(p - 1);
    const double residual = (W * s - mu * (V * s)).norm();
    if (residual <= rel_tol * std::abs(mu)) {
      result.eigenvalue = mu;
      result.eigenvector = V * s;
      result.iterations = it;
      return result;
    }
    V = std::move(W);
    orthonormalize(V);
  }
  throw NumericalError("block power iteration did not converge after " + std::to_string(max_iter) +
                       " iterations");
}

// Deterministic start vector with no special symmetry, so it has a nonzero
// component along every eigenvector of the graph matrices used here.
inline Vector default_start(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std::sin(1.0 + 0.7 * static_cast<double>(i)) + 0.01 * static_cast<double>(i);
  return v;
}

// Deterministic start block: shifted copies of default_start.
inline Matrix default_start_block(Eigen::Index n, Eigen::Index p) {
  Matrix V(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      V(i, j) = std::sin(1.0 + 0.7 * static_cast<double>(i) + 1.3 * static_cast<double>(j)) +
                0.01 * static_cast<double>((i + 1) * (j + 1));
  return V;
}

}  // namespace grp::linalg
