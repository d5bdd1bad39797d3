#pragma once

#include <algorithm>
#include <cmath>
#include <variant>

#include "grp/linalg.hpp"
#include "grp/types.hpp"

namespace grp {

/// f(x) = x'Qx + q'x + c0 with Q symmetric PSD.
class Quadratic {
 public:
  Quadratic(Matrix Q, Vector q, double c0 = 0.0) : Q_(std::move(Q)), q_(std::move(q)), c0_(c0) {
    require(Q_.rows() == Q_.cols(), "Q must be square");
    require(q_.size() == Q_.rows(), "q must match Q");
    require((Q_ - Q_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, Q_.cwiseAbs().maxCoeff()),
            "Q must be symmetric");
    if (Q_.rows() > 0) {
      const double smallest = Eigen::SelfAdjointEigenSolver<Matrix>(Q_, Eigen::EigenvaluesOnly).eigenvalues()(0);
      require(smallest >= -1e-10, "Q must be positive semidefinite");
    }
  }

  Eigen::Index dim() const { return q_.size(); }
  const Matrix& Q() const { return Q_; }
  const Vector& q() const { return q_; }
  double c0() const { return c0_; }

  double value(const Vector& x) const {
    require(x.size() == dim(), "dimension mismatch in Quadratic::value");
    return x.dot(Q_ * x) + q_.dot(x) + c0_;
  }
  Vector gradient(const Vector& x) const {
    require(x.size() == dim(), "dimension mismatch in Quadratic::gradient");
    return 2.0 * (Q_ * x) + q_;
  }

  /// Minimizer -(2Q)^{-1} q; requires Q positive definite.
  Vector minimizer() const {
    Eigen::LLT<Matrix> llt(2.0 * Q_);
    if (llt.info() != Eigen::Success) throw NumericalError("Quadratic::minimizer: Q is not positive definite");
    return llt.solve(-q_);
  }

  Quadratic operator+(const Quadratic& other) const {
    require(dim() == other.dim(), "dimension mismatch in Quadratic sum");
    return Quadratic(Q_ + other.Q_, q_ + other.q_, c0_ + other.c0_);
  }

 private:
  Matrix Q_;
  Vector q_;
  double c0_;
};

/// Linear system x(t) = A x(t-1) + B u(t), scalar input. Returns the 2 x T
/// matrix whose column t-1 is x(t).
inline Matrix rollout(const Matrix& A, const Vector& B, const Vector& x0, const Vector& u) {
  require(A.rows() == A.cols() && A.rows() == B.size() && x0.size() == B.size(), "rollout: shape mismatch");
  Matrix states(x0.size(), u.size());
  Vector x = x0;
  for (Eigen::Index t = 0; t < u.size(); ++t) {
    x = A * x + B * u(t);
    states.col(t) = x;
  }
  return states;
}

/// Agent objective in control space:
///   f(u) = sum_t ||x(t) - z||^2 + r u(t),  states eliminated through the dynamics.
struct MpcObjective {
  Matrix A;
  Vector B;
  Vector x0;
  int T = 1;
  Vector z;
  double r = 0.0;

  void validate() const {
    require(T >= 1, "horizon T must be >= 1");
    require(r >= 0.0, "control penalty r must be >= 0");
    require(A.rows() == A.cols() && A.rows() == B.size() && x0.size() == B.size() && z.size() == B.size(),
            "MPC objective: shape mismatch");
  }

  double value(const Vector& u) const {
    require(u.size() == T, "dimension mismatch in MpcObjective::value");
    const Matrix states = rollout(A, B, x0, u);
    return (states.colwise() - z).squaredNorm() + r * u.sum();
  }

  /// Adjoint (backward) pass over the rollout.
  Vector gradient(const Vector& u) const {
    require(u.size() == T, "dimension mismatch in MpcObjective::gradient");
    const Matrix states = rollout(A, B, x0, u);
    Vector g(T);
    Vector costate = Vector::Zero(x0.size());
    for (int t = T - 1; t >= 0; --t) {
      costate = 2.0 * (states.col(t) - z) + A.transpose() * costate;
      g(t) = costate.dot(B) + r;
    }
    return g;
  }
};

/// Stacked response map: states = G u + h, with G the (n T) x T lower block
/// triangular matrix of blocks A^{t-s} B and h the free response A^t x0.
inline std::pair<Matrix, Vector> stacked_response(const MpcObjective& mpc) {
  const auto n = mpc.x0.size();
  const int T = mpc.T;
  Matrix G = Matrix::Zero(n * T, T);
  Vector h(n * T);
  std::vector<Vector> powers_b(T);  // A^j B
  powers_b[0] = mpc.B;
  for (int j = 1; j < T; ++j) powers_b[j] = mpc.A * powers_b[j - 1];
  Vector free = mpc.x0;
  for (int t = 1; t <= T; ++t) {
    free = mpc.A * free;
    h.segment((t - 1) * n, n) = free;
    for (int s = 1; s <= t; ++s) G.block((t - 1) * n, s - 1, n, 1) = powers_b[t - s];
  }
  return {G, h};
}

/// f(u) = ||G u + h - Z||^2 + r 1'u expanded to Quadratic form.
inline Quadratic to_quadratic(const MpcObjective& mpc) {
  mpc.validate();
  auto [G, h] = stacked_response(mpc);
  Vector Z = mpc.z.replicate(mpc.T, 1);
  Vector residual = h - Z;
  Matrix Q = G.transpose() * G;
  Q = 0.5 * (Q + Q.transpose());
  Vector q = 2.0 * G.transpose() * residual + Vector::Constant(mpc.T, mpc.r);
  return Quadratic(std::move(Q), std::move(q), residual.squaredNorm());
}

using Objective = std::variant<Quadratic, MpcObjective>;

inline double value(const Objective& f, const Vector& x) {
  return std::visit([&](const auto& g) { return g.value(x); }, f);
}
inline Vector gradient(const Objective& f, const Vector& x) {
  return std::visit([&](const auto& g) { return g.gradient(x); }, f);
}
inline Quadratic as_quadratic(const Objective& f) {
  if (const auto* q = std::get_if<Quadratic>(&f)) return *q;
  return to_quadratic(std::get<MpcObjective>(f));
}

struct ObjectiveConstants {
  double L = 0.0;      // Lipschitz constant of the gradient
  double sigma = 0.0;  // strong convexity modulus
  double Gf = 0.0;     // gradient bound over the ball of radius set_radius
};

/// L = 2 lambda_max(Q) by power iteration, sigma = 2 lambda_min(Q) by inverse
/// iteration (0 when Q is singular), and the certified bound
/// ||2Qx + q|| <= 2 ||Q|| R + ||q|| over ||x|| <= R.
inline ObjectiveConstants constants(const Quadratic& f, double set_radius) {
  require(set_radius >= 0.0, "set radius must be >= 0");
  const Matrix& Q = f.Q();
  ObjectiveConstants c;
  if (f.dim() == 0) return c;
  const Vector start = linalg::default_start(f.dim());

  double lmax = 0.0;
  if (Q.cwiseAbs().maxCoeff() > 0.0) {
    lmax = linalg::power_iteration([&](const Vector& v) -> Vector { return Q * v; }, start).eigenvalue;
  }
  double lmin = 0.0;
  Eigen::LDLT<Matrix> ldlt(Q);
  const double pivot_floor = 1e-12 * std::max(lmax, 1e-300);
  if (lmax > 0.0 && ldlt.info() == Eigen::Success && ldlt.isPositive() &&
      ldlt.vectorD().minCoeff() > pivot_floor) {
    const double inv_top =
        linalg::power_iteration([&](const Vector& v) -> Vector { return ldlt.solve(v); }, start).eigenvalue;
    lmin = inv_top > 0.0 ? 1.0 / inv_top : 0.0;
  }
  c.L = 2.0 * lmax;
  c.sigma = std::min(2.0 * lmin, c.L);
  c.Gf = 2.0 * lmax * set_radius + f.q().norm();
  return c;
}

}  // namespace grp
