#pragma once

// Distributed robust MPC benchmark: a double-integrator steered over a finite
// horizon under box-bounded inputs and terminal halfspaces with box-uncertain
// normals. Everything is expressed in control space u in R^T.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "grp/constraints.hpp"
#include "grp/engine.hpp"
#include "grp/objective.hpp"
#include "grp/rng.hpp"
#include "grp/types.hpp"

namespace grp {

/// (a + delta)' x(T) <= b for every |delta|_inf <= beta.
struct TerminalConstraint {
  Vector a;
  double b = 0.0;
  double beta = 0.0;
};

struct MpcInstance {
  Matrix A;
  Vector B;
  Vector x0;
  int T = 10;
  double r = 0.1;
  std::vector<Vector> targets;
  std::vector<TerminalConstraint> terminal;
  double u_max = 2.0;

  int agents() const { return static_cast<int>(targets.size()); }

  void validate() const {
    require(T >= 1, "horizon T must be >= 1");
    require(u_max > 0.0, "control box radius must be positive");
    require(r >= 0.0, "control penalty must be >= 0");
    require(A.rows() == 2 && A.cols() == 2 && B.size() == 2 && x0.size() == 2, "MPC system must be 2-state");
    require(targets.size() >= 2, "need at least two agents");
    for (const auto& z : targets) require(z.size() == 2, "targets must be 2-vectors");
    for (const auto& t : terminal) {
      require(t.a.size() == 2 && t.a.norm() > 0.0, "terminal normals must be nonzero 2-vectors");
      require(t.beta >= 0.0, "terminal beta must be >= 0");
    }
  }

  MpcObjective objective(int agent) const {
    MpcObjective f{A, B, x0, T, targets.at(agent), r};
    f.validate();
    return f;
  }
};

/// 2 x T map from u to x(T): column s-1 is A^{T-s} B.
inline Matrix terminal_map(const MpcInstance& inst) {
  Matrix M(2, inst.T);
  Vector col = inst.B;
  for (int s = inst.T; s >= 1; --s) {
    M.col(s - 1) = col;
    col = inst.A * col;
  }
  return M;
}

/// A^T x0
inline Vector free_response(const MpcInstance& inst) {
  Vector x = inst.x0;
  for (int t = 0; t < inst.T; ++t) x = inst.A * x;
  return x;
}

struct StateHalfspace {
  Vector a;
  double b = 0.0;
};

/// Sign-pattern expansion of a box-uncertain halfspace in state space:
/// normals a + beta s for s in {-1,+1}^2, common offset b.
inline std::array<StateHalfspace, 4> expand_uncertainty(const Vector& a, double b, double beta) {
  require(a.size() == 2, "expand_uncertainty expects a 2-vector normal");
  require(beta >= 0.0, "beta must be >= 0");
  std::array<StateHalfspace, 4> out;
  int idx = 0;
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0}) {
      Vector n = a;
      n(0) += beta * s1;
      n(1) += beta * s2;
      out[idx++] = {std::move(n), b};
    }
  return out;
}

/// g'u <= h in control space.
struct ControlHalfspace {
  Vector g;
  double h = 0.0;
};

struct DeterministicEquivalent {
  std::vector<ControlHalfspace> halfspaces;
  double u_max = 0.0;
  int T = 0;

  bool contains(const Vector& u, double tol = 0.0) const {
    if (u.cwiseAbs().maxCoeff() > u_max + tol) return false;
    for (const auto& hs : halfspaces)
      if (hs.g.dot(u) > hs.h + tol) return false;
    return true;
  }

  /// The input box, then all non-vacuous halfspaces as one Polyhedron. Their
  /// normals all lie in the 2-dimensional range of the terminal map, so exact
  /// projection needs active sets of at most two faces.
  std::vector<ConstraintComponent> components() const {
    std::vector<ConstraintComponent> out;
    out.emplace_back(Box::cube(T, u_max));
    std::vector<Halfspace> faces;
    for (const auto& hs : halfspaces) {
      if (hs.g.norm() == 0.0) {
        if (hs.h < 0.0) throw NumericalError("deterministic equivalent is empty (0 <= negative offset)");
        continue;
      }
      faces.emplace_back(hs.g, hs.h);
    }
    if (!faces.empty()) out.emplace_back(Polyhedron(std::move(faces)));
    return out;
  }
};

/// Map state-space halfspace a'x(T) <= b to g = M'a, h = b - a'A^T x0.
inline DeterministicEquivalent to_control_space(const MpcInstance& inst) {
  inst.validate();
  const Matrix M = terminal_map(inst);
  const Vector s = free_response(inst);
  DeterministicEquivalent de;
  de.u_max = inst.u_max;
  de.T = inst.T;
  for (const auto& tc : inst.terminal)
    for (const auto& hs : expand_uncertainty(tc.a, tc.b, tc.beta))
      de.halfspaces.push_back({M.transpose() * hs.a, hs.b - hs.a.dot(s)});
  return de;
}

/// Robust feasibility checked the direct way: roll the system out and test
/// every corner of every perturbation box, plus the input box.
inline bool robust_feasible_by_corners(const MpcInstance& inst, const Vector& u) {
  if (u.cwiseAbs().maxCoeff() > inst.u_max) return false;
  const Matrix states = rollout(inst.A, inst.B, inst.x0, u);
  const Vector xT = states.col(inst.T - 1);
  for (const auto& tc : inst.terminal)
    for (double d1 : {-tc.beta, tc.beta})
      for (double d2 : {-tc.beta, tc.beta})
        if ((tc.a(0) + d1) * xT(0) + (tc.a(1) + d2) * xT(1) > tc.b) return false;
  return true;
}

/// Sum of the agents' objectives as one Quadratic in u.
inline Quadratic total_objective(const MpcInstance& inst) {
  Quadratic total = to_quadratic(inst.objective(0));
  for (int i = 1; i < inst.agents(); ++i) total = total + to_quadratic(inst.objective(i));
  return total;
}

struct BaselineResult {
  Vector solution;
  double kkt_residual = 0.0;         // ||u - Pi[u - grad/L]||
  double max_halfspace_residual = 0.0;
  double box_violation = 0.0;
  double objective = 0.0;
  long iterations = 0;
};

/// Projected gradient with step 1/L; each iterate is projected onto the
/// intersection with Dykstra. Stops when ||u_{t+1} - u_t|| < tol.
inline BaselineResult solve_projected_gradient(const Quadratic& f, std::span<const ConstraintComponent> feasible,
                                               const Vector& start, double tol = 1e-9, long max_iter = 2000000,
                                               double projection_tol = 1e-11) {
  const double L = constants(f, 0.0).L;
  require(L > 0.0, "objective has zero curvature; projected gradient step undefined");
  BaselineResult res;
  Vector u = project_intersection(start, feasible, projection_tol);
  for (long it = 1; it <= max_iter; ++it) {
    Vector next = project_intersection(u - f.gradient(u) / L, feasible, projection_tol);
    const double change = (next - u).norm();
    u = std::move(next);
    if (change < tol) {
      res.iterations = it;
      res.solution = u;
      res.kkt_residual = (u - project_intersection(u - f.gradient(u) / L, feasible, projection_tol)).norm();
      res.objective = f.value(u);
      for (const auto& comp : feasible) {
        if (const auto* h = std::get_if<Halfspace>(&comp)) {
          res.max_halfspace_residual = std::max(res.max_halfspace_residual, h->a.dot(u) - h->b);
        } else if (const auto* p = std::get_if<Polyhedron>(&comp)) {
          for (const auto& f : p->faces)
            res.max_halfspace_residual = std::max(res.max_halfspace_residual, f.a.dot(u) - f.b);
        } else {
          res.box_violation = std::max(res.box_violation, dist(u, comp));
        }
      }
      return res;
    }
  }
  throw NumericalError("projected gradient did not converge in " + std::to_string(max_iter) + " iterations");
}

inline BaselineResult solve_baseline(const MpcInstance& inst, double tol = 1e-9) {
  const auto comps = to_control_space(inst).components();
  return solve_projected_gradient(total_objective(inst), comps, Vector::Zero(inst.T), tol);
}

/// The benchmark with the published system, horizon, penalty and input box.
/// Agent targets and the terminal polytope are unpublished, so they are
/// generated from `seed`:
///   z_i      ~ U([2,12] x [-3,3])            (around the free-response endpoint (7,0))
///   center   ~ (7,0) + U([-0.5,0.5]^2)
///   normal l = (cos t, sin t), t = pi/4 + l pi/2 + U(-pi/8, pi/8)
///   b_l      = a_l' center + U(0.25, 1.0)
///   beta_l   ~ U(0.01, 0.05)
/// A candidate whose deterministic equivalent turns out empty is redrawn
/// from the next sub-seed.
inline MpcInstance default_instance(int m, std::uint64_t seed) {
  require(m >= 2, "default_instance needs m >= 2");
  constexpr int kMaxAttempts = 16;
  const double pi = std::acos(-1.0);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    auto unif = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    MpcInstance inst;
    inst.A = (Matrix(2, 2) << 1.0, 1.0, 0.0, 1.0).finished();
    inst.B = (Vector(2) << 0.5, 1.0).finished();
    inst.x0 = (Vector(2) << 7.0, 0.0).finished();
    inst.T = 10;
    inst.r = 0.1;
    inst.u_max = 2.0;
    const Vector endpoint = free_response(inst);
    for (int i = 0; i < m; ++i) {
      Vector z = endpoint;
      z(0) += unif(-5.0, 5.0);
      z(1) += unif(-3.0, 3.0);
      inst.targets.push_back(std::move(z));
    }
    Vector center = endpoint;
    center(0) += unif(-0.5, 0.5);
    center(1) += unif(-0.5, 0.5);
    for (int l = 0; l < 4; ++l) {
      const double theta = pi / 4.0 + l * pi / 2.0 + unif(-pi / 8.0, pi / 8.0);
      Vector a(2);
      a << std::cos(theta), std::sin(theta);
      const double b = a.dot(center) + unif(0.25, 1.0);
      inst.terminal.push_back({std::move(a), b, unif(0.01, 0.05)});
    }
    const auto de = to_control_space(inst);
    try {
      const auto comps = de.components();
      const Vector probe = project_intersection(Vector::Zero(inst.T), comps);
      if (de.contains(probe, 1e-8)) return inst;
    } catch (const NumericalError&) {
      // fall through to the next sub-seed
    }
  }
  throw NumericalError("default_instance: no feasible instance after retries");
}

/// Per-agent GRP data: each agent samples one of the terminal constraints
/// uniformly, realizes its perturbation in state space (pushed through the
/// terminal map), projects onto it, then onto the input box.
inline Problem grp_problem(const MpcInstance& inst) {
  inst.validate();
  const Matrix M = terminal_map(inst);
  const Vector s = free_response(inst);
  std::vector<UncertainHalfspace> uncertain;
  for (const auto& tc : inst.terminal)
    uncertain.emplace_back(M.transpose() * tc.a, tc.b - tc.a.dot(s), tc.beta, M, s);
  const Box box = Box::cube(inst.T, inst.u_max);

  Problem p;
  for (int i = 0; i < inst.agents(); ++i) {
    p.objectives.emplace_back(inst.objective(i));
    p.constraints.emplace_back(std::vector<ConstraintComponent>{}, uncertain, std::vector<double>{},
                               std::vector<ConstraintComponent>{box});
  }
  p.feasible_set = to_control_space(inst).components();
  p.init_box = box;
  return p;
}

}  // namespace grp
