#pragma once

// Projectable convex pieces, randomly realized local constraints, and the
// Dykstra oracle for projecting onto their intersection.

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "grp/rng.hpp"
#include "grp/types.hpp"

namespace grp {

/// { x : a'x <= b }
struct Halfspace {
  Vector a;
  double b = 0.0;

  Halfspace() = default;
  Halfspace(Vector normal, double offset) : a(std::move(normal)), b(offset) {
    require(a.size() > 0 && a.norm() > 0.0, "halfspace normal must be nonzero");
  }
};

/// { x : a'x == b }
struct Hyperplane {
  Vector a;
  double b = 0.0;

  Hyperplane() = default;
  Hyperplane(Vector normal, double offset) : a(std::move(normal)), b(offset) {
    require(a.size() > 0 && a.norm() > 0.0, "hyperplane normal must be nonzero");
  }
};

/// { x : lo <= x <= hi } componentwise
struct Box {
  Vector lo;
  Vector hi;

  Box() = default;
  Box(Vector lower, Vector upper) : lo(std::move(lower)), hi(std::move(upper)) {
    require(lo.size() == hi.size(), "box bounds must have equal dimension");
    require((lo.array() <= hi.array()).all(), "box requires lo <= hi");
  }

  static Box cube(Eigen::Index dim, double radius) {
    return Box(Vector::Constant(dim, -radius), Vector::Constant(dim, radius));
  }
};

struct FullSpace {};

/// Intersection of a few halfspaces, projected onto exactly by enumerating
/// candidate active sets of at most rank(normals) faces. Used for groups of
/// nearly parallel faces (such as a worst-case expansion) where alternating
/// projections converge very slowly.
struct Polyhedron {
  std::vector<Halfspace> faces;
  int rank = 0;

  Polyhedron() = default;
  explicit Polyhedron(std::vector<Halfspace> f) : faces(std::move(f)) {
    require(!faces.empty(), "polyhedron needs at least one face");
    const auto dim = faces.front().a.size();
    Matrix normals(static_cast<Eigen::Index>(faces.size()), dim);
    for (std::size_t j = 0; j < faces.size(); ++j) {
      require(faces[j].a.size() == dim, "polyhedron faces differ in dimension");
      normals.row(static_cast<Eigen::Index>(j)) = faces[j].a.transpose() / faces[j].a.norm();
    }
    Eigen::FullPivLU<Matrix> lu(normals);
    lu.setThreshold(1e-10);
    rank = static_cast<int>(lu.rank());
    double subsets = 0.0, choose = 1.0;
    for (int s = 1; s <= rank; ++s) {
      choose = choose * static_cast<double>(faces.size() - s + 1) / s;
      subsets += choose;
    }
    require(subsets <= 1e5, "polyhedron has too many candidate active sets for exact projection");
  }

  bool contains(const Vector& x, double tol) const {
    for (const auto& h : faces)
      if (h.a.dot(x) - h.b > tol * std::max(1.0, h.a.norm())) return false;
    return true;
  }
};

using ConstraintComponent = std::variant<Halfspace, Box, Hyperplane, FullSpace, Polyhedron>;

namespace detail {

// Exact projection onto a small polyhedron. For an active set S of linearly
// independent faces, v = x - A_S' mu with A_S v = b_S; if mu >= 0 and v
// satisfies every face, v is the projection (KKT conditions are sufficient).
// Active sets are tried by increasing size, up to the normals' rank.
inline Vector project_polyhedron(const Vector& x, const Polyhedron& poly) {
  if (poly.contains(x, 0.0)) return x;
  const int k = static_cast<int>(poly.faces.size());
  const auto dim = x.size();
  Vector fallback;
  double fallback_dist = INFINITY;
  std::vector<int> active;

  // Returns true when the candidate for `active` satisfies KKT.
  auto evaluate = [&](Vector& out) {
    const auto size = static_cast<Eigen::Index>(active.size());
    Matrix A(size, dim);
    Vector residual(size);
    for (Eigen::Index r = 0; r < size; ++r) {
      const auto& h = poly.faces[active[r]];
      A.row(r) = h.a.transpose();
      residual(r) = h.a.dot(x) - h.b;  // same rounding as contains()
    }
    if ((residual.array() <= 0.0).all()) return false;  // none of these faces is violated
    Eigen::FullPivLU<Matrix> lu(A * A.transpose());
    lu.setThreshold(1e-13);
    if (lu.rank() < size) return false;
    const Vector mu = lu.solve(residual);
    Vector v = x - A.transpose() * mu;
    if (!poly.contains(v, 1e-10)) return false;
    const double d = (v - x).squaredNorm();
    if (d < fallback_dist) {
      fallback_dist = d;
      fallback = v;
    }
    if ((mu.array() >= -1e-12 * std::max(1.0, mu.cwiseAbs().maxCoeff())).all()) {
      out = std::move(v);
      return true;
    }
    return false;
  };
  // Enumerate subsets of exactly `size` faces starting at `next`.
  auto search = [&](auto&& self, int size, int next, Vector& out) -> bool {
    if (static_cast<int>(active.size()) == size) return evaluate(out);
    for (int j = next; j <= k - (size - static_cast<int>(active.size())); ++j) {
      active.push_back(j);
      const bool found = self(self, size, j + 1, out);
      active.pop_back();
      if (found) return true;
    }
    return false;
  };
  Vector result;
  for (int size = 1; size <= poly.rank; ++size)
    if (search(search, size, 0, result)) return result;

  if (fallback.size() > 0) return fallback;
  throw NumericalError("polyhedron projection failed (empty or degenerate polyhedron)");
}

}  // namespace detail

/// Euclidean projection onto a single component.
inline Vector project(const Vector& x, const ConstraintComponent& comp) {
  return std::visit(
      [&](const auto& c) -> Vector {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Halfspace>) {
          const double excess = c.a.dot(x) - c.b;
          if (excess <= 0.0) return x;
          return x - (excess / c.a.squaredNorm()) * c.a;
        } else if constexpr (std::is_same_v<T, Hyperplane>) {
          return x - ((c.a.dot(x) - c.b) / c.a.squaredNorm()) * c.a;
        } else if constexpr (std::is_same_v<T, Box>) {
          return x.cwiseMax(c.lo).cwiseMin(c.hi);
        } else if constexpr (std::is_same_v<T, Polyhedron>) {
          return detail::project_polyhedron(x, c);
        } else {
          return x;
        }
      },
      comp);
}

inline double dist(const Vector& x, const ConstraintComponent& comp) {
  return std::visit(
      [&](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Halfspace>) {
          return std::max(0.0, c.a.dot(x) - c.b) / c.a.norm();
        } else if constexpr (std::is_same_v<T, Hyperplane>) {
          return std::abs(c.a.dot(x) - c.b) / c.a.norm();
        } else if constexpr (std::is_same_v<T, Box>) {
          return (x - x.cwiseMax(c.lo).cwiseMin(c.hi)).norm();
        } else if constexpr (std::is_same_v<T, Polyhedron>) {
          return (x - detail::project_polyhedron(x, c)).norm();
        } else {
          return 0.0;
        }
      },
      comp);
}

inline bool contains(const Vector& x, const ConstraintComponent& comp, double tol = 1e-12) {
  return dist(x, comp) <= tol;
}

enum class PerturbationLaw { Uniform, Gaussian };

/// Halfspace with a random normal: realized as (a + P'delta)'x <= b - s'delta.
/// Under the uniform law delta is uniform on the box |delta|_inf <= beta;
/// under the Gaussian law its coordinates are iid N(0, beta^2). The default
/// lift P = [I 0] and s = 0 perturbs the first n_delta coordinates of a.
class UncertainHalfspace {
 public:
  UncertainHalfspace(Vector a, double b, double beta, int n_delta,
                     PerturbationLaw law = PerturbationLaw::Uniform)
      : a_(std::move(a)), b_(b), beta_(beta), law_(law) {
    require(n_delta >= 1 && n_delta <= a_.size(), "n_delta must lie in [1, dim]");
    lift_ = Matrix::Zero(n_delta, a_.size());
    lift_.leftCols(n_delta).setIdentity();
    offset_lift_ = Vector::Zero(n_delta);
    validate();
  }

  UncertainHalfspace(Vector a, double b, double beta, Matrix lift, Vector offset_lift,
                     PerturbationLaw law = PerturbationLaw::Uniform)
      : a_(std::move(a)), b_(b), beta_(beta), lift_(std::move(lift)),
        offset_lift_(std::move(offset_lift)), law_(law) {
    require(lift_.cols() == a_.size(), "lift must have dim columns");
    require(offset_lift_.size() == lift_.rows(), "offset lift must have n_delta entries");
    validate();
  }

  const Vector& a() const { return a_; }
  double b() const { return b_; }
  double beta() const { return beta_; }
  int n_delta() const { return static_cast<int>(lift_.rows()); }
  const Matrix& lift() const { return lift_; }
  const Vector& offset_lift() const { return offset_lift_; }
  PerturbationLaw law() const { return law_; }

  Vector draw_delta(Rng& rng) const {
    Vector delta(n_delta());
    if (law_ == PerturbationLaw::Uniform) {
      std::uniform_real_distribution<double> u(-beta_, beta_);
      for (auto& v : delta) v = beta_ > 0.0 ? u(rng) : 0.0;
    } else {
      std::normal_distribution<double> g(0.0, beta_);
      for (auto& v : delta) v = beta_ > 0.0 ? g(rng) : 0.0;
    }
    return delta;
  }

  /// Component for a given perturbation. A vanishing normal yields FullSpace
  /// when the offset is nonnegative.
  ConstraintComponent with_delta(const Vector& delta) const {
    Vector normal = a_ + lift_.transpose() * delta;
    const double offset = b_ - offset_lift_.dot(delta);
    if (normal.norm() <= 1e-14 * std::max(1.0, a_.norm())) {
      if (offset >= 0.0) return FullSpace{};
      throw NumericalError("realized halfspace has zero normal and negative offset (empty set)");
    }
    return Halfspace(std::move(normal), offset);
  }

  Halfspace nominal() const { return Halfspace(a_, b_); }

  /// The 2^n_delta halfspaces whose intersection is the set of x feasible for
  /// every delta in the uniform box: a'x + beta*|Px + s|_1 <= b.
  std::vector<Halfspace> worst_case() const {
    require(law_ == PerturbationLaw::Uniform, "Gaussian perturbations have no bounded worst case");
    const int n = n_delta();
    require(n <= 16, "worst-case expansion limited to n_delta <= 16");
    std::vector<Halfspace> out;
    out.reserve(std::size_t{1} << n);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      Vector sign(n);
      for (int j = 0; j < n; ++j) sign(j) = (mask >> j & 1u) ? 1.0 : -1.0;
      Vector normal = a_ + beta_ * (lift_.transpose() * sign);
      double offset = b_ - beta_ * offset_lift_.dot(sign);
      out.emplace_back(std::move(normal), offset);
    }
    return out;
  }

  /// Robust membership in closed form.
  bool robust_contains(const Vector& x, double tol = 0.0) const {
    return a_.dot(x) + beta_ * (lift_ * x + offset_lift_).lpNorm<1>() <= b_ + tol;
  }

 private:
  void validate() const {
    require(a_.size() > 0 && a_.norm() > 0.0, "uncertain halfspace normal must be nonzero");
    require(std::isfinite(beta_) && beta_ >= 0.0, "perturbation radius beta must be >= 0");
  }

  Vector a_;
  double b_;
  double beta_;
  Matrix lift_;
  Vector offset_lift_;
  PerturbationLaw law_;
};

/// Agent-local constraint X_i as a finite family of members. One member is
/// sampled per update (deterministic members first, then uncertain ones, in
/// the order of `weights`). `trailing` components are projected onto after
/// the sampled member at every update.
class LocalConstraint {
 public:
  explicit LocalConstraint(std::vector<ConstraintComponent> deterministic,
                           std::vector<UncertainHalfspace> uncertain = {},
                           std::vector<double> weights = {},
                           std::vector<ConstraintComponent> trailing = {})
      : deterministic_(std::move(deterministic)), uncertain_(std::move(uncertain)),
        weights_(std::move(weights)), trailing_(std::move(trailing)) {
    const std::size_t n = member_count();
    require(n >= 1, "local constraint needs at least one member");
    if (weights_.empty()) weights_.assign(n, 1.0 / static_cast<double>(n));
    require(weights_.size() == n, "one sampler weight per member required");
    double total = 0.0;
    for (double w : weights_) {
      require(std::isfinite(w) && w >= 0.0, "sampler weights must be nonnegative");
      total += w;
    }
    require(std::abs(total - 1.0) <= 1e-9, "sampler weights must sum to 1");
    cumulative_.resize(n);
    double running = 0.0;
    for (std::size_t j = 0; j < n; ++j) cumulative_[j] = (running += weights_[j]);
  }

  std::size_t member_count() const { return deterministic_.size() + uncertain_.size(); }
  const std::vector<ConstraintComponent>& deterministic() const { return deterministic_; }
  const std::vector<UncertainHalfspace>& uncertain() const { return uncertain_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<ConstraintComponent>& trailing() const { return trailing_; }

  std::size_t draw_member(Rng& rng) const {
    if (member_count() == 1) return 0;
    std::uniform_real_distribution<double> u(0.0, cumulative_.back());
    const double r = u(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
    idx = std::min(idx, member_count() - 1);
    // Zero-weight members can only be hit by round-off; step past them.
    while (weights_[idx] == 0.0 && idx > 0) --idx;
    return idx;
  }

  /// Deterministic set containing exactly the points feasible for every
  /// realization: deterministic members, worst-case expansions (one
  /// Polyhedron per uncertain member), trailing components.
  std::vector<ConstraintComponent> worst_case_set() const {
    std::vector<ConstraintComponent> out(deterministic_.begin(), deterministic_.end());
    for (const auto& u : uncertain_) out.emplace_back(Polyhedron(u.worst_case()));
    out.insert(out.end(), trailing_.begin(), trailing_.end());
    return out;
  }

 private:
  std::vector<ConstraintComponent> deterministic_;
  std::vector<UncertainHalfspace> uncertain_;
  std::vector<double> weights_;
  std::vector<ConstraintComponent> trailing_;
  std::vector<double> cumulative_;
};

/// Realize Omega_i(k): pick a member with `member_rng`, and draw the
/// perturbation of an uncertain member from `perturbation_rng`.
inline ConstraintComponent realize(const LocalConstraint& lc, Rng& member_rng, Rng& perturbation_rng) {
  const std::size_t idx = lc.draw_member(member_rng);
  if (idx < lc.deterministic().size()) return lc.deterministic()[idx];
  const auto& u = lc.uncertain()[idx - lc.deterministic().size()];
  return u.with_delta(u.draw_delta(perturbation_rng));
}

inline ConstraintComponent realize(const LocalConstraint& lc, Rng& rng) { return realize(lc, rng, rng); }

/// Projection onto the intersection of `comps` by Dykstra's algorithm. Stops
/// when the correction vectors change by less than `tol` over a sweep; the
/// iterate alone can sit still for many sweeps while a correction drains.
inline Vector project_intersection(const Vector& x, std::span<const ConstraintComponent> comps,
                                   double tol = 1e-10, long max_iter = 100000) {
  if (comps.empty()) return x;
  if (comps.size() == 1) return project(x, comps.front());

  const std::size_t n = comps.size();
  Vector y = x;
  std::vector<Vector> increments(n, Vector::Zero(x.size()));
  for (long sweep = 0; sweep < max_iter; ++sweep) {
    double change_sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      Vector shifted = y + increments[j];
      y = project(shifted, comps[j]);
      Vector next = shifted - y;
      change_sq += (next - increments[j]).squaredNorm();
      increments[j] = std::move(next);
    }
    if (sweep > 0 && change_sq < tol * tol) return y;
  }
  throw NumericalError("Dykstra projection did not converge in " + std::to_string(max_iter) +
                       " sweeps (ill-conditioned or empty intersection)");
}

inline double dist_to_intersection(const Vector& x, std::span<const ConstraintComponent> comps,
                                   double tol = 1e-10) {
  return (x - project_intersection(x, comps, tol)).norm();
}

/// Monte-Carlo diagnostic for the set-regularity constant: the largest
/// observed ratio dist^2(x, X) / E_Omega[dist^2(x, X_i^Omega)] over points
/// sampled uniformly in [lo, hi] and over agents. Expectations over
/// deterministic members are exact; uncertain members use `inner_draws`
/// perturbation samples. Samples where every member contains x are skipped.
inline double estimate_regularity(std::span<const LocalConstraint> lcs,
                                  std::span<const ConstraintComponent> feasible_set, Rng& rng,
                                  const Vector& lo, const Vector& hi, long n_samples,
                                  int inner_draws = 64) {
  require(!lcs.empty(), "need at least one local constraint");
  require(lo.size() == hi.size() && (lo.array() <= hi.array()).all(), "invalid sampling box");
  require(n_samples >= 1, "need at least one sample");
  const auto d = lo.size();
  double best = 0.0;
  long valid = 0;
  for (long s = 0; s < n_samples; ++s) {
    Vector x(d);
    for (Eigen::Index t = 0; t < d; ++t) x(t) = std::uniform_real_distribution<double>(lo(t), hi(t))(rng);
    const double to_set = std::pow(dist_to_intersection(x, feasible_set), 2);
    for (const auto& lc : lcs) {
      double expected = 0.0;
      const auto& w = lc.weights();
      for (std::size_t j = 0; j < lc.deterministic().size(); ++j)
        expected += w[j] * std::pow(dist(x, lc.deterministic()[j]), 2);
      for (std::size_t j = 0; j < lc.uncertain().size(); ++j) {
        const auto& u = lc.uncertain()[j];
        double acc = 0.0;
        for (int r = 0; r < inner_draws; ++r) acc += std::pow(dist(x, u.with_delta(u.draw_delta(rng))), 2);
        expected += w[lc.deterministic().size() + j] * acc / inner_draws;
      }
      if (expected <= std::numeric_limits<double>::min()) continue;
      ++valid;
      best = std::max(best, to_set / expected);
    }
  }
  if (valid == 0) throw NumericalError("regularity estimate: every sample lies in every member");
  return best;
}

}  // namespace grp
