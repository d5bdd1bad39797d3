#pragma once

// Seeded generators shared by the property tests.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "grp/constraints.hpp"
#include "grp/rng.hpp"
#include "grp/topology.hpp"
#include "grp/types.hpp"

namespace grp::prop {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  Rng& rng() { return rng_; }

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Vector vector(Eigen::Index d, double scale = 1.0) {
    Vector v(d);
    for (auto& x : v) x = scale * normal();
    return v;
  }

  Vector uniform_vector(const Vector& lo, const Vector& hi) {
    Vector v(lo.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform(lo(i), hi(i));
    return v;
  }

  /// Symmetric matrix with spectrum drawn from [lo, hi].
  Matrix spd(Eigen::Index d, double lo, double hi) {
    Matrix g = Matrix::NullaryExpr(d, d, [&] { return normal(); });
    Eigen::HouseholderQR<Matrix> qr(g);
    const Matrix U = qr.householderQ();
    Vector ev(d);
    for (auto& e : ev) e = uniform(lo, hi);
    Matrix S = U * ev.asDiagonal() * U.transpose();
    return 0.5 * (S + S.transpose());
  }

  /// Connected graph: random spanning tree plus each remaining pair with
  /// probability p.
  Topology topology(int m, double p = 0.3) {
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    std::vector<Edge> edges;
    for (int i = 1; i < m; ++i) edges.emplace_back(order[i], order[integer(0, i - 1)]);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        if (uniform() < p) edges.emplace_back(i, j);
    return Topology(m, edges);
  }

  /// Random row-stochastic selection supported on the graph's edges.
  SelectionMatrix selection(const Topology& t) {
    Matrix pi = Matrix::Zero(t.size(), t.size());
    for (int i = 0; i < t.size(); ++i) {
      double total = 0.0;
      for (int j : t.neighbors(i)) total += (pi(i, j) = uniform(0.1, 1.0));
      pi.row(i) /= total;
    }
    return SelectionMatrix(t, pi);
  }

  Halfspace halfspace(Eigen::Index d) { return Halfspace(vector(d), normal()); }

  Box box(Eigen::Index d) {
    Vector lo = vector(d), hi(d);
    for (Eigen::Index i = 0; i < d; ++i) hi(i) = lo(i) + uniform(0.0, 2.0);
    return Box(lo, hi);
  }

  /// Polyhedron around a known interior point, so it is never empty.
  Polyhedron polyhedron(Eigen::Index d, int faces) {
    const Vector center = vector(d);
    std::vector<Halfspace> hs;
    for (int f = 0; f < faces; ++f) {
      Vector a = vector(d);
      hs.emplace_back(a, a.dot(center) + uniform(0.1, 1.0));
    }
    return Polyhedron(std::move(hs));
  }

  ConstraintComponent component(Eigen::Index d) {
    switch (integer(0, 4)) {
      case 0: return halfspace(d);
      case 1: return box(d);
      case 2: return Hyperplane(vector(d), normal());
      case 3: return FullSpace{};
      default: return polyhedron(d, integer(2, 5));
    }
  }

  /// A member of `comp`: alternately a projected random point (often on the
  /// boundary) or a point strictly inside where that is easy to produce.
  Vector member(const ConstraintComponent& comp, Eigen::Index d) {
    if (const auto* b = std::get_if<Box>(&comp); b && uniform() < 0.5) return uniform_vector(b->lo, b->hi);
    return project(vector(d, 3.0), comp);
  }

 private:
  Rng rng_;
};

}  // namespace grp::prop
