#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "grp/constraints.hpp"
#include "support.hpp"

using namespace grp;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

/// Kolmogorov-Smirnov statistic of samples against U[lo, hi].
double ks_uniform(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = (xs[i] - lo) / (hi - lo);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

/// Exact projection onto a polyhedron by brute force over every active set:
/// the closest of all feasible candidates.
Vector brute_force_polyhedron(const Vector& x, const Polyhedron& P) {
  const auto n = P.faces.size();
  Vector best;
  double best_d = INFINITY;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<std::size_t> act;
    for (std::size_t f = 0; f < n; ++f)
      if (mask >> f & 1u) act.push_back(f);
    if (static_cast<Eigen::Index>(act.size()) > x.size()) continue;
    Vector y = x;
    if (!act.empty()) {
      Matrix A(act.size(), x.size());
      Vector r(act.size());
      for (std::size_t i = 0; i < act.size(); ++i) {
        A.row(i) = P.faces[act[i]].a.transpose();
        r(i) = P.faces[act[i]].a.dot(x) - P.faces[act[i]].b;
      }
      Eigen::FullPivLU<Matrix> lu(A * A.transpose());
      if (!lu.isInvertible()) continue;
      y = x - A.transpose() * lu.solve(r);
    }
    if (!P.contains(y, 1e-9)) continue;
    const double d = (y - x).norm();
    if (d < best_d) best_d = d, best = y;
  }
  return best;
}

}  // namespace

TEST(Components, Validation) {
  EXPECT_THROW(Halfspace(v2(0, 0), 1.0), ConfigError);
  EXPECT_THROW(Hyperplane(v2(0, 0), 1.0), ConfigError);
  EXPECT_THROW(Box(v2(1, 0), v2(0, 1)), ConfigError);
  EXPECT_THROW(Box(v2(0, 0), Vector::Ones(3)), ConfigError);
}

TEST(Project, Examples) {
  const Halfspace h(v2(1, 0), 0.0);
  EXPECT_TRUE(project(v2(2, 3), h).isApprox(v2(0, 3)));
  EXPECT_DOUBLE_EQ(dist(v2(2, 3), h), 2.0);
  const Box b(v2(-2, -2), v2(2, 2));
  EXPECT_TRUE(project(v2(5, 1), b).isApprox(v2(2, 1)));
  EXPECT_DOUBLE_EQ(dist(v2(7, -4), Hyperplane(v2(0, 1), 0.0)), 4.0);
  EXPECT_EQ(project(v2(7, -4), FullSpace{}), v2(7, -4));
  EXPECT_EQ(dist(v2(1, 1), b), 0.0);
  EXPECT_EQ(project(v2(-1, 5), h), v2(-1, 5));
}

TEST(Project, MembersAreFixedAndDistanceMatches) {
  prop::Gen gen(21);
  for (int trial = 0; trial < 500; ++trial) {
    const auto d = gen.integer(1, 6);
    const auto comp = gen.component(d);
    const Vector x = gen.vector(d, 3.0);
    const Vector p = project(x, comp);
    EXPECT_TRUE(contains(p, comp, 1e-9));
    EXPECT_NEAR(dist(x, comp), (x - p).norm(), 1e-12);
    EXPECT_LE((project(p, comp) - p).norm(), 1e-12);
    const Vector m = gen.member(comp, d);
    EXPECT_LE((project(m, comp) - m).norm(), 1e-9);
  }
}

TEST(Project, VariationalInequalityAndNonexpansiveness) {
  prop::Gen gen(22);
  for (int trial = 0; trial < 300; ++trial) {
    const auto d = gen.integer(1, 6);
    const auto comp = gen.component(d);
    const Vector x = gen.vector(d, 3.0);
    const Vector y = project(x, comp);
    for (int s = 0; s < 20; ++s) {
      const Vector v = gen.member(comp, d);
      EXPECT_LE((x - y).dot(v - y), 1e-9);
      EXPECT_LE((y - v).squaredNorm(), (x - v).squaredNorm() - (y - x).squaredNorm() + 1e-9);
    }
    const Vector z = gen.vector(d, 3.0);
    EXPECT_LE((project(z, comp) - y).norm(), (z - x).norm() + 1e-9);
  }
}

TEST(Polyhedron, MatchesBruteForceOracle) {
  prop::Gen gen(23);
  for (int trial = 0; trial < 300; ++trial) {
    const auto d = gen.integer(1, 4);
    const auto P = gen.polyhedron(d, gen.integer(1, 6));
    const Vector x = gen.vector(d, 3.0);
    const Vector fast = project(x, ConstraintComponent{P});
    const Vector slow = brute_force_polyhedron(x, P);
    ASSERT_EQ(slow.size(), d);
    EXPECT_LE((fast - slow).norm(), 1e-8) << "trial " << trial;
  }
}

TEST(Polyhedron, NearlyParallelFaces) {
  // Normals within a tiny angle of each other, as in the MPC deterministic
  // equivalent; plain alternating projections stall on these.
  std::vector<Halfspace> faces;
  for (int s = -2; s <= 2; ++s) faces.emplace_back(v2(1.0, 1e-3 * s), 1.0 + 1e-4 * s * s);
  const Polyhedron P(faces);
  EXPECT_EQ(P.rank, 2);
  const Vector x = v2(5.0, 3.0);
  const Vector p = project(x, ConstraintComponent{P});
  EXPECT_TRUE(P.contains(p, 1e-10));
  EXPECT_LE((p - brute_force_polyhedron(x, P)).norm(), 1e-8);
}

TEST(ProjectIntersection, Examples) {
  const std::vector<ConstraintComponent> orthant{Halfspace(v2(1, 0), 0), Halfspace(v2(0, 1), 0)};
  EXPECT_LE((project_intersection(v2(1, 1), orthant) - v2(0, 0)).norm(), 1e-10);
  const std::vector<ConstraintComponent> single{Box(v2(-1, -1), v2(1, 1))};
  EXPECT_LE((project_intersection(v2(3, 0.5), single) - project(v2(3, 0.5), single[0])).norm(), 1e-12);
  EXPECT_EQ(project_intersection(v2(-1, -2), orthant), v2(-1, -2));
}

TEST(ProjectIntersection, AgreesWithPolyhedronProjection) {
  prop::Gen gen(24);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = gen.integer(2, 4);
    const auto P = gen.polyhedron(d, gen.integer(2, 4));
    std::vector<ConstraintComponent> parts(P.faces.begin(), P.faces.end());
    const Vector x = gen.vector(d, 3.0);
    EXPECT_LE((project_intersection(x, parts, 1e-12) - project(x, ConstraintComponent{P})).norm(), 1e-7);
  }
}

TEST(ProjectIntersection, IterationCapSignalsFailure) {
  const std::vector<ConstraintComponent> parallel{Halfspace(v2(1, 0), 0), Halfspace(v2(1, 1e-9), 0)};
  EXPECT_THROW(project_intersection(v2(5, 5), parallel, 1e-15, 3), NumericalError);
}

TEST(UncertainHalfspace, ZeroRadiusRealizesNominal) {
  const UncertainHalfspace u(v2(1, 0), 1.0, 0.0, 2);
  const LocalConstraint lc({}, {u});
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto c = realize(lc, rng);
    const auto& h = std::get<Halfspace>(c);
    EXPECT_EQ(h.a, v2(1, 0));
    EXPECT_EQ(h.b, 1.0);
  }
}

TEST(UncertainHalfspace, UniformPerturbationLaw) {
  const UncertainHalfspace u(v2(1, 0), 1.0, 1.0, 2);
  Rng rng(2);
  constexpr int n = 100000;
  Vector mean = Vector::Zero(2);
  std::vector<double> d0, d1;
  for (int i = 0; i < n; ++i) {
    const Vector delta = u.draw_delta(rng);
    d0.push_back(delta(0));
    d1.push_back(delta(1));
    mean += std::get<Halfspace>(u.with_delta(delta)).a;
  }
  mean /= n;
  const double sd = std::sqrt(1.0 / 3.0 / n);
  EXPECT_LE(std::abs(mean(0) - 1.0), 3 * sd);
  EXPECT_LE(std::abs(mean(1)), 3 * sd);
  const double ks_crit = 1.628 / std::sqrt(static_cast<double>(n));  // 1% level
  EXPECT_LT(ks_uniform(d0, -1, 1), ks_crit);
  EXPECT_LT(ks_uniform(d1, -1, 1), ks_crit);
}

TEST(UncertainHalfspace, GaussianLawMoments) {
  const UncertainHalfspace u(v2(0, 2), 1.0, 0.5, 1, PerturbationLaw::Gaussian);
  Rng rng(3);
  double s = 0, s2 = 0;
  constexpr int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double d = u.draw_delta(rng)(0);
    s += d;
    s2 += d * d;
  }
  EXPECT_NEAR(s / n, 0.0, 4 * 0.5 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 0.25, 0.01);
  EXPECT_THROW(u.worst_case(), ConfigError);
}

TEST(UncertainHalfspace, WorstCaseMatchesClosedForm) {
  prop::Gen gen(25);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = gen.integer(2, 5);
    const int n = gen.integer(1, static_cast<int>(d));
    const UncertainHalfspace u(gen.vector(d), gen.normal(), gen.uniform(0.0, 0.5), n);
    const auto faces = u.worst_case();
    ASSERT_EQ(faces.size(), std::size_t{1} << n);
    for (int s = 0; s < 200; ++s) {
      const Vector x = gen.vector(d, 2.0);
      const bool all = std::all_of(faces.begin(), faces.end(), [&](const Halfspace& h) { return h.a.dot(x) <= h.b; });
      EXPECT_EQ(all, u.robust_contains(x));
    }
  }
}

TEST(UncertainHalfspace, LiftedPerturbation) {
  // Normal a + P'delta, offset b - s'delta.
  Matrix P(1, 3);
  P << 1.0, 2.0, 0.0;
  const Vector s = (Vector(1) << 0.5).finished();
  const UncertainHalfspace u((Vector(3) << 1, 0, 0).finished(), 2.0, 0.1, P, s);
  const auto h = std::get<Halfspace>(u.with_delta((Vector(1) << 0.1).finished()));
  EXPECT_TRUE(h.a.isApprox((Vector(3) << 1.1, 0.2, 0.0).finished()));
  EXPECT_DOUBLE_EQ(h.b, 2.0 - 0.05);
}

TEST(UncertainHalfspace, VanishingNormal) {
  const UncertainHalfspace u(v2(1, 0), 1.0, 1.0, 2);
  EXPECT_TRUE(std::holds_alternative<FullSpace>(u.with_delta(v2(-1, 0))));
  const UncertainHalfspace neg(v2(1, 0), -1.0, 1.0, 2);
  EXPECT_THROW(neg.with_delta(v2(-1, 0)), NumericalError);
}

TEST(LocalConstraint, WeightsAndSampling) {
  EXPECT_THROW(LocalConstraint({}), ConfigError);
  EXPECT_THROW(LocalConstraint({FullSpace{}, FullSpace{}}, {}, {0.5, 0.6}), ConfigError);
  EXPECT_THROW(LocalConstraint({FullSpace{}}, {}, {0.5, 0.5}), ConfigError);

  const Box b(v2(-1, -1), v2(1, 1));
  const LocalConstraint single({b});
  Rng rng(4);
  for (int i = 0; i < 10; ++i) EXPECT_TRUE(std::holds_alternative<Box>(realize(single, rng)));

  const LocalConstraint lc({Halfspace(v2(1, 0), 0), Halfspace(v2(0, 1), 0), b}, {}, {0.2, 0.3, 0.5});
  std::array<long, 3> hits{};
  constexpr long n = 60000;
  for (long i = 0; i < n; ++i) ++hits[lc.draw_member(rng)];
  const std::array<double, 3> w{0.2, 0.3, 0.5};
  for (int j = 0; j < 3; ++j) EXPECT_LE(std::abs(hits[j] - n * w[j]), 3 * std::sqrt(n * w[j] * (1 - w[j])));
}

TEST(LocalConstraint, WorstCaseSetIncludesTrailing) {
  const UncertainHalfspace u(v2(1, 0), 1.0, 0.1, 2);
  const LocalConstraint lc({Halfspace(v2(0, 1), 3)}, {u}, {}, {Box(v2(-5, -5), v2(5, 5))});
  const auto set = lc.worst_case_set();
  ASSERT_EQ(set.size(), 3u);
  EXPECT_TRUE(std::holds_alternative<Polyhedron>(set[1]));
  EXPECT_TRUE(std::holds_alternative<Box>(set[2]));
}

TEST(EstimateRegularity, SingleHyperplane) {
  const LocalConstraint lc({Hyperplane(v2(1, 1), 1.0)});
  const std::vector<LocalConstraint> lcs{lc, lc, lc};
  const std::vector<ConstraintComponent> X{Hyperplane(v2(1, 1), 1.0)};
  Rng rng(5);
  EXPECT_NEAR(estimate_regularity(lcs, X, rng, v2(-3, -3), v2(3, 3), 500), 1.0, 0.05);
}

TEST(EstimateRegularity, TwoOrthogonalHyperplanes) {
  const LocalConstraint lc({Hyperplane(v2(1, 0), 0.0), Hyperplane(v2(0, 1), 0.0)});
  const std::vector<LocalConstraint> lcs{lc};
  const std::vector<ConstraintComponent> X{Hyperplane(v2(1, 0), 0.0), Hyperplane(v2(0, 1), 0.0)};
  Rng rng(6);
  EXPECT_NEAR(estimate_regularity(lcs, X, rng, v2(-3, -3), v2(3, 3), 500), 2.0, 1e-6);
}

TEST(EstimateRegularity, AllFullSpaceHasNoValidSample) {
  const std::vector<LocalConstraint> lcs{LocalConstraint({FullSpace{}})};
  const std::vector<ConstraintComponent> X{FullSpace{}};
  Rng rng(7);
  EXPECT_THROW(estimate_regularity(lcs, X, rng, v2(-1, -1), v2(1, 1), 50), NumericalError);
}
