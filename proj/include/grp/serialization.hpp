#pragma once

// JSON encoding of the library's value types. Vectors are arrays, matrices
// are arrays of rows, components carry a "type" tag.

#include <string>
#include <vector>

#include "json.hpp"

#include "grp/constraints.hpp"
#include "grp/mpc.hpp"
#include "grp/objective.hpp"
#include "grp/topology.hpp"
#include "grp/types.hpp"

namespace grp::io {

using json = nlohmann::json;

inline json to_json(const Vector& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

inline json to_json(const Matrix& M) {
  json out = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) out.push_back(to_json(Vector(M.row(r).transpose())));
  return out;
}

inline Vector vector_from(const json& j, const std::string& what) {
  require(j.is_array(), what + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), what + ": expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Matrix matrix_from(const json& j, const std::string& what) {
  require(j.is_array() && !j.empty(), what + ": expected a nonempty array of rows");
  const auto cols = j[0].is_array() ? j[0].size() : 0;
  Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    require(j[r].is_array() && j[r].size() == cols, what + ": rows must have equal length");
    M.row(static_cast<Eigen::Index>(r)) = vector_from(j[r], what).transpose();
  }
  return M;
}

inline double number_from(const json& j, const char* key, const std::string& what) {
  require(j.is_object() && j.contains(key) && j.at(key).is_number(),
          what + ": missing numeric field '" + key + "'");
  return j.at(key).get<double>();
}

inline const json& field(const json& j, const char* key, const std::string& what) {
  require(j.is_object() && j.contains(key), what + ": missing field '" + key + "'");
  return j.at(key);
}

// components

inline json to_json(const ConstraintComponent& comp) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Halfspace>) {
          return {{"type", "halfspace"}, {"a", to_json(c.a)}, {"b", c.b}};
        } else if constexpr (std::is_same_v<T, Hyperplane>) {
          return {{"type", "hyperplane"}, {"a", to_json(c.a)}, {"b", c.b}};
        } else if constexpr (std::is_same_v<T, Box>) {
          return {{"type", "box"}, {"lo", to_json(c.lo)}, {"hi", to_json(c.hi)}};
        } else if constexpr (std::is_same_v<T, FullSpace>) {
          return {{"type", "fullspace"}};
        } else {
          json faces = json::array();
          for (const auto& f : c.faces) faces.push_back({{"a", to_json(f.a)}, {"b", f.b}});
          return {{"type", "polyhedron"}, {"faces", faces}};
        }
      },
      comp);
}

inline ConstraintComponent component_from(const json& j) {
  const std::string what = "component";
  const auto& tag = field(j, "type", what);
  require(tag.is_string(), "component: 'type' must be a string");
  const auto type = tag.get<std::string>();
  if (type == "halfspace") return Halfspace(vector_from(field(j, "a", what), what), number_from(j, "b", what));
  if (type == "hyperplane") return Hyperplane(vector_from(field(j, "a", what), what), number_from(j, "b", what));
  if (type == "box") return Box(vector_from(field(j, "lo", what), what), vector_from(field(j, "hi", what), what));
  if (type == "fullspace") return FullSpace{};
  if (type == "polyhedron") {
    const auto& faces = field(j, "faces", what);
    require(faces.is_array(), "polyhedron: 'faces' must be an array");
    std::vector<Halfspace> hs;
    for (const auto& f : faces) hs.emplace_back(vector_from(field(f, "a", what), what), number_from(f, "b", what));
    return Polyhedron(std::move(hs));
  }
  throw ConfigError("component: unknown type '" + type + "'");
}

inline std::vector<ConstraintComponent> components_from(const json& j) {
  require(j.is_array(), "expected an array of components");
  std::vector<ConstraintComponent> out;
  for (const auto& c : j) out.push_back(component_from(c));
  return out;
}

inline json to_json(const std::vector<ConstraintComponent>& comps) {
  json out = json::array();
  for (const auto& c : comps) out.push_back(to_json(c));
  return out;
}

// uncertain halfspaces and local constraints

inline json to_json(const UncertainHalfspace& u) {
  return {{"a", to_json(u.a())},
          {"b", u.b()},
          {"beta", u.beta()},
          {"lift", to_json(u.lift())},
          {"offset_lift", to_json(u.offset_lift())},
          {"law", u.law() == PerturbationLaw::Uniform ? "uniform" : "gaussian"}};
}

inline UncertainHalfspace uncertain_from(const json& j) {
  const std::string what = "uncertain halfspace";
  Vector a = vector_from(field(j, "a", what), what);
  const double b = number_from(j, "b", what);
  const double beta = number_from(j, "beta", what);
  auto law = PerturbationLaw::Uniform;
  if (j.contains("law")) {
    const auto name = j.at("law").get<std::string>();
    if (name == "gaussian") law = PerturbationLaw::Gaussian;
    else require(name == "uniform", "uncertain halfspace: law must be 'uniform' or 'gaussian'");
  }
  if (j.contains("lift")) {
    Matrix lift = matrix_from(j.at("lift"), what);
    Vector s = j.contains("offset_lift") ? vector_from(j.at("offset_lift"), what) : Vector::Zero(lift.rows());
    return UncertainHalfspace(std::move(a), b, beta, std::move(lift), std::move(s), law);
  }
  const int n = j.contains("n_delta") ? j.at("n_delta").get<int>() : static_cast<int>(a.size());
  return UncertainHalfspace(std::move(a), b, beta, n, law);
}

inline json to_json(const LocalConstraint& lc) {
  json unc = json::array();
  for (const auto& u : lc.uncertain()) unc.push_back(to_json(u));
  return {{"deterministic", to_json(lc.deterministic())},
          {"uncertain", unc},
          {"weights", lc.weights()},
          {"trailing", to_json(lc.trailing())}};
}

inline LocalConstraint local_constraint_from(const json& j) {
  require(j.is_object(), "local constraint: expected an object");
  std::vector<ConstraintComponent> det, trailing;
  std::vector<UncertainHalfspace> unc;
  std::vector<double> weights;
  if (j.contains("deterministic")) det = components_from(j.at("deterministic"));
  if (j.contains("trailing")) trailing = components_from(j.at("trailing"));
  if (j.contains("uncertain")) {
    require(j.at("uncertain").is_array(), "local constraint: 'uncertain' must be an array");
    for (const auto& u : j.at("uncertain")) unc.push_back(uncertain_from(u));
  }
  if (j.contains("weights")) weights = j.at("weights").get<std::vector<double>>();
  return LocalConstraint(std::move(det), std::move(unc), std::move(weights), std::move(trailing));
}

// objectives

inline json to_json(const Quadratic& f) {
  return {{"type", "quadratic"}, {"Q", to_json(f.Q())}, {"q", to_json(f.q())}, {"c0", f.c0()}};
}

inline Quadratic quadratic_from(const json& j) {
  const std::string what = "quadratic";
  const double c0 = j.contains("c0") ? number_from(j, "c0", what) : 0.0;
  return Quadratic(matrix_from(field(j, "Q", what), what), vector_from(field(j, "q", what), what), c0);
}

inline json to_json(const MpcObjective& f) {
  return {{"type", "mpc"}, {"A", to_json(f.A)}, {"B", to_json(f.B)}, {"x0", to_json(f.x0)},
          {"T", f.T},      {"z", to_json(f.z)}, {"r", f.r}};
}

// topology

inline json to_json(const Topology& t) {
  json edges = json::array();
  for (const auto& [i, j] : t.edges()) edges.push_back({i, j});
  return {{"m", t.size()}, {"edges", edges}};
}

inline Topology topology_from(const json& j) {
  const int m = field(j, "m", "topology").get<int>();
  std::vector<Edge> edges;
  for (const auto& e : field(j, "edges", "topology")) {
    require(e.is_array() && e.size() == 2, "topology: edges must be [i, j] pairs");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return Topology(m, std::move(edges));
}

inline json to_json(const SelectionMatrix& sel) { return {{"pi", to_json(sel.pi())}}; }

// MPC benchmark

inline json to_json(const MpcInstance& inst) {
  json targets = json::array();
  for (const auto& z : inst.targets) targets.push_back(to_json(z));
  json terminal = json::array();
  for (const auto& t : inst.terminal) terminal.push_back({{"a", to_json(t.a)}, {"b", t.b}, {"beta", t.beta}});
  return {{"A", to_json(inst.A)}, {"B", to_json(inst.B)}, {"x0", to_json(inst.x0)}, {"T", inst.T},
          {"r", inst.r},          {"u_max", inst.u_max},  {"targets", targets},      {"terminal", terminal}};
}

inline MpcInstance mpc_instance_from(const json& j) {
  const std::string what = "mpc instance";
  MpcInstance inst;
  inst.A = matrix_from(field(j, "A", what), what);
  inst.B = vector_from(field(j, "B", what), what);
  inst.x0 = vector_from(field(j, "x0", what), what);
  inst.T = field(j, "T", what).get<int>();
  inst.r = number_from(j, "r", what);
  inst.u_max = number_from(j, "u_max", what);
  for (const auto& z : field(j, "targets", what)) inst.targets.push_back(vector_from(z, what));
  for (const auto& t : field(j, "terminal", what))
    inst.terminal.push_back({vector_from(field(t, "a", what), what), number_from(t, "b", what), number_from(t, "beta", what)});
  inst.validate();
  return inst;
}

inline json to_json(const BaselineResult& r) {
  return {{"solution", to_json(r.solution)},
          {"objective", r.objective},
          {"kkt_residual", r.kkt_residual},
          {"max_halfspace_residual", r.max_halfspace_residual},
          {"box_violation", r.box_violation},
          {"iterations", r.iterations}};
}

}  // namespace grp::io
