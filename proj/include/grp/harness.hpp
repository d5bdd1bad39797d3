#pragma once

// Experiment configuration, Monte-Carlo orchestration and report emission.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"

#include "grp/analysis.hpp"
#include "grp/constraints.hpp"
#include "grp/engine.hpp"
#include "grp/mpc.hpp"
#include "grp/objective.hpp"
#include "grp/rng.hpp"
#include "grp/serialization.hpp"
#include "grp/topology.hpp"
#include "grp/types.hpp"

namespace grp {

using json = nlohmann::json;

struct PolicyConfig {
  std::string kind = "diminishing";  // diminishing | constant | balanced
  std::vector<double> alpha;         // constant: one per agent, or one shared value
  double nu = 0.0;                   // balanced: alpha_i = nu / gamma_i
};

struct BoundConfig {
  std::optional<double> c;  // unset: Monte-Carlo estimate
  std::optional<double> Gf;  // unset: certified bound from the objectives
  long regularity_samples = 2000;
  std::string rho = "lemma";  // lemma | proposition
};

struct RunConfig {
  std::string topology = "clique";
  int m = 4;
  std::optional<Matrix> pi;  // unset: uniform over neighbors
  PolicyConfig policy;
  long n_iters = 40000;
  long n_runs = 100;
  std::uint64_t seed = 1;
  long record_every = 100;
  json problem = {{"kind", "mpc"}, {"instance_seed", 1}};
  BoundConfig bound;

  void validate() const {
    parse_topology_kind(topology);
    require(m >= 2, "m must be >= 2");
    require(n_iters >= 1, "n_iters must be >= 1");
    require(n_runs >= 1, "n_runs must be >= 1");
    require(record_every >= 1, "record_every must be >= 1");
    require(policy.kind == "diminishing" || policy.kind == "constant" || policy.kind == "balanced",
            "policy.kind must be diminishing, constant or balanced");
    if (policy.kind == "constant") {
      require(policy.alpha.size() == 1 || policy.alpha.size() == static_cast<std::size_t>(m),
              "policy.alpha needs one value or one per agent");
      for (double a : policy.alpha) require(std::isfinite(a) && a > 0.0, "policy.alpha entries must be positive");
    }
    if (policy.kind == "balanced") require(policy.nu > 0.0 && policy.nu < 1.0, "policy.nu must lie in (0, 1)");
    require(problem.is_object() && problem.contains("kind") && problem.at("kind").is_string(),
            "problem.kind must be given");
    const auto kind = problem.at("kind").get<std::string>();
    require(kind == "mpc" || kind == "quadratic", "problem.kind must be mpc or quadratic");
    if (bound.c) require(*bound.c > 0.0, "bound.c must be positive");
    if (bound.Gf) require(*bound.Gf > 0.0, "bound.Gf must be positive");
    require(bound.regularity_samples >= 1, "bound.regularity_samples must be >= 1");
    require(bound.rho == "lemma" || bound.rho == "proposition", "bound.rho must be lemma or proposition");
  }
};

inline json to_json(const RunConfig& cfg) {
  json policy = {{"kind", cfg.policy.kind}};
  if (cfg.policy.kind == "constant") policy["alpha"] = cfg.policy.alpha;
  if (cfg.policy.kind == "balanced") policy["nu"] = cfg.policy.nu;
  json bound = {{"c", cfg.bound.c ? json(*cfg.bound.c) : json("estimate")},
                {"Gf", cfg.bound.Gf ? json(*cfg.bound.Gf) : json(nullptr)},
                {"regularity_samples", cfg.bound.regularity_samples},
                {"rho", cfg.bound.rho}};
  json topology = {{"kind", cfg.topology}, {"m", cfg.m}};
  if (cfg.pi) topology["pi"] = io::to_json(*cfg.pi);
  return {{"topology", topology},   {"policy", policy},         {"n_iters", cfg.n_iters},
          {"n_runs", cfg.n_runs},   {"seed", cfg.seed},         {"record_every", cfg.record_every},
          {"problem", cfg.problem}, {"bound", bound}};
}

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; });
    require(known, where + ": unknown key '" + key + "'");
  }
}

}  // namespace detail

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig config_from_json(const json& j) {
  require(j.is_object(), "config must be a JSON object");
  detail::reject_unknown(j, {"topology", "policy", "n_iters", "n_runs", "seed", "record_every", "problem", "bound"},
                         "config");
  RunConfig cfg;
  if (j.contains("topology")) {
    const auto& t = j.at("topology");
    detail::reject_unknown(t, {"kind", "m", "pi"}, "topology");
    if (t.contains("kind")) cfg.topology = t.at("kind").get<std::string>();
    if (t.contains("m")) cfg.m = t.at("m").get<int>();
    if (t.contains("pi")) cfg.pi = io::matrix_from(t.at("pi"), "topology.pi");
  }
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    detail::reject_unknown(p, {"kind", "alpha", "nu"}, "policy");
    if (p.contains("kind")) cfg.policy.kind = p.at("kind").get<std::string>();
    if (p.contains("alpha")) {
      cfg.policy.alpha = p.at("alpha").is_array() ? p.at("alpha").get<std::vector<double>>()
                                                  : std::vector<double>{p.at("alpha").get<double>()};
    }
    if (p.contains("nu")) cfg.policy.nu = p.at("nu").get<double>();
  }
  if (j.contains("n_iters")) cfg.n_iters = j.at("n_iters").get<long>();
  if (j.contains("n_runs")) cfg.n_runs = j.at("n_runs").get<long>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("record_every")) cfg.record_every = j.at("record_every").get<long>();
  if (j.contains("problem")) cfg.problem = j.at("problem");
  if (j.contains("bound")) {
    const auto& b = j.at("bound");
    detail::reject_unknown(b, {"c", "Gf", "regularity_samples", "rho"}, "bound");
    if (b.contains("c")) {
      if (b.at("c").is_string()) require(b.at("c") == "estimate", "bound.c must be a number or \"estimate\"");
      else cfg.bound.c = b.at("c").get<double>();
    }
    if (b.contains("Gf") && !b.at("Gf").is_null()) cfg.bound.Gf = b.at("Gf").get<double>();
    if (b.contains("regularity_samples")) cfg.bound.regularity_samples = b.at("regularity_samples").get<long>();
    if (b.contains("rho")) cfg.bound.rho = b.at("rho").get<std::string>();
  }
  cfg.validate();
  return cfg;
}

/// Everything a run needs, built once from a config.
struct Setup {
  RunConfig config;
  Topology topology;
  SelectionMatrix selection;
  Problem problem;
  StepsizePolicy policy;
  std::optional<MpcInstance> instance;
  std::optional<BaselineResult> baseline;
  double set_radius = 0.0;  // radius of a ball containing the feasible set
};

namespace detail {

inline Topology make_topology(const RunConfig& cfg) {
  return build_topology(parse_topology_kind(cfg.topology), cfg.m);
}

inline SelectionMatrix make_selection(const RunConfig& cfg, const Topology& topo) {
  return cfg.pi ? SelectionMatrix(topo, *cfg.pi) : uniform_selection(topo);
}

inline StepsizePolicy make_policy(const RunConfig& cfg, const SelectionMatrix& sel) {
  if (cfg.policy.kind == "diminishing") return Diminishing{};
  if (cfg.policy.kind == "balanced") {
    const Vector g = gamma(sel);
    return ConstantStep{gamma_alpha_balance(std::vector<double>(g.begin(), g.end()), cfg.policy.nu)};
  }
  auto alpha = cfg.policy.alpha;
  if (alpha.size() == 1) alpha.assign(static_cast<std::size_t>(cfg.m), alpha.front());
  return ConstantStep{std::move(alpha)};
}

inline void fill_quadratic_problem(Setup& s, bool solve_reference) {
  const json& p = s.config.problem;
  const std::string what = "problem";
  reject_unknown(p, {"kind", "objectives", "constraints", "feasible_set", "reference", "init_box", "set_radius"},
                 what);
  const int m = s.config.m;
  const auto& objs = io::field(p, "objectives", what);
  require(objs.is_array() && static_cast<int>(objs.size()) == m, "problem.objectives needs one entry per agent");
  for (const auto& o : objs) s.problem.objectives.emplace_back(io::quadratic_from(o));
  const auto& cons = io::field(p, "constraints", what);
  require(cons.is_array() && (cons.size() == 1 || static_cast<int>(cons.size()) == m),
          "problem.constraints needs one entry or one per agent");
  for (int i = 0; i < m; ++i) s.problem.constraints.push_back(io::local_constraint_from(cons[cons.size() == 1 ? 0 : i]));

  const auto d = as_quadratic(s.problem.objectives.front()).dim();
  for (const auto& f : s.problem.objectives) require(as_quadratic(f).dim() == d, "objectives disagree on dimension");

  s.set_radius = io::number_from(p, "set_radius", what);
  require(s.set_radius > 0.0, "problem.set_radius must be positive");
  if (p.contains("init_box")) {
    const auto& b = p.at("init_box");
    s.problem.init_box = Box(io::vector_from(io::field(b, "lo", what), what), io::vector_from(io::field(b, "hi", what), what));
  } else {
    s.problem.init_box = Box::cube(d, s.set_radius);
  }
  require(s.problem.init_box.lo.size() == d, "problem.init_box has the wrong dimension");

  if (p.contains("feasible_set")) {
    s.problem.feasible_set = io::components_from(p.at("feasible_set"));
  } else {
    for (const auto& lc : s.problem.constraints) {
      auto wc = lc.worst_case_set();
      s.problem.feasible_set.insert(s.problem.feasible_set.end(), wc.begin(), wc.end());
    }
  }

  if (p.contains("reference") && !p.at("reference").is_string()) {
    s.problem.reference = io::vector_from(p.at("reference"), "problem.reference");
  } else if (solve_reference) {
    Quadratic total = as_quadratic(s.problem.objectives.front());
    for (int i = 1; i < m; ++i) total = total + as_quadratic(s.problem.objectives[i]);
    s.baseline = solve_projected_gradient(total, s.problem.feasible_set, Vector::Zero(d));
    s.problem.reference = s.baseline->solution;
  }
}

inline void fill_mpc_problem(Setup& s, bool solve_reference) {
  const json& p = s.config.problem;
  reject_unknown(p, {"kind", "instance_seed", "instance"}, "problem");
  if (p.contains("instance")) {
    s.instance = io::mpc_instance_from(p.at("instance"));
    require(s.instance->agents() == s.config.m, "problem.instance must have m targets");
  } else {
    const auto seed = p.contains("instance_seed") ? p.at("instance_seed").get<std::uint64_t>() : std::uint64_t{1};
    s.instance = default_instance(s.config.m, seed);
  }
  s.problem = grp_problem(*s.instance);
  s.set_radius = s.instance->u_max * std::sqrt(static_cast<double>(s.instance->T));
  if (solve_reference) {
    s.baseline = solve_baseline(*s.instance);
    s.problem.reference = s.baseline->solution;
  }
}

}  // namespace detail

inline Setup build_setup(const RunConfig& cfg, bool solve_reference = true) {
  cfg.validate();
  Topology topo = detail::make_topology(cfg);
  SelectionMatrix sel = detail::make_selection(cfg, topo);
  StepsizePolicy policy = detail::make_policy(cfg, sel);
  Setup s{cfg, std::move(topo), std::move(sel), {}, std::move(policy), {}, {}, 0.0};
  if (cfg.problem.at("kind") == "mpc") detail::fill_mpc_problem(s, solve_reference);
  else detail::fill_quadratic_problem(s, solve_reference);
  s.problem.validate();
  return s;
}

// ---- CSV ----

struct MetricsRow {
  long run_id = 0;
  long k = 0;
  std::optional<double> avg_sq_error;
  double consensus = 0.0;
  double feasibility = 0.0;
};

inline constexpr const char* kCsvHeader = "run_id,k,avg_sq_error,consensus,feasibility";

/// A missing reference leaves avg_sq_error empty.
inline std::string format_row(const MetricsRow& row) {
  const std::string err = row.avg_sq_error ? fmt::format("{:.17g}", *row.avg_sq_error) : std::string{};
  return fmt::format("{},{},{},{:.17g},{:.17g}\n", row.run_id, row.k, err, row.consensus, row.feasibility);
}

inline void write_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << format_row(r);
}

inline std::string to_csv(const std::vector<MetricsRow>& rows) {
  std::string s = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) s += format_row(r);
  return s;
}

// ---- runs ----

inline std::uint64_t run_seed(const RunConfig& cfg, long run_id) {
  return derive_seed(cfg.seed, static_cast<std::uint64_t>(run_id));
}

inline std::vector<MetricsRow> run_single(const Setup& s, long run_id) {
  require(run_id >= 0, "run_id must be >= 0");
  const RunOptions opts{s.config.n_iters, s.config.record_every, 0};
  const auto result = run(s.problem, s.topology, s.selection, s.policy, opts, run_seed(s.config, run_id));
  std::vector<MetricsRow> rows;
  rows.reserve(result.trace.size());
  for (const auto& t : result.trace) rows.push_back({run_id, t.k, t.avg_sq_error, t.consensus, t.feasibility});
  return rows;
}

/// n_runs independent runs on up to `threads` workers, concatenated in
/// run_id order.
inline std::vector<MetricsRow> run_monte_carlo(const Setup& s, unsigned threads = 0) {
  const long n = s.config.n_runs;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<long>(threads, n));
  std::vector<std::vector<MetricsRow>> per_run(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(threads);
  std::atomic<long> next{0};
  auto worker = [&](unsigned w) {
    try {
      for (long id = next++; id < n; id = next++) per_run[static_cast<std::size_t>(id)] = run_single(s, id);
    } catch (...) {
      errors[w] = std::current_exception();
      next = n;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker, w);
  worker(0);
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<MetricsRow> rows;
  for (auto& r : per_run) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

// ---- analysis reports ----

inline RhoVariant rho_variant(const RunConfig& cfg) {
  return cfg.bound.rho == "proposition" ? RhoVariant::Proposition : RhoVariant::Lemma;
}

/// Bound inputs from the problem: per-agent sigma, L from the objective
/// Hessians, Gf the largest certified gradient bound over the set radius,
/// c given or estimated by sampling the initialization box.
inline BoundInputs bound_inputs(const Setup& s) {
  const auto* constant = std::get_if<ConstantStep>(&s.policy);
  require(constant != nullptr, "bounds need constant stepsizes (policy.kind constant or balanced)");
  BoundInputs in;
  in.m = s.problem.size();
  in.alpha = constant->alpha;
  const Vector g = gamma(s.selection);
  in.gamma.assign(g.begin(), g.end());
  in.lambda = lambda2(mean_matrix(s.selection));
  double gf = 0.0;
  for (const auto& f : s.problem.objectives) {
    const auto k = constants(as_quadratic(f), s.set_radius);
    in.sigma.push_back(k.sigma);
    in.L.push_back(k.L);
    gf = std::max(gf, k.Gf);
  }
  in.Gf = s.config.bound.Gf.value_or(gf);
  if (s.config.bound.c) {
    in.c = *s.config.bound.c;
  } else {
    Rng rng(derive_seed(s.config.seed, 0xc0ffee));
    in.c = estimate_regularity(s.problem.constraints, s.problem.feasible_set, rng, s.problem.init_box.lo,
                               s.problem.init_box.hi, s.config.bound.regularity_samples);
  }
  return in;
}

inline json check_report(const BoundInputs& in) {
  const auto r = check_assumption4(in);
  json agents = json::array();
  for (int i = 0; i < in.m; ++i) {
    agents.push_back({{"agent", i},
                      {"rho", r.rho[i]},
                      {"gamma_rho_minus_delta_over_m", in.gamma[i] * r.rho[i] - r.delta_ga / in.m},
                      {"ok_a", static_cast<bool>(r.ok_a[i])},
                      {"ok_b", static_cast<bool>(r.ok_b[i])}});
  }
  return {{"ok", r.ok()}, {"delta_gamma_alpha", r.delta_ga}, {"agents", agents}};
}

inline json bound_report(const BoundInputs& in, RhoVariant variant) {
  json rho_lemma = json::array(), rho_prop = json::array();
  for (int i = 0; i < in.m; ++i) {
    rho_lemma.push_back(rho(in, i, RhoVariant::Lemma));
    rho_prop.push_back(rho(in, i, RhoVariant::Proposition));
  }
  json out = {{"m", in.m},
              {"lambda", in.lambda},
              {"gamma", in.gamma},
              {"alpha", in.alpha},
              {"sigma", in.sigma},
              {"L", in.L},
              {"c", in.c},
              {"Gf", in.Gf},
              {"rho_variant", variant == RhoVariant::Lemma ? "lemma" : "proposition"},
              {"rho_lemma", rho_lemma},
              {"rho_proposition", rho_prop},
              {"delta_gamma_alpha", delta_gamma_alpha(in)},
              {"assumption4", check_report(in)}};
  try {
    const auto e = error_bound(in, variant);
    out["error_bound"] = {{"q", e.q},
                          {"C", e.C},
                          {"network_term", e.network_term},
                          {"stepsize_term", e.stepsize_term},
                          {"asymmetry_term", e.asymmetry_term},
                          {"value", e.value}};
  } catch (const NumericalError& err) {
    out["error_bound"] = {{"error", err.what()}};
  }
  try {
    const auto d = disagreement_bound(in, variant);
    out["disagreement_bound"] = {{"C", d.C}, {"value", d.value}};
  } catch (const NumericalError& err) {
    out["disagreement_bound"] = {{"error", err.what()}};
  }
  return out;
}

}  // namespace grp
