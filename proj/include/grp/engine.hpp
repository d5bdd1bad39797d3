#pragma once

// The gossip-based random projection iteration: per tick, one agent wakes and
// averages with a neighbor; both take a local gradient step from the average
// and project onto a randomly realized piece of their constraint set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "grp/constraints.hpp"
#include "grp/objective.hpp"
#include "grp/rng.hpp"
#include "grp/topology.hpp"
#include "grp/types.hpp"

namespace grp {

/// alpha_i(k) = 1 / Gamma_i(k), read after the counter is incremented.
struct Diminishing {};

/// alpha_i(k) = alpha_i.
struct ConstantStep {
  std::vector<double> alpha;
};

using StepsizePolicy = std::variant<Diminishing, ConstantStep>;

inline double stepsize(const StepsizePolicy& policy, int agent, long update_count) {
  if (const auto* c = std::get_if<ConstantStep>(&policy)) return c->alpha.at(agent);
  return 1.0 / static_cast<double>(update_count);
}

struct AgentState {
  Vector x;
  long update_count = 0;
};

/// Everything the engine needs besides the network: per-agent objectives and
/// local constraints, an optional reference solution, the deterministic set X
/// used for the feasibility metric, and the box x_i(0) is drawn from.
struct Problem {
  std::vector<Objective> objectives;
  std::vector<LocalConstraint> constraints;
  std::optional<Vector> reference;
  std::vector<ConstraintComponent> feasible_set;
  Box init_box;

  int size() const { return static_cast<int>(objectives.size()); }
  Eigen::Index dim() const { return init_box.lo.size(); }

  void validate() const {
    require(!objectives.empty(), "problem needs at least one agent");
    require(constraints.size() == objectives.size(), "one local constraint per agent required");
    require(init_box.lo.size() > 0, "initialization box must be set");
    if (reference) require(reference->size() == dim(), "reference has wrong dimension");
  }
};

struct RunStreams {
  Rng events;
  Rng components;
  Rng perturbations;
  Rng init;

  explicit RunStreams(std::uint64_t seed)
      : events(make_stream(seed, Stream::Events)),
        components(make_stream(seed, Stream::Components)),
        perturbations(make_stream(seed, Stream::Perturbations)),
        init(make_stream(seed, Stream::Init)) {}
};

struct RunState {
  long k = 0;
  std::vector<AgentState> agents;
  RunStreams streams;

  explicit RunState(std::uint64_t seed) : streams(seed) {}
};

/// x_i(0) iid uniform in the problem's initialization box.
inline RunState initial_state(const Problem& problem, std::uint64_t seed) {
  problem.validate();
  RunState state(seed);
  const auto d = problem.dim();
  state.agents.resize(problem.size());
  for (auto& agent : state.agents) {
    agent.x.resize(d);
    for (Eigen::Index t = 0; t < d; ++t)
      agent.x(t) = std::uniform_real_distribution<double>(problem.init_box.lo(t), problem.init_box.hi(t))(state.streams.init);
  }
  return state;
}

/// One tick. Agents outside the event keep their iterate; the two paired
/// agents share v = (x_I + x_J)/2 but realize their components independently.
inline void step(RunState& state, const GossipEvent& event, const Problem& problem,
                 const StepsizePolicy& policy) {
  require(event.k == state.k + 1, "event index must be state.k + 1");
  require(event.waker != event.peer, "event needs two distinct agents");
  const Vector v = 0.5 * (state.agents[event.waker].x + state.agents[event.peer].x);
  for (int i : {event.waker, event.peer}) {
    AgentState& agent = state.agents[i];
    ++agent.update_count;
    const double alpha = stepsize(policy, i, agent.update_count);
    Vector x = v - alpha * gradient(problem.objectives[i], v);
    const LocalConstraint& lc = problem.constraints[i];
    x = project(x, realize(lc, state.streams.components, state.streams.perturbations));
    for (const auto& comp : lc.trailing()) x = project(x, comp);
    agent.x = std::move(x);
  }
  state.k = event.k;
}

struct TraceRecord {
  long k = 0;
  std::optional<double> avg_sq_error;  // (1/m) sum_i ||x_i - x*||^2
  double consensus = 0.0;              // sum_i ||x_i - mean||^2
  double feasibility = 0.0;            // max_i dist(x_i, X)
};

inline TraceRecord metrics(const RunState& state, const std::optional<Vector>& reference,
                           std::span<const ConstraintComponent> feasible_set, double oracle_tol = 1e-10) {
  TraceRecord rec;
  rec.k = state.k;
  const auto m = static_cast<double>(state.agents.size());
  Vector mean = Vector::Zero(state.agents.front().x.size());
  for (const auto& a : state.agents) mean += a.x;
  mean /= m;
  double err = 0.0;
  for (const auto& a : state.agents) {
    rec.consensus += (a.x - mean).squaredNorm();
    if (reference) err += (a.x - *reference).squaredNorm();
    if (!feasible_set.empty())
      rec.feasibility = std::max(rec.feasibility, dist_to_intersection(a.x, feasible_set, oracle_tol));
  }
  if (reference) rec.avg_sq_error = err / m;
  return rec;
}

struct CounterSample {
  long k = 0;
  int agent = 0;
  long count = 0;
};

struct RunOptions {
  long n_iters = 1;
  long record_every = 100;
  long counters_every = 0;  // 0 disables counter sampling
};

struct RunResult {
  std::vector<TraceRecord> trace;
  std::vector<CounterSample> counters;
  RunState final_state;
};

/// A full seeded run. Records metrics every `record_every` ticks and at the
/// final tick.
inline RunResult run(const Problem& problem, const Topology& topology, const SelectionMatrix& sel,
                     const StepsizePolicy& policy, const RunOptions& options, std::uint64_t seed) {
  problem.validate();
  require(topology.size() == problem.size() && sel.size() == problem.size(),
          "topology, selection and problem disagree on the agent count");
  require(options.n_iters >= 1 && options.record_every >= 1, "n_iters and record_every must be >= 1");
  if (const auto* c = std::get_if<ConstantStep>(&policy)) {
    require(static_cast<int>(c->alpha.size()) == problem.size(), "one constant stepsize per agent required");
    for (double a : c->alpha) require(a > 0.0, "constant stepsizes must be positive");
  }

  RunResult result{{}, {}, initial_state(problem, seed)};
  RunState& state = result.final_state;
  GossipSampler sampler(sel);
  result.trace.reserve(static_cast<std::size_t>(options.n_iters / options.record_every + 1));
  for (long k = 1; k <= options.n_iters; ++k) {
    step(state, sampler(state.streams.events, k), problem, policy);
    if (options.counters_every > 0 && k % options.counters_every == 0)
      for (int i = 0; i < problem.size(); ++i) result.counters.push_back({k, i, state.agents[i].update_count});
    if (k % options.record_every == 0 || k == options.n_iters)
      result.trace.push_back(metrics(state, problem.reference, problem.feasible_set));
  }
  return result;
}

struct EnvelopeReport {
  bool applicable = true;
  long samples = 0;
  long violations = 0;
  long violations_after_reference = 0;  // violations at k >= reference_k
  std::optional<long> k_tilde;          // smallest sampled k after the last violation
};

/// Checks the long-run envelopes of the diminishing stepsize 1/Gamma_i(k):
///   alpha_i(k) <= 2 / (k gamma_i)  and
///   |alpha_i(k) - 1/(k gamma_i)| <= 2 / (k^{3/2 - q} (1 + pi_min)^2).
/// Agents that have not updated yet count as violations.
inline EnvelopeReport stepsize_envelope_check(std::span<const CounterSample> samples, const Vector& gammas,
                                              double q, double pi_min, const StepsizePolicy& policy,
                                              long reference_k = 0) {
  EnvelopeReport report;
  if (std::holds_alternative<ConstantStep>(policy)) {
    report.applicable = false;
    return report;
  }
  require(q > 0.0 && q < 0.5, "q must lie in (0, 1/2)");
  std::vector<CounterSample> sorted(samples.begin(), samples.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
  const double slack = std::pow(1.0 + pi_min, 2);
  std::optional<long> last_bad;
  for (const auto& s : sorted) {
    require(s.k >= 1 && s.agent >= 0 && s.agent < gammas.size(), "invalid counter sample");
    const double k = static_cast<double>(s.k);
    const double g = gammas(s.agent);
    bool ok = s.count > 0;
    if (ok) {
      const double alpha = 1.0 / static_cast<double>(s.count);
      ok = alpha <= 2.0 / (k * g) && std::abs(alpha - 1.0 / (k * g)) <= 2.0 / (std::pow(k, 1.5 - q) * slack);
    }
    ++report.samples;
    if (!ok) {
      ++report.violations;
      if (s.k >= reference_k) ++report.violations_after_reference;
      last_bad = s.k;
    }
  }
  for (const auto& s : sorted) {
    if (!last_bad || s.k > *last_bad) {
      report.k_tilde = s.k;
      break;
    }
  }
  return report;
}

}  // namespace grp
