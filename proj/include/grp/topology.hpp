#pragma once

// Communication graphs, the neighbor-selection law, gossip event sampling and
// the spectral quantities of the expected mixing matrix.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grp/linalg.hpp"
#include "grp/rng.hpp"
#include "grp/types.hpp"

namespace grp {

enum class TopologyKind { Clique, Cycle, Star };

inline std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::Clique: return "clique";
    case TopologyKind::Cycle: return "cycle";
    case TopologyKind::Star: return "star";
  }
  return "?";
}

inline TopologyKind parse_topology_kind(std::string_view name) {
  if (name == "clique") return TopologyKind::Clique;
  if (name == "cycle") return TopologyKind::Cycle;
  if (name == "star") return TopologyKind::Star;
  throw ConfigError("unknown topology kind '" + std::string(name) + "'");
}

using Edge = std::pair<int, int>;

/// Undirected connected graph on agents 0..m-1. Edges are stored normalized
/// (first < second), sorted and deduplicated.
class Topology {
 public:
  Topology(int m, std::vector<Edge> edges) : m_(m), neighbors_(m > 0 ? m : 0) {
    require(m >= 2, "topology needs at least 2 agents");
    for (auto& [i, j] : edges) {
      require(i >= 0 && i < m && j >= 0 && j < m, "edge endpoint out of range");
      require(i != j, "self-loops are not allowed");
      if (i > j) std::swap(i, j);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);
    for (const auto& [i, j] : edges_) {
      neighbors_[i].push_back(j);
      neighbors_[j].push_back(i);
    }
    for (auto& list : neighbors_) std::sort(list.begin(), list.end());
    require(connected(), "topology is not connected");
  }

  int size() const { return m_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return neighbors_.at(i); }
  int degree(int i) const { return static_cast<int>(neighbors_.at(i).size()); }

  bool has_edge(int i, int j) const {
    if (i == j || i < 0 || j < 0 || i >= m_ || j >= m_) return false;
    const auto& list = neighbors_[i];
    return std::binary_search(list.begin(), list.end(), j);
  }

 private:
  bool connected() const {
    std::vector<char> seen(m_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int visited = 1;
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      for (int j : neighbors_[i]) {
        if (!seen[j]) {
          seen[j] = 1;
          ++visited;
          stack.push_back(j);
        }
      }
    }
    return visited == m_;
  }

  int m_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
};

/// Star topologies use agent 0 as the center.
inline Topology build_topology(TopologyKind kind, int m) {
  std::vector<Edge> edges;
  switch (kind) {
    case TopologyKind::Clique:
      require(m >= 2, "clique needs m >= 2");
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) edges.emplace_back(i, j);
      break;
    case TopologyKind::Cycle:
      require(m >= 2, "cycle needs m >= 2");
      for (int i = 0; i < m; ++i) edges.emplace_back(i, (i + 1) % m);
      break;
    case TopologyKind::Star:
      require(m >= 3, "star needs m >= 3");
      for (int i = 1; i < m; ++i) edges.emplace_back(0, i);
      break;
  }
  return Topology(m, std::move(edges));
}

/// Row-stochastic neighbor-selection probabilities pi_ij, supported on edges.
class SelectionMatrix {
 public:
  SelectionMatrix(const Topology& topology, Matrix pi) : pi_(std::move(pi)) {
    const int m = topology.size();
    require(pi_.rows() == m && pi_.cols() == m, "selection matrix must be m x m");
    for (int i = 0; i < m; ++i) {
      double row = 0.0;
      for (int j = 0; j < m; ++j) {
        const double p = pi_(i, j);
        require(std::isfinite(p) && p >= 0.0, "selection probabilities must be nonnegative");
        require(p == 0.0 || topology.has_edge(i, j),
                "selection probability on a non-edge (" + std::to_string(i) + "," +
                    std::to_string(j) + ")");
        row += p;
      }
      require(std::abs(row - 1.0) <= 1e-12, "selection row " + std::to_string(i) + " does not sum to 1");
    }
  }

  int size() const { return static_cast<int>(pi_.rows()); }
  const Matrix& pi() const { return pi_; }
  double operator()(int i, int j) const { return pi_(i, j); }

  /// Smallest positive entry (the minimum over edges).
  double min_positive() const {
    double best = 1.0;
    for (Eigen::Index i = 0; i < pi_.size(); ++i)
      if (pi_.data()[i] > 0.0) best = std::min(best, pi_.data()[i]);
    return best;
  }

 private:
  Matrix pi_;
};

inline SelectionMatrix uniform_selection(const Topology& topology) {
  const int m = topology.size();
  Matrix pi = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    const double p = 1.0 / topology.degree(i);
    for (int j : topology.neighbors(i)) pi(i, j) = p;
  }
  return SelectionMatrix(topology, std::move(pi));
}

struct GossipEvent {
  long k = 1;
  int waker = 0;
  int peer = 1;
};

/// Draws tick events: the waker is uniform over agents, the peer comes from
/// the waker's row of pi. Per-row distributions are built once.
class GossipSampler {
 public:
  explicit GossipSampler(const SelectionMatrix& sel) : m_(sel.size()), agent_(0, sel.size() - 1) {
    rows_.reserve(m_);
    for (int i = 0; i < m_; ++i) {
      std::vector<double> w(m_);
      for (int j = 0; j < m_; ++j) w[j] = sel(i, j);
      rows_.emplace_back(w.begin(), w.end());
    }
  }

  GossipEvent operator()(Rng& rng, long k) {
    GossipEvent e;
    e.k = k;
    e.waker = agent_(rng);
    e.peer = rows_[e.waker](rng);
    return e;
  }

  int size() const { return m_; }

 private:
  int m_;
  std::uniform_int_distribution<int> agent_;
  std::vector<std::discrete_distribution<int>> rows_;
};

inline GossipEvent sample_event(const SelectionMatrix& sel, Rng& rng, long k) {
  GossipSampler sampler(sel);
  return sampler(rng, k);
}

/// W(k) = I - (1/2) u u' with u = e_waker - e_peer.
inline Matrix mix_matrix(const GossipEvent& event, int m) {
  require(event.waker != event.peer, "gossip event needs two distinct agents");
  require(event.waker >= 0 && event.waker < m && event.peer >= 0 && event.peer < m,
          "gossip event agent out of range");
  Matrix w = Matrix::Identity(m, m);
  w(event.waker, event.waker) = 0.5;
  w(event.peer, event.peer) = 0.5;
  w(event.waker, event.peer) = 0.5;
  w(event.peer, event.waker) = 0.5;
  return w;
}

/// Expected mixing matrix W̄ = I - (1/2m) sum_ij pi_ij (e_i - e_j)(e_i - e_j)'.
inline Matrix mean_matrix(const SelectionMatrix& sel) {
  const int m = sel.size();
  Matrix wbar = Matrix::Identity(m, m);
  const double scale = 1.0 / (2.0 * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double p = sel(i, j);
      if (p == 0.0) continue;
      const double w = scale * p;
      wbar(i, i) -= w;
      wbar(j, j) -= w;
      wbar(i, j) += w;
      wbar(j, i) += w;
    }
  }
  return wbar;
}

/// Second largest eigenvalue of a symmetric, doubly stochastic, PSD W̄, i.e.
/// the largest eigenvalue of W̄ - 11'/m.
inline double lambda2(const Matrix& wbar) {
  require(wbar.rows() == wbar.cols() && wbar.rows() >= 2, "W̄ must be square with m >= 2");
  const double m = static_cast<double>(wbar.rows());
  auto apply = [&](const Vector& v) -> Vector {
    Vector w = wbar * v;
    w.array() -= v.sum() / m;
    return w;
  };
  const auto block = std::min<Eigen::Index>(wbar.rows() - 1, 8);
  auto result = linalg::block_power_iteration(apply, linalg::default_start_block(wbar.rows(), block), true);
  return std::max(0.0, result.eigenvalue);
}

/// Per-agent update probability gamma_i = 1/m + (1/m) sum_{j in N(i)} pi_ji.
inline Vector gamma(const SelectionMatrix& sel) {
  const int m = sel.size();
  Vector g(m);
  for (int i = 0; i < m; ++i) {
    double incoming = 0.0;
    for (int j = 0; j < m; ++j) incoming += sel(j, i);
    g(i) = (1.0 + incoming) / m;
  }
  return g;
}

}  // namespace grp
