#pragma once

// Dinic's blocking-flow max-flow on real capacities, with a residual
// reachability min-cut certificate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

#include "robstat/error.hpp"

namespace robstat {

inline constexpr double kFlowTol = 1e-12;

struct FlowEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  double capacity = 0.0;
};

struct FlowNetwork {
  std::size_t num_nodes = 0;
  std::size_t source = 0;
  std::size_t sink = 0;
  std::vector<FlowEdge> edges;

  std::size_t add_edge(std::size_t from, std::size_t to, double capacity) {
    edges.push_back({from, to, capacity});
    return edges.size() - 1;
  }
};

struct FlowResult {
  double value = 0.0;
  std::vector<double> flow;           // per input edge
  std::vector<bool> source_side;      // nodes reachable from the source in the residual graph
};

namespace detail {

class Dinic {
 public:
  explicit Dinic(const FlowNetwork& net) : n_(net.num_nodes), adj_(net.num_nodes) {
    for (const auto& e : net.edges) {
      adj_[e.from].push_back(arcs_.size());
      arcs_.push_back({e.to, e.capacity});
      adj_[e.to].push_back(arcs_.size());
      arcs_.push_back({e.from, 0.0});
    }
  }

  double run(std::size_t s, std::size_t t) {
    double total = 0.0;
    while (bfs(s, t)) {
      next_.assign(n_, 0);
      while (true) {
        const double pushed = dfs(s, t, std::numeric_limits<double>::infinity());
        if (pushed <= kFlowTol) break;
        total += pushed;
      }
    }
    return total;
  }

  // Flow on input edge k (arc 2k carries it, arc 2k+1 is its reverse).
  double flow_on(std::size_t k) const { return arcs_[2 * k + 1].residual; }

  std::vector<bool> reachable(std::size_t s) const {
    std::vector<bool> seen(n_, false);
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t a : adj_[u]) {
        if (arcs_[a].residual > kFlowTol && !seen[arcs_[a].to]) {
          seen[arcs_[a].to] = true;
          stack.push_back(arcs_[a].to);
        }
      }
    }
    return seen;
  }

 private:
  struct Arc {
    std::size_t to;
    double residual;
  };

  bool bfs(std::size_t s, std::size_t t) {
    level_.assign(n_, -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t a : adj_[u]) {
        if (arcs_[a].residual > kFlowTol && level_[arcs_[a].to] < 0) {
          level_[arcs_[a].to] = level_[u] + 1;
          q.push(arcs_[a].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(std::size_t u, std::size_t t, double limit) {
    if (u == t) return limit;
    for (; next_[u] < adj_[u].size(); ++next_[u]) {
      const std::size_t a = adj_[u][next_[u]];
      const std::size_t v = arcs_[a].to;
      if (arcs_[a].residual <= kFlowTol || level_[v] != level_[u] + 1) continue;
      const double pushed = dfs(v, t, std::min(limit, arcs_[a].residual));
      if (pushed > kFlowTol) {
        arcs_[a].residual -= pushed;
        arcs_[a ^ 1].residual += pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::size_t n_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Arc> arcs_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
};

}  // namespace detail

inline FlowResult max_flow(const FlowNetwork& net) {
  require(net.source < net.num_nodes && net.sink < net.num_nodes, "flow network terminal out of range");
  require(net.source != net.sink, "flow network source and sink must differ");
  for (const auto& e : net.edges) {
    require(e.from < net.num_nodes && e.to < net.num_nodes, "flow edge endpoint out of range");
    require(std::isfinite(e.capacity) && e.capacity >= 0.0, "flow capacities must be finite and non-negative");
  }
  detail::Dinic dinic(net);
  FlowResult res;
  res.value = dinic.run(net.source, net.sink);
  res.flow.resize(net.edges.size());
  for (std::size_t k = 0; k < net.edges.size(); ++k) res.flow[k] = dinic.flow_on(k);
  res.source_side = dinic.reachable(net.source);
  return res;
}

/// Capacity of the cut induced by `source_side`.
inline double cut_capacity(const FlowNetwork& net, const std::vector<bool>& source_side) {
  double cap = 0.0;
  for (const auto& e : net.edges) {
    if (source_side[e.from] && !source_side[e.to]) cap += e.capacity;
  }
  return cap;
}

}  // namespace robstat
