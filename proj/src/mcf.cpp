#include "mma/mcf.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "mma/core.hpp"

namespace mma::mcf {

int McfProblem::add_node(std::int64_t b) {
  supply.push_back(b);
  return node_count() - 1;
}

int McfProblem::add_arc(int tail, int head, std::int64_t capacity, double cost) {
  arcs.push_back({tail, head, capacity, cost});
  return static_cast<int>(arcs.size()) - 1;
}

void McfProblem::validate() const {
  std::int64_t total = 0;
  for (auto b : supply) total += b;
  if (total != 0) throw InvalidInput("mcf: supplies sum to " + std::to_string(total));
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    const auto& arc = arcs[a];
    if (arc.tail < 0 || arc.tail >= node_count() || arc.head < 0 || arc.head >= node_count())
      throw InvalidInput("mcf: arc " + std::to_string(a) + " has a bad endpoint");
    if (arc.capacity < 0) throw InvalidInput("mcf: arc " + std::to_string(a) + " has negative capacity");
    if (!std::isfinite(arc.cost)) throw InvalidInput("mcf: arc " + std::to_string(a) + " has non-finite cost");
  }
}

namespace {

constexpr double kTol = 1e-9;

struct Edge {
  int to;
  int rev;
  std::int64_t cap;
  double cost;
  int arc;  // original arc index, -1 for super arcs and reverse edges
};

class Network {
 public:
  explicit Network(int n) : g_(n) {}

  void add(int u, int v, std::int64_t cap, double cost, int arc) {
    g_[u].push_back({v, static_cast<int>(g_[v].size()), cap, cost, arc});
    g_[v].push_back({u, static_cast<int>(g_[u].size()) - 1, 0, -cost, -1});
  }

  int size() const { return static_cast<int>(g_.size()); }
  std::vector<std::vector<Edge>>& edges() { return g_; }

 private:
  std::vector<std::vector<Edge>> g_;
};

// Bellman-Ford from s over edges with residual capacity; needed only when some cost is negative.
std::vector<double> initial_potential(Network& net, int s) {
  const int n = net.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  dist[s] = 0.0;
  for (int round = 0; round < n; ++round) {
    bool changed = false;
    for (int u = 0; u < n; ++u) {
      if (!std::isfinite(dist[u])) continue;
      for (const auto& e : net.edges()[u]) {
        if (e.cap > 0 && dist[u] + e.cost < dist[e.to] - kTol) {
          dist[e.to] = dist[u] + e.cost;
          changed = true;
        }
      }
    }
    if (!changed) break;
    if (round == n - 1) throw InvalidInput("mcf: negative-cost cycle with positive capacity");
  }
  for (auto& d : dist)
    if (!std::isfinite(d)) d = 0.0;
  return dist;
}

}  // namespace

McfResult solve_mcf(const McfProblem& problem) {
  problem.validate();
  const int n = problem.node_count();
  const int s = n;
  const int t = n + 1;
  Network net(n + 2);
  bool negative = false;
  for (std::size_t a = 0; a < problem.arcs.size(); ++a) {
    const auto& arc = problem.arcs[a];
    net.add(arc.tail, arc.head, arc.capacity, arc.cost, static_cast<int>(a));
    negative = negative || arc.cost < 0.0;
  }
  std::int64_t demand = 0;
  for (int i = 0; i < n; ++i) {
    if (problem.supply[i] > 0) {
      net.add(s, i, problem.supply[i], 0.0, -1);
      demand += problem.supply[i];
    } else if (problem.supply[i] < 0) {
      net.add(i, t, -problem.supply[i], 0.0, -1);
    }
  }

  auto& g = net.edges();
  const int nn = net.size();
  std::vector<double> pot = negative ? initial_potential(net, s) : std::vector<double>(nn, 0.0);
  std::vector<double> dist(nn);
  std::vector<int> prev_node(nn), prev_edge(nn);
  std::int64_t routed = 0;
  using Item = std::pair<double, int>;

  while (routed < demand) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::fill(prev_node.begin(), prev_node.end(), -1);
    dist[s] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0.0, s});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (int k = 0; k < static_cast<int>(g[u].size()); ++k) {
        const auto& e = g[u][k];
        if (e.cap <= 0) continue;
        // Reduced costs are non-negative up to rounding.
        const double rc = std::max(0.0, e.cost + pot[u] - pot[e.to]);
        const double nd = d + rc;
        if (nd < dist[e.to] - 1e-15) {
          dist[e.to] = nd;
          prev_node[e.to] = u;
          prev_edge[e.to] = k;
          pq.push({nd, e.to});
        }
      }
    }
    if (!std::isfinite(dist[t])) break;
    // Capping at dist[t] keeps reduced costs non-negative for nodes not settled.
    for (int v = 0; v < nn; ++v) pot[v] += std::min(dist[v], dist[t]);
    std::int64_t push = demand - routed;
    for (int v = t; v != s; v = prev_node[v]) push = std::min(push, g[prev_node[v]][prev_edge[v]].cap);
    for (int v = t; v != s; v = prev_node[v]) {
      auto& e = g[prev_node[v]][prev_edge[v]];
      e.cap -= push;
      g[v][e.rev].cap += push;
    }
    routed += push;
  }

  McfResult res;
  res.flow.assign(problem.arcs.size(), 0);
  for (int u = 0; u < nn; ++u) {
    for (const auto& e : g[u]) {
      if (e.arc >= 0) res.flow[e.arc] = problem.arcs[e.arc].capacity - e.cap;
    }
  }
  for (std::size_t a = 0; a < problem.arcs.size(); ++a) res.cost += res.flow[a] * problem.arcs[a].cost;
  res.feasible = routed == demand;
  res.unrouted = demand - routed;
  res.potential.assign(pot.begin(), pot.begin() + n);

  // Certificate: no residual arc has negative reduced cost.
  res.certified = res.feasible;
  if (res.feasible) {
    double scale = 1.0;
    for (const auto& arc : problem.arcs) scale = std::max(scale, std::abs(arc.cost));
    for (int u = 0; u < nn && res.certified; ++u) {
      for (const auto& e : g[u]) {
        if (e.cap <= 0) continue;
        if (e.cost + pot[u] - pot[e.to] < -1e-7 * scale) {
          res.certified = false;
          break;
        }
      }
    }
  }
  return res;
}

}  // namespace mma::mcf
