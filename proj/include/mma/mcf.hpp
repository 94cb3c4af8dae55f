#pragma once

#include <cstdint>
#include <vector>

namespace mma::mcf {

struct Arc {
  int tail = 0;
  int head = 0;
  std::int64_t capacity = 0;
  double cost = 0.0;
};

/// Min-cost flow with integral supplies and capacities. supply[i] > 0 is a
/// source, < 0 a sink; supplies must sum to zero.
struct McfProblem {
  std::vector<std::int64_t> supply;
  std::vector<Arc> arcs;

  int add_node(std::int64_t b = 0);
  int add_arc(int tail, int head, std::int64_t capacity, double cost);
  int node_count() const { return static_cast<int>(supply.size()); }
  void validate() const;
};

struct McfResult {
  bool feasible = false;
  std::vector<std::int64_t> flow;
  double cost = 0.0;
  /// Node potentials; every residual arc has reduced cost >= -tol.
  std::vector<double> potential;
  /// True when the residual graph was verified free of negative reduced costs.
  bool certified = false;
  /// Supply left unrouted when infeasible.
  std::int64_t unrouted = 0;
};

/// Successive shortest augmenting paths with Johnson potentials.
McfResult solve_mcf(const McfProblem& problem);

}  // namespace mma::mcf
