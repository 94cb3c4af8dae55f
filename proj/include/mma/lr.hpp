#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mma/slm.hpp"

namespace mma::lr {

using slm::Multipliers;
using slm::Pattern;
using slm::SlmInstance;
using slm::SlmSolution;

struct Subproblem1 {
  SlmSolution relaxed;
  double value = 0.0;
};

/// LP over the flow constraints with the Lagrangian objective.
Subproblem1 solve_subproblem1(const SlmInstance& inst, const Multipliers& lambda);

struct Subproblem2 {
  Pattern ad, as;
  double value = 0.0;
};

/// Closed form: ties and lambda_d > lambda_s pick full supply use.
Subproblem2 solve_subproblem2(const SlmInstance& inst, const Multipliers& lambda);

struct Subgradient {
  Matrix<double> d, s;
  double norm2 = 0.0;
};

/// Violation of the relaxed full-matching rows at the relaxed solution,
/// whose Ad/As must come from subproblem 2.
Subgradient subgradient(const SlmInstance& inst, const SlmSolution& relaxed);

/// Projected subgradient step with step size xi (ub - lb) / |g|^2.
Multipliers update_multipliers(const SlmInstance& inst, const Multipliers& lambda, const SlmSolution& relaxed,
                               double xi, double ub, double lb);

/// Conditional LP results keyed by pattern.
class PatternCache {
 public:
  const std::optional<SlmSolution>& solve(const SlmInstance& inst, const Pattern& pattern);
  int lp_solves() const { return lp_solves_; }
  int hits() const { return hits_; }

 private:
  std::map<Pattern, std::optional<SlmSolution>> entries_;
  int lp_solves_ = 0;
  int hits_ = 0;
};

struct HeuristicResult {
  std::optional<SlmSolution> best;
  double lower_bound = -std::numeric_limits<double>::infinity();
  int feasible_samples = 0;
};

/// Builds `samples` randomized forward-pass candidates from the relaxed
/// solution, re-optimizes each under its pattern, and keeps the best.
HeuristicResult primal_heuristic(const SlmInstance& inst, const SlmSolution& relaxed, int samples,
                                 std::uint64_t seed, PatternCache* cache = nullptr);

struct LrOptions {
  int max_iter = 50;
  double gap_tol = 0.03;
  int samples = 5;
  std::uint64_t seed = 1;
  double xi0 = 2.0;
  double xi_decay = 0.8;
  int stall_limit = 10;
  double xi_floor = 1e-4;
};

struct LrIteration {
  double upper = 0.0;       // V(lambda_i)
  double lower = 0.0;       // best heuristic value this iteration
  double best_upper = 0.0;
  double best_lower = 0.0;
  double xi = 0.0;
  double step = 0.0;
  double gap = 0.0;
};

struct LrReport {
  double best_upper_bound = std::numeric_limits<double>::infinity();
  double best_lower_bound = -std::numeric_limits<double>::infinity();
  SlmSolution best_feasible;
  int iterations = 0;
  double gap = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::uint64_t seed = 0;
  int lp_solves = 0;
  std::vector<LrIteration> trajectory;

  std::string to_json(bool include_solution = true) const;
};

/// (ub - lb) / max(|ub|, eps).
double relative_gap(double ub, double lb);

LrReport solve(const SlmInstance& inst, const LrOptions& options = {});

}  // namespace mma::lr
