#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mma::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
/// Primal feasibility tolerance on rows and bounds.
inline constexpr double kFeasibilityTol = 1e-7;
/// Optimality tolerance on reduced costs.
inline constexpr double kReducedCostTol = 1e-9;

enum class ObjectiveSense { Maximize, Minimize };
enum class RowSense { LessEqual, GreaterEqual, Equal };

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::vector<Term> terms;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
  std::string name;
};

/// Linear program with bounded variables and sparse rows.
struct LpProblem {
  ObjectiveSense sense = ObjectiveSense::Maximize;
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::string> names;
  std::vector<Constraint> rows;

  int add_variable(double lb, double ub, double cost, std::string name = {});
  int add_constraint(std::vector<Term> terms, RowSense sense, double rhs, std::string name = {});
  int variable_count() const { return static_cast<int>(objective.size()); }
  int constraint_count() const { return static_cast<int>(rows.size()); }

  /// Throws InvalidInput on non-finite costs, crossed bounds, or bad indices.
  void validate() const;
  double evaluate(std::span<const double> x) const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus s);

struct LpOptions {
  double feasibility_tol = kFeasibilityTol;
  double optimality_tol = kReducedCostTol;
  int max_iterations = 100000;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degeneracy_trip = 40;
  int refactor_period = 80;
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  /// Sensitivity of the optimal objective (in the problem's own sense) to each rhs.
  std::vector<double> duals;
  int iterations = 0;

  bool optimal() const { return status == LpStatus::Optimal; }
};

/// Two-phase bounded-variable revised simplex with an explicit dense basis
/// inverse, Harris ratio test, and a Bland fallback on degenerate stalls.
LpResult solve_lp(const LpProblem& problem, const LpOptions& options = {});

/// Largest row or bound violation of x.
double max_violation(const LpProblem& problem, std::span<const double> x);

/// CPLEX-LP-style text rendering for external cross-checking.
std::string write_lp_format(const LpProblem& problem);

}  // namespace mma::lp
