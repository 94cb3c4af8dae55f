#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mma/core.hpp"
#include "mma/forecast.hpp"
#include "mma/lp.hpp"

namespace mma::slm {

/// State of the world at the start of the current strategic interval.
struct WorldCarryover {
  Matrix<double> carry_demand;         // waiting requests [r][j]
  std::vector<double> carry_supply;    // vacant vehicles [r]
  Matrix<double> inflight_relocating;  // relocating vehicles arriving [t][r]
  Matrix<double> inflight_occupied;    // occupied vehicles freeing up [t][r]
};

struct SlmInstance {
  int k = 0;
  ZoneGraph zones;
  forecast::Forecasts forecasts;
  Matrix<double> carry_demand;
  std::vector<double> carry_supply;
  Matrix<double> inflight_relocating;
  Matrix<double> inflight_occupied;
  double alpha = 0.0;
  double beta = 0.0;
  double big_m = 0.0;
  bool allow_relocation = true;

  int zone_count() const { return zones.zone_count; }
  int intervals() const { return forecasts.intervals(); }
  int cells() const { return zone_count() * intervals(); }
  /// Sum of every supply and demand quantity that can enter the window, plus one.
  double default_big_m() const;
  void validate() const;
  /// Intervals a vehicle needs to reach r from j inside the model (at least one).
  int lag(int from, int to) const;
};

SlmInstance build_instance(int k, const HorizonConfig& horizon, const ZoneGraph& zones,
                           const forecast::Forecasts& forecasts, const WorldCarryover& world,
                           bool allow_relocation = true);

/// Zero-initialised inputs for tests and tools.
SlmInstance empty_instance(int zone_count, int intervals);

struct SlmSolution {
  Cube<double> M, E, Ld;                  // [t][i][j]
  Matrix<double> Ls, Nd, Ns, F, D;        // [t][r]
  Matrix<int> Ad, As;                     // [t][r]
  double objective = 0.0;

  Guidance guidance(int k) const;
};

/// Decision flag per cell: 1 selects full demand service, 0 full supply use.
using Pattern = Matrix<int>;

struct Multipliers {
  Matrix<double> d;  // [t][r]
  Matrix<double> s;

  static Multipliers zeros(int intervals, int zones);
};

/// LP over the flow variables M, E (and D when beta > 0). Every other model
/// quantity is an affine function of those. With a pattern the full-matching
/// rows are imposed; without one they are dropped. Multipliers add the
/// Lagrangian terms to the objective.
struct CompactLp {
  lp::LpProblem problem;
  double objective_constant = 0.0;
};

CompactLp build_compact_lp(const SlmInstance& inst, const Multipliers* lambda, const Pattern* pattern);

/// Solves the compact LP; returns nullopt when infeasible. The returned
/// solution has every derived quantity recomputed and its SLM objective set.
/// value_out receives the LP optimum including the constant term.
std::optional<SlmSolution> solve_compact(const SlmInstance& inst, const Multipliers* lambda, const Pattern* pattern,
                                         double* value_out = nullptr);

/// Derived quantities for given M and E; D set to the absolute imbalance.
SlmSolution evaluate_flows(const SlmInstance& inst, const Cube<double>& m, const Cube<double>& e);

/// Numeric forward recursion one interval at a time: open(t) exposes the
/// waiting demand and vacant supply of interval t given earlier decisions,
/// close(t) fixes that interval's matchings and relocations.
class ForwardPass {
 public:
  explicit ForwardPass(const SlmInstance& inst);
  ~ForwardPass();
  ForwardPass(const ForwardPass&) = delete;
  ForwardPass& operator=(const ForwardPass&) = delete;

  void open(int t);
  double waiting(int t, int r, int j) const;
  double demand(int t, int r) const;
  double supply(int t, int r) const;
  void close(int t, const Matrix<double>& m, const Matrix<double>& e);
  /// Complete solution from the decisions made so far (later intervals zero).
  SlmSolution finish() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// The model written out with one variable per symbol and one named row per
/// constraint, family name before the bracket.
lp::LpProblem build_full_lp(const SlmInstance& inst, const Pattern* pattern);
std::map<std::string, int> constraint_family_counts(const lp::LpProblem& full);

struct CellLimitExceeded : InvalidInput {
  using InvalidInput::InvalidInput;
};

/// Global optimum by enumerating every pattern and solving the induced LP.
SlmSolution exact_solve(const SlmInstance& inst, int cell_limit = 16);

/// Names of violated constraints, empty when the solution is feasible within tol.
std::vector<std::string> check_solution(const SlmInstance& inst, const SlmSolution& sol, double tol = 1e-6);

/// sum F - alpha sum E - beta sum D.
double objective_value(const SlmInstance& inst, const SlmSolution& sol);

std::string instance_to_json(const SlmInstance& inst);
SlmInstance instance_from_json(const std::string& text);
std::string solution_to_json(const SlmSolution& sol);
SlmSolution solution_from_json(const std::string& text);

}  // namespace mma::slm
