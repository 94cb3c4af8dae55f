#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mma/core.hpp"

namespace mma::exec {

/// Result of the matching-vehicle allocation step.
struct MvaResult {
  std::vector<int> x;
  /// Set when the uncompleted targets summed to zero and waiting demand was used instead.
  bool fallback = false;
};

/// Splits n_s vacant vehicles across destinations proportionally to the
/// uncompleted targets d, never exceeding the waiting counts n_d.
MvaResult mva_allocate(int n_s, const std::vector<int>& n_d, const std::vector<double>& d,
                       std::mt19937_64& rng);
MvaResult mva_allocate(int n_s, const std::vector<int>& n_d, const std::vector<double>& d);

/// MVA objective: sum_j max(0, n_s * d_j / sum(d) - x_j) with n_s capped at sum(n_d).
double mva_objective(int n_s, const std::vector<int>& n_d, const std::vector<double>& d,
                     const std::vector<int>& x);

struct PoolCustomer {
  std::int64_t id = 0;
  int dest = 0;
  double gen_time_s = 0.0;
  Point xy;
};

struct PoolVehicle {
  std::int64_t id = 0;
  Point xy;
};

/// Waiting customers and vacant vehicles of one zone at a matching instant.
struct MatchPool {
  int zone = 0;
  std::vector<PoolCustomer> customers;
  std::vector<PoolVehicle> vehicles;

  /// Arrival ranks (1 = earliest) ordered by generation time, ties by id.
  std::vector<std::int64_t> arrival_ranks() const;
  /// Waiting counts per destination.
  std::vector<int> waiting_by_dest(int zone_count) const;
};

/// Priority weight G applied to the arrival rank; must be increasing.
using Priority = std::function<double(std::int64_t)>;
double identity_priority(std::int64_t rank);

struct Pair {
  std::int64_t vehicle_id = 0;
  std::int64_t request_id = 0;
  double pickup_km = 0.0;
};

struct Assignment {
  std::vector<Pair> pairs;
  /// Sum of pickup_km * G(rank) over pairs.
  double cost = 0.0;
};

/// Vehicle-order matching on the extended graph. With x, exactly x_j customers
/// heading to j are served and every vehicle is used; without x the smaller side
/// is fully matched.
Assignment vom_match(const MatchPool& pool, const std::optional<std::vector<int>>& x,
                     const Priority& g = identity_priority);

/// Greedy integer relocation counts summing to l, roughly proportional to E.
std::vector<int> relocate_greedy(const std::vector<double>& e, int l);

/// Relocation with the rounding-up shortcut when l covers every ceil(E_j).
std::vector<int> plan_relocation(const std::vector<double>& e, int l);

/// Per-zone guidance bookkeeping for one strategic interval.
struct MatchLedger {
  int zone = 0;
  std::vector<double> target;   // M[zone][j]
  std::vector<int> completed;   // u[zone][j]

  void reset(int zone_id, std::vector<double> targets);
  std::vector<double> remaining() const;
  bool targets_open() const;
};

enum class MatchCase { Empty, AllCustomers, Guided, TargetsMet };
const char* to_string(MatchCase c);

struct IntervalOutcome {
  Assignment assignment;
  MatchCase match_case = MatchCase::Empty;
  std::vector<int> allocation;
  bool fallback = false;
};

/// Applies the three-case rule at the end of a matching interval and updates the ledger.
IntervalOutcome run_matching_interval(MatchLedger& ledger, const MatchPool& pool, int zone_count,
                                      std::mt19937_64& rng, const Priority& g = identity_priority);

/// One assignment record in JSON-lines form.
std::string assignment_event_json(double time_s, int zone, const Pair& pair);

}  // namespace mma::exec
