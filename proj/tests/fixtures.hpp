#pragma once

#include <random>

#include "mma/slm.hpp"

namespace fixtures {

using mma::slm::SlmInstance;

inline SlmInstance random_instance(std::mt19937_64& rng, int zones, int intervals, double alpha, double beta,
                            bool relocation = true) {
  std::uniform_real_distribution<double> u(0.0, 6.0), drop(0.0, 0.4), w(0.1, 1.0);
  std::uniform_int_distribution<int> hop(1, 2);
  auto in = mma::slm::empty_instance(zones, intervals);
  for (int i = 0; i < zones; ++i)
    for (int j = 0; j < zones; ++j)
      if (i != j) in.zones.travel_intervals[i][j] = in.zones.travel_intervals[j][i] = hop(rng);
  auto& fc = in.forecasts;
  for (int t = 0; t < intervals; ++t) {
    fc.drop_demand[t] = drop(rng);
    fc.drop_supply[t] = drop(rng);
    for (int r = 0; r < zones; ++r) {
      fc.demand[t][r] = u(rng);
      fc.supply[t][r] = u(rng) * 0.6;
      in.inflight_occupied[t][r] = u(rng) * 0.2;
      in.inflight_relocating[t][r] = u(rng) * 0.1;
      double total = 0.0;
      for (int j = 0; j < zones; ++j) total += fc.transition[t][r][j] = w(rng);
      for (int j = 0; j < zones; ++j) fc.transition[t][r][j] /= total;
    }
  }
  for (int r = 0; r < zones; ++r) {
    in.carry_supply[r] = u(rng) * 0.5;
    for (int j = 0; j < zones; ++j) in.carry_demand[r][j] = u(rng) * 0.3;
  }
  in.alpha = alpha;
  in.beta = beta;
  in.allow_relocation = relocation;
  in.big_m = in.default_big_m();
  in.validate();
  return in;
}

// alpha = beta = 0, every request waits one interval, one-interval hops,
// and a fixed fleet present from the start.
inline SlmInstance stylized_instance(std::mt19937_64& rng, int zones, int intervals) {
  std::uniform_real_distribution<double> u(0.0, 6.0), w(0.1, 1.0);
  auto in = mma::slm::empty_instance(zones, intervals);
  auto& fc = in.forecasts;
  for (int t = 0; t < intervals; ++t) {
    fc.drop_demand[t] = 1.0;
    for (int r = 0; r < zones; ++r) {
      fc.demand[t][r] = u(rng);
      double total = 0.0;
      for (int j = 0; j < zones; ++j) total += fc.transition[t][r][j] = w(rng);
      for (int j = 0; j < zones; ++j) fc.transition[t][r][j] /= total;
    }
  }
  for (int r = 0; r < zones; ++r) in.carry_supply[r] = u(rng);
  in.big_m = in.default_big_m();
  in.validate();
  return in;
}

}  // namespace fixtures
