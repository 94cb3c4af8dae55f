#include "mma/baselines.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace mma::baselines {

exec::Assignment fcfs_match(const exec::MatchPool& pool, const exec::Priority& g) {
  exec::Assignment out;
  const auto rank = pool.arrival_ranks();
  std::vector<int> order(pool.customers.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return rank[a] < rank[b]; });
  std::vector<bool> used(pool.vehicles.size(), false);
  for (int c : order) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < pool.vehicles.size(); ++q) {
      if (used[q]) continue;
      const double d = euclidean_km(pool.vehicles[q].xy, pool.customers[c].xy);
      if (d < best_d || (d == best_d && pool.vehicles[q].id < pool.vehicles[best].id)) {
        best = static_cast<int>(q);
        best_d = d;
      }
    }
    if (best < 0) break;
    used[best] = true;
    out.pairs.push_back({pool.vehicles[best].id, pool.customers[c].id, best_d});
    out.cost += best_d * g(rank[c]);
  }
  return out;
}

exec::Assignment batch_match(const exec::MatchPool& pool, const exec::Priority& g) {
  return exec::vom_match(pool, std::nullopt, g);
}

}  // namespace mma::baselines
