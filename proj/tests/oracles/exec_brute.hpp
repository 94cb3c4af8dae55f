#pragma once
// Enumeration references for the execution layer.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "mma/exec.hpp"
#include "oracles/brute.hpp"

namespace oracle {

inline double brute_mva(int ns, const std::vector<int>& nd, const std::vector<double>& d) {
  const int total = std::min(ns, std::accumulate(nd.begin(), nd.end(), 0));
  double best = std::numeric_limits<double>::infinity();
  for_each_composition(nd, total, [&](const std::vector<int>& x) {
    best = std::min(best, mma::exec::mva_objective(ns, nd, d, x));
  });
  return best;
}

inline mma::exec::MatchPool random_pool(std::mt19937_64& rng, int nv, int nc, int zones) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  mma::exec::MatchPool pool;
  for (int q = 0; q < nv; ++q) pool.vehicles.push_back({100 + q, {u(rng), u(rng)}});
  for (int c = 0; c < nc; ++c)
    pool.customers.push_back({c, static_cast<int>(rng() % zones), static_cast<double>(rng() % 1000), {u(rng), u(rng)}});
  return pool;
}

// Pickup distance times arrival rank, vehicles by rows.
inline std::vector<std::vector<double>> weighted_costs(const mma::exec::MatchPool& pool) {
  const auto rank = pool.arrival_ranks();
  std::vector<std::vector<double>> cost(pool.vehicles.size(), std::vector<double>(pool.customers.size()));
  for (std::size_t q = 0; q < pool.vehicles.size(); ++q)
    for (std::size_t c = 0; c < pool.customers.size(); ++c)
      cost[q][c] = mma::euclidean_km(pool.vehicles[q].xy, pool.customers[c].xy) * rank[c];
  return cost;
}

// Random allocation with sum = vehicles and x_j <= waiting_j.
inline std::vector<int> random_allocation(std::mt19937_64& rng, const mma::exec::MatchPool& pool, int zones) {
  const auto waiting = pool.waiting_by_dest(zones);
  std::vector<int> x(zones, 0);
  int left = static_cast<int>(pool.vehicles.size());
  while (left > 0) {
    const int j = static_cast<int>(rng() % zones);
    if (x[j] < waiting[j]) {
      ++x[j];
      --left;
    }
  }
  return x;
}

inline double brute_vom(const mma::exec::MatchPool& pool, const std::vector<int>& x) {
  std::vector<int> cls;
  for (const auto& c : pool.customers) cls.push_back(c.dest);
  return min_assignment(weighted_costs(pool), &cls, &x);
}

// Relocation integer program: integer z with floor(share) <= z <= ceil(share),
// sum z = l, maximising sum e_j (z_j - floor_j).
struct RelocationIp {
  std::vector<int> lo, hi;
  double best = -1.0;

  double objective(const std::vector<double>& e, const std::vector<int>& z) const {
    double s = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) s += e[j] * (z[j] - lo[j]);
    return s;
  }
};

inline RelocationIp relocation_ip(const std::vector<double>& e, int l) {
  const int R = static_cast<int>(e.size());
  const double total = std::accumulate(e.begin(), e.end(), 0.0);
  RelocationIp ip;
  ip.lo.resize(R);
  ip.hi.resize(R);
  for (int j = 0; j < R; ++j) {
    ip.lo[j] = static_cast<int>(std::floor(e[j] / total * l + 1e-9));
    ip.hi[j] = static_cast<int>(std::ceil(e[j] / total * l - 1e-9));
  }
  for_each_composition(ip.hi, l, [&](const std::vector<int>& v) {
    for (int j = 0; j < R; ++j)
      if (v[j] < ip.lo[j]) return;
    ip.best = std::max(ip.best, ip.objective(e, v));
  });
  return ip;
}

}  // namespace oracle
