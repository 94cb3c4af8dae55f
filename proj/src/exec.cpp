#include "mma/exec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "json.hpp"
#include "mma/mcf.hpp"

namespace mma::exec {

namespace {

constexpr double kShareEps = 1e-9;

int floor_share(double v) { return static_cast<int>(std::floor(v + kShareEps)); }

void check_mva_input(int n_s, const std::vector<int>& n_d, const std::vector<double>& d) {
  if (n_s < 0) throw InvalidInput("mva: negative vehicle count");
  if (n_d.size() != d.size()) throw InvalidInput("mva: n_d and d differ in length");
  for (auto v : n_d)
    if (v < 0) throw InvalidInput("mva: negative waiting count");
  for (auto v : d)
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput("mva: targets must be finite and non-negative");
}

// Indices sorted by key descending, ties by index ascending.
std::vector<int> order_desc(const std::vector<int>& idx, const std::vector<double>& key) {
  std::vector<int> out = idx;
  std::stable_sort(out.begin(), out.end(), [&](int a, int b) { return key[a] > key[b]; });
  return out;
}

}  // namespace

MvaResult mva_allocate(int n_s, const std::vector<int>& n_d, const std::vector<double>& d,
                       std::mt19937_64& rng) {
  check_mva_input(n_s, n_d, d);
  const int R = static_cast<int>(n_d.size());
  MvaResult res;
  res.x.assign(R, 0);
  const int total_nd = std::accumulate(n_d.begin(), n_d.end(), 0);
  const int ns = std::min(n_s, total_nd);
  if (ns == 0) return res;

  std::vector<double> dd = d;
  double dsum = std::accumulate(dd.begin(), dd.end(), 0.0);
  if (dsum <= 0.0) {
    dd.assign(n_d.begin(), n_d.end());
    dsum = static_cast<double>(total_nd);
    res.fallback = true;
  }

  auto& x = res.x;
  std::vector<double> theta(R, 0.0);
  std::vector<int> s_set;
  for (int j = 0; j < R; ++j) {
    const double share = dd[j] / dsum * ns;
    const int fl = floor_share(share);
    x[j] = std::min(fl, n_d[j]);
    theta[j] = std::max(0.0, share - fl);
    if (n_d[j] > fl) s_set.push_back(j);
  }
  int m = ns - std::accumulate(x.begin(), x.end(), 0);
  if (static_cast<int>(s_set.size()) > m) {
    const auto ord = order_desc(s_set, theta);
    for (int i = 0; i < m; ++i) ++x[ord[i]];
    return res;
  }
  for (int j : s_set) ++x[j];
  m -= static_cast<int>(s_set.size());
  while (m > 0) {
    std::vector<double> delta(R, 0.0);
    std::vector<int> open;
    for (int j = 0; j < R; ++j) {
      delta[j] = n_d[j] > x[j] ? std::max(dd[j] - x[j], 0.0) : 0.0;
      if (delta[j] > 0.0) open.push_back(j);
    }
    const int so = static_cast<int>(open.size());
    if (so > 0 && m > so) {
      for (int j : open) ++x[j];
      m -= so;
    } else if (so == 0) {
      std::vector<int> avail;
      for (int j = 0; j < R; ++j)
        if (n_d[j] > x[j]) avail.push_back(j);
      std::uniform_int_distribution<std::size_t> pick(0, avail.size() - 1);
      ++x[avail[pick(rng)]];
      --m;
    } else {
      const auto ord = order_desc(open, delta);
      for (int i = 0; i < m; ++i) ++x[ord[i]];
      m = 0;
    }
  }
  return res;
}

MvaResult mva_allocate(int n_s, const std::vector<int>& n_d, const std::vector<double>& d) {
  std::mt19937_64 rng(0x5eed);
  return mva_allocate(n_s, n_d, d, rng);
}

double mva_objective(int n_s, const std::vector<int>& n_d, const std::vector<double>& d,
                     const std::vector<int>& x) {
  check_mva_input(n_s, n_d, d);
  const int ns = std::min(n_s, std::accumulate(n_d.begin(), n_d.end(), 0));
  const double dsum = std::accumulate(d.begin(), d.end(), 0.0);
  if (dsum <= 0.0) return 0.0;
  double obj = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) obj += std::max(0.0, ns * d[j] / dsum - x[j]);
  return obj;
}

std::vector<std::int64_t> MatchPool::arrival_ranks() const {
  std::vector<int> ord(customers.size());
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](int a, int b) {
    if (customers[a].gen_time_s != customers[b].gen_time_s)
      return customers[a].gen_time_s < customers[b].gen_time_s;
    return customers[a].id < customers[b].id;
  });
  std::vector<std::int64_t> rank(customers.size());
  for (std::size_t i = 0; i < ord.size(); ++i) rank[ord[i]] = static_cast<std::int64_t>(i) + 1;
  return rank;
}

std::vector<int> MatchPool::waiting_by_dest(int zone_count) const {
  std::vector<int> n(zone_count, 0);
  for (const auto& c : customers) {
    if (c.dest < 0 || c.dest >= zone_count) throw InvalidInput("pool: customer destination out of range");
    ++n[c.dest];
  }
  return n;
}

double identity_priority(std::int64_t rank) { return static_cast<double>(rank); }

Assignment vom_match(const MatchPool& pool, const std::optional<std::vector<int>>& x, const Priority& g) {
  Assignment out;
  const int nv = static_cast<int>(pool.vehicles.size());
  const int nc = static_cast<int>(pool.customers.size());
  if (x) {
    const int R = static_cast<int>(x->size());
    const auto waiting = pool.waiting_by_dest(R);
    int total = 0;
    for (int j = 0; j < R; ++j) {
      if ((*x)[j] < 0 || (*x)[j] > waiting[j])
        throw InvalidInput("vom: allocation for destination " + std::to_string(j) + " is " +
                           std::to_string((*x)[j]) + " but " + std::to_string(waiting[j]) + " customers wait");
      total += (*x)[j];
    }
    if (total != nv)
      throw InvalidInput("vom: allocation sums to " + std::to_string(total) + " but " + std::to_string(nv) +
                         " vehicles are vacant");
  }
  if (nv == 0 || nc == 0) return out;

  const auto rank = pool.arrival_ranks();
  mcf::McfProblem p;
  std::vector<int> vnode(nv), cnode(nc);
  for (int q = 0; q < nv; ++q) vnode[q] = p.add_node();
  for (int c = 0; c < nc; ++c) cnode[c] = p.add_node();
  std::vector<int> pair_arc;
  std::vector<std::pair<int, int>> pair_of;
  std::vector<double> dist;
  for (int q = 0; q < nv; ++q) {
    for (int c = 0; c < nc; ++c) {
      const double w = euclidean_km(pool.vehicles[q].xy, pool.customers[c].xy);
      pair_arc.push_back(p.add_arc(vnode[q], cnode[c], 1, w * g(rank[c])));
      pair_of.push_back({q, c});
      dist.push_back(w);
    }
  }
  if (x) {
    const int R = static_cast<int>(x->size());
    std::vector<int> z(R);
    for (int j = 0; j < R; ++j) z[j] = p.add_node(-(*x)[j]);
    for (int q = 0; q < nv; ++q) p.supply[vnode[q]] = 1;
    for (int c = 0; c < nc; ++c) p.add_arc(cnode[c], z[pool.customers[c].dest], 1, 0.0);
  } else if (nv <= nc) {
    const int sink = p.add_node(-nv);
    for (int q = 0; q < nv; ++q) p.supply[vnode[q]] = 1;
    for (int c = 0; c < nc; ++c) p.add_arc(cnode[c], sink, 1, 0.0);
  } else {
    const int src = p.add_node(nc);
    for (int q = 0; q < nv; ++q) p.add_arc(src, vnode[q], 1, 0.0);
    for (int c = 0; c < nc; ++c) p.supply[cnode[c]] = -1;
  }
  const auto res = mcf::solve_mcf(p);
  if (!res.feasible) throw InvalidInput("vom: matching infeasible for zone " + std::to_string(pool.zone));
  for (std::size_t a = 0; a < pair_arc.size(); ++a) {
    if (res.flow[pair_arc[a]] == 0) continue;
    const auto [q, c] = pair_of[a];
    out.pairs.push_back({pool.vehicles[q].id, pool.customers[c].id, dist[a]});
    out.cost += dist[a] * g(rank[c]);
  }
  return out;
}

std::vector<int> relocate_greedy(const std::vector<double>& e, int l) {
  if (l < 0) throw InvalidInput("relocate: negative vehicle count");
  for (auto v : e)
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput("relocate: targets must be finite and non-negative");
  const int R = static_cast<int>(e.size());
  std::vector<int> z(R, 0);
  const double total = std::accumulate(e.begin(), e.end(), 0.0);
  if (total <= 0.0 || l == 0) return z;
  std::vector<int> frac;
  for (int j = 0; j < R; ++j) {
    const double share = e[j] / total * l;
    z[j] = floor_share(share);
    if (share - z[j] > kShareEps) frac.push_back(j);
  }
  int n = l - std::accumulate(z.begin(), z.end(), 0);
  const auto ord = order_desc(frac, e);
  for (int i = 0; i < n && i < static_cast<int>(ord.size()); ++i) ++z[ord[i]];
  return z;
}

std::vector<int> plan_relocation(const std::vector<double>& e, int l) {
  std::vector<int> up(e.size(), 0);
  int need = 0;
  for (std::size_t j = 0; j < e.size(); ++j) {
    if (!std::isfinite(e[j]) || e[j] < 0.0) throw InvalidInput("relocate: targets must be finite and non-negative");
    up[j] = static_cast<int>(std::ceil(e[j] - kShareEps));
    need += up[j];
  }
  if (l >= need) return up;
  return relocate_greedy(e, l);
}

void MatchLedger::reset(int zone_id, std::vector<double> targets) {
  zone = zone_id;
  target = std::move(targets);
  completed.assign(target.size(), 0);
}

std::vector<double> MatchLedger::remaining() const {
  std::vector<double> d(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) d[j] = std::max(target[j] - completed[j], 0.0);
  return d;
}

bool MatchLedger::targets_open() const {
  const auto d = remaining();
  return std::accumulate(d.begin(), d.end(), 0.0) > kShareEps;
}

const char* to_string(MatchCase c) {
  switch (c) {
    case MatchCase::Empty: return "empty";
    case MatchCase::AllCustomers: return "all_customers";
    case MatchCase::Guided: return "guided";
    case MatchCase::TargetsMet: return "targets_met";
  }
  return "?";
}

IntervalOutcome run_matching_interval(MatchLedger& ledger, const MatchPool& pool, int zone_count,
                                      std::mt19937_64& rng, const Priority& g) {
  IntervalOutcome out;
  if (static_cast<int>(ledger.target.size()) != zone_count) ledger.reset(pool.zone, std::vector<double>(zone_count, 0.0));
  const int nv = static_cast<int>(pool.vehicles.size());
  const int nc = static_cast<int>(pool.customers.size());
  if (nv == 0 || nc == 0) return out;
  std::optional<std::vector<int>> x;
  if (!ledger.targets_open()) {
    out.match_case = MatchCase::TargetsMet;
  } else if (nv >= nc) {
    out.match_case = MatchCase::AllCustomers;
  } else {
    out.match_case = MatchCase::Guided;
    auto mva = mva_allocate(nv, pool.waiting_by_dest(zone_count), ledger.remaining(), rng);
    out.fallback = mva.fallback;
    out.allocation = mva.x;
    x = std::move(mva.x);
  }
  out.assignment = vom_match(pool, x, g);
  std::unordered_map<std::int64_t, int> dest_of;
  for (const auto& c : pool.customers) dest_of[c.id] = c.dest;
  for (const auto& pr : out.assignment.pairs) ++ledger.completed[dest_of.at(pr.request_id)];
  return out;
}

std::string assignment_event_json(double time_s, int zone, const Pair& pair) {
  nlohmann::ordered_json j;
  j["type"] = "assign";
  j["time"] = time_s;
  j["zone"] = zone;
  j["vehicle"] = pair.vehicle_id;
  j["request"] = pair.request_id;
  j["pickup_km"] = pair.pickup_km;
  return j.dump();
}

}  // namespace mma::exec
