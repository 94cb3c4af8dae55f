#include "mma/lr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace mma::lr {

namespace {

constexpr double kCellTol = 1e-7;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 sample_rng(std::uint64_t seed, int sample) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(sample)};
  return std::mt19937_64(seq);
}

// A relaxed solution that already fully uses one side in every cell is
// feasible as it stands.
std::optional<Pattern> own_pattern(const SlmSolution& s) {
  Pattern a = make_matrix<int>(s.F.size(), s.F.empty() ? 0 : s.F[0].size(), 0);
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t r = 0; r < a[t].size(); ++r) {
      if (s.Nd[t][r] - s.F[t][r] <= kCellTol)
        a[t][r] = 1;
      else if (s.Ls[t][r] > kCellTol)
        return std::nullopt;
    }
  return a;
}

Pattern complement(const Pattern& a) {
  Pattern b = a;
  for (auto& row : b)
    for (auto& v : row) v = 1 - v;
  return b;
}

SlmSolution forward_candidate(const SlmInstance& inst, const SlmSolution& relaxed, std::mt19937_64& rng) {
  const int p = inst.intervals(), R = inst.zone_count();
  slm::ForwardPass fp(inst);
  Pattern a = make_matrix<int>(p, R, 0);
  for (int t = 0; t < p; ++t) {
    fp.open(t);
    auto m = make_matrix<double>(R, R, 0.0);
    auto e = make_matrix<double>(R, R, 0.0);
    for (int r = 0; r < R; ++r) {
      const double nd = fp.demand(t, r), ns = fp.supply(t, r);
      if (nd <= ns) {
        a[t][r] = 1;
        double matched = 0.0;
        for (int j = 0; j < R; ++j) matched += m[r][j] = std::max(0.0, fp.waiting(t, r, j));
        const double left = std::max(0.0, ns - matched);
        const double lbar = relaxed.Ls[t][r];
        if (!inst.allow_relocation || lbar <= 1e-12) continue;
        double moved = 0.0;
        for (int j = 0; j < R; ++j)
          if (j != r) moved += e[r][j] = left * std::max(0.0, relaxed.E[t][r][j]) / lbar;
        if (moved > left)
          for (auto& v : e[r]) v *= left / moved;
      } else {
        std::vector<double> cap(R);
        double row = 0.0;
        for (int j = 0; j < R; ++j) {
          cap[j] = std::max(0.0, fp.waiting(t, r, j));
          row += std::max(0.0, relaxed.M[t][r][j]);
        }
        double assigned = 0.0;
        for (int j = 0; j < R; ++j) {
          const double share = row > 1e-12 ? std::max(0.0, relaxed.M[t][r][j]) / row : 1.0 / R;
          assigned += m[r][j] = std::min(cap[j], share * std::max(0.0, ns));
        }
        double remaining = std::max(0.0, ns) - assigned;
        std::vector<int> open;
        while (remaining > 1e-12) {
          open.clear();
          for (int j = 0; j < R; ++j)
            if (cap[j] - m[r][j] > 1e-12) open.push_back(j);
          if (open.empty()) break;
          const int j = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
          const double amount = std::min({1.0, remaining, cap[j] - m[r][j]});
          m[r][j] += amount;
          remaining -= amount;
        }
      }
    }
    fp.close(t, m, e);
  }
  auto sol = fp.finish();
  sol.Ad = a;
  sol.As = complement(a);
  return sol;
}

}  // namespace

Subproblem1 solve_subproblem1(const SlmInstance& inst, const Multipliers& lambda) {
  Subproblem1 out;
  auto sol = slm::solve_compact(inst, &lambda, nullptr, &out.value);
  if (!sol) throw std::logic_error("relaxed strategic LP reported infeasible although zero flows are feasible");
  out.relaxed = std::move(*sol);
  return out;
}

Subproblem2 solve_subproblem2(const SlmInstance& inst, const Multipliers& lambda) {
  const int p = inst.intervals(), R = inst.zone_count();
  Subproblem2 out{make_matrix<int>(p, R, 0), make_matrix<int>(p, R, 0), 0.0};
  for (int t = 0; t < p; ++t)
    for (int r = 0; r < R; ++r) {
      const double ld = lambda.d[t][r], ls = lambda.s[t][r];
      if (ld >= ls) {
        out.as[t][r] = 1;
      } else {
        out.ad[t][r] = 1;
      }
      out.value += inst.big_m * (ld * (1 - out.ad[t][r]) + ls * (1 - out.as[t][r]));
    }
  return out;
}

Subgradient subgradient(const SlmInstance& inst, const SlmSolution& relaxed) {
  const int p = inst.intervals(), R = inst.zone_count();
  Subgradient g{make_matrix<double>(p, R, 0.0), make_matrix<double>(p, R, 0.0), 0.0};
  for (int t = 0; t < p; ++t)
    for (int r = 0; r < R; ++r) {
      g.d[t][r] = relaxed.Nd[t][r] - inst.big_m * (1 - relaxed.Ad[t][r]) - relaxed.F[t][r];
      g.s[t][r] = relaxed.Ns[t][r] - inst.big_m * (1 - relaxed.As[t][r]) - relaxed.F[t][r];
      g.norm2 += g.d[t][r] * g.d[t][r] + g.s[t][r] * g.s[t][r];
    }
  return g;
}

namespace {

double step_size(const Subgradient& g, double xi, double ub, double lb) {
  if (g.norm2 <= 0.0 || !std::isfinite(lb) || !std::isfinite(ub)) return 0.0;
  return xi * std::max(0.0, ub - lb) / g.norm2;
}

Multipliers apply_step(const Multipliers& lambda, const Subgradient& g, double step) {
  Multipliers next = lambda;
  for (std::size_t t = 0; t < next.d.size(); ++t)
    for (std::size_t r = 0; r < next.d[t].size(); ++r) {
      next.d[t][r] = std::max(0.0, lambda.d[t][r] + step * g.d[t][r]);
      next.s[t][r] = std::max(0.0, lambda.s[t][r] + step * g.s[t][r]);
    }
  return next;
}

}  // namespace

Multipliers update_multipliers(const SlmInstance& inst, const Multipliers& lambda, const SlmSolution& relaxed,
                               double xi, double ub, double lb) {
  const auto g = subgradient(inst, relaxed);
  return apply_step(lambda, g, step_size(g, xi, ub, lb));
}

const std::optional<SlmSolution>& PatternCache::solve(const SlmInstance& inst, const Pattern& pattern) {
  auto it = entries_.find(pattern);
  if (it != entries_.end()) {
    ++hits_;
    return it->second;
  }
  ++lp_solves_;
  return entries_.emplace(pattern, slm::solve_compact(inst, nullptr, &pattern)).first->second;
}

HeuristicResult primal_heuristic(const SlmInstance& inst, const SlmSolution& relaxed, int samples,
                                 std::uint64_t seed, PatternCache* cache) {
  PatternCache local;
  PatternCache& pc = cache ? *cache : local;
  HeuristicResult out;
  auto consider = [&](const SlmSolution& s) {
    if (!out.best || s.objective > out.lower_bound) {
      out.best = s;
      out.lower_bound = s.objective;
    }
  };
  if (auto a = own_pattern(relaxed)) {
    SlmSolution s = relaxed;
    s.Ad = *a;
    s.As = complement(*a);
    s.objective = slm::objective_value(inst, s);
    consider(s);
  }
  for (int k = 0; k < std::max(1, samples); ++k) {
    auto rng = sample_rng(seed, k);
    const auto cand = forward_candidate(inst, relaxed, rng);
    ++out.feasible_samples;
    consider(cand);
    if (const auto& best = pc.solve(inst, cand.Ad)) consider(*best);
  }
  return out;
}

double relative_gap(double ub, double lb) { return (ub - lb) / std::max(std::abs(ub), 1e-9); }

LrReport solve(const SlmInstance& inst, const LrOptions& options) {
  inst.validate();
  if (options.max_iter < 1) throw InvalidInput("max_iter must be at least 1");
  if (!(options.gap_tol >= 0.0)) throw InvalidInput("gap_tol must be >= 0");
  const int p = inst.intervals(), R = inst.zone_count();
  LrReport rep;
  rep.seed = options.seed;
  PatternCache cache;
  Multipliers lambda = Multipliers::zeros(p, R);
  double xi = options.xi0;
  int stall = 0;
  for (int i = 0; i < options.max_iter; ++i) {
    auto sp1 = solve_subproblem1(inst, lambda);
    const auto sp2 = solve_subproblem2(inst, lambda);
    ++rep.lp_solves;
    const double ub = sp1.value + sp2.value;
    SlmSolution& relaxed = sp1.relaxed;

    const auto h = primal_heuristic(inst, relaxed, options.samples, splitmix(options.seed + i), &cache);
    if (h.best && h.lower_bound > rep.best_lower_bound) {
      rep.best_lower_bound = h.lower_bound;
      rep.best_feasible = *h.best;
    }
    if (ub < rep.best_upper_bound - 1e-12) {
      rep.best_upper_bound = ub;
      stall = 0;
    } else if (++stall >= options.stall_limit) {
      xi = std::max(options.xi_floor, xi * options.xi_decay);
      stall = 0;
    }
    rep.iterations = i + 1;
    rep.gap = relative_gap(rep.best_upper_bound, rep.best_lower_bound);

    LrIteration it;
    it.upper = ub;
    it.lower = h.lower_bound;
    it.best_upper = rep.best_upper_bound;
    it.best_lower = rep.best_lower_bound;
    it.xi = xi;
    it.gap = rep.gap;
    if (rep.gap < options.gap_tol) {
      rep.converged = true;
      rep.trajectory.push_back(it);
      break;
    }
    relaxed.Ad = sp2.ad;
    relaxed.As = sp2.as;
    const auto g = subgradient(inst, relaxed);
    it.step = step_size(g, xi, ub, rep.best_lower_bound);
    rep.trajectory.push_back(it);
    lambda = apply_step(lambda, g, it.step);
  }
  rep.lp_solves += cache.lp_solves();
  return rep;
}

std::string LrReport::to_json(bool include_solution) const {
  nlohmann::ordered_json j;
  j["best_upper_bound"] = best_upper_bound;
  j["best_lower_bound"] = best_lower_bound;
  j["gap"] = gap;
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["seed"] = seed;
  j["lp_solves"] = lp_solves;
  auto& tr = j["trajectory"] = nlohmann::ordered_json::array();
  for (const auto& it : trajectory)
    tr.push_back({{"upper", it.upper},
                  {"lower", it.lower},
                  {"best_upper", it.best_upper},
                  {"best_lower", it.best_lower},
                  {"xi", it.xi},
                  {"step", it.step},
                  {"gap", it.gap}});
  if (include_solution) j["best_feasible"] = nlohmann::ordered_json::parse(slm::solution_to_json(best_feasible));
  return j.dump();
}

}  // namespace mma::lr
