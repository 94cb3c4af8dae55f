#include "mma/slm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace mma::slm {

namespace {

using lp::RowSense;
using lp::Term;

// Dense affine form c + a.x over the compact variables.
struct Affine {
  double c = 0.0;
  std::vector<double> a;

  explicit Affine(std::size_t n = 0) : a(n, 0.0) {}

  Affine& operator+=(const Affine& o) {
    c += o.c;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
    return *this;
  }
  Affine& operator-=(const Affine& o) {
    c -= o.c;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
    return *this;
  }
  Affine& operator+=(double v) {
    c += v;
    return *this;
  }
  Affine& operator*=(double s) {
    c *= s;
    for (auto& v : a) v *= s;
    return *this;
  }
};

Affine operator+(Affine x, const Affine& y) { return x += y; }
Affine operator-(Affine x, const Affine& y) { return x -= y; }
Affine operator+(Affine x, double v) { return x += v; }
Affine operator*(Affine x, double s) { return x *= s; }

void axpy(Affine& y, const Affine& x, double s) {
  y.c += s * x.c;
  for (std::size_t i = 0; i < y.a.size(); ++i) y.a[i] += s * x.a[i];
}

// Forward recursion of the model quantities given matchings M and
// relocations E. Works on numbers and on affine forms alike.
template <class S>
struct Flow {
  const SlmInstance& in;
  int p, R;
  S zero;
  Cube<S> M, E, W, Ld;
  Matrix<S> Nd, Ns, F, Ls;

  Flow(const SlmInstance& inst, S z, Cube<S> m, Cube<S> e)
      : in(inst), p(inst.intervals()), R(inst.zone_count()), zero(z), M(std::move(m)), E(std::move(e)) {
    W = Ld = Cube<S>(p, Matrix<S>(R, std::vector<S>(R, zero)));
    Nd = Ns = F = Ls = Matrix<S>(p, std::vector<S>(R, zero));
  }

  void run() {
    for (int t = 0; t < p; ++t) {
      open(t);
      close(t);
    }
  }

  // Supply and waiting demand available in interval t.
  void open(int t) {
    const auto& fc = in.forecasts;
    for (int r = 0; r < R; ++r) {
      S ns = zero;
      ns += fc.supply[t][r] + in.inflight_relocating[t][r] + in.inflight_occupied[t][r];
      if (t == 0) {
        ns += in.carry_supply[r];
      } else {
        S left = Ls[t - 1][r];
        for (int j = 0; j < R; ++j)
          if (j != r) left -= E[t - 1][r][j];
        ns += left * (1.0 - fc.drop_supply[t - 1]);
      }
      for (int j = 0; j < R; ++j) {
        const int s = t - in.lag(j, r);
        if (s < 0) continue;
        ns += M[s][j][r];
        if (j != r) ns += E[s][j][r];
      }
      Ns[t][r] = std::move(ns);

      S nd = zero;
      for (int j = 0; j < R; ++j) {
        S w = t == 0 ? zero + in.carry_demand[r][j] : Ld[t - 1][r][j] * (1.0 - fc.drop_demand[t - 1]);
        w += fc.demand[t][r] * fc.transition[t][r][j];
        nd += w;
        W[t][r][j] = std::move(w);
      }
      Nd[t][r] = std::move(nd);
    }
  }

  void close(int t) {
    for (int r = 0; r < R; ++r) {
      S f = zero;
      for (int j = 0; j < R; ++j) {
        f += M[t][r][j];
        Ld[t][r][j] = W[t][r][j] - M[t][r][j];
      }
      Ls[t][r] = Ns[t][r] - f;
      F[t][r] = std::move(f);
    }
  }
};

struct Layout {
  Cube<int> m, e;
  Matrix<int> d;
  int n = 0;
};

Layout make_layout(const SlmInstance& inst) {
  const int p = inst.intervals(), R = inst.zone_count();
  Layout l;
  l.m = make_cube<int>(p, R, R, -1);
  l.e = make_cube<int>(p, R, R, -1);
  l.d = make_matrix<int>(p, R, -1);
  for (int t = 0; t < p; ++t) {
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < R; ++j) l.m[t][i][j] = l.n++;
    if (inst.allow_relocation)
      for (int i = 0; i < R; ++i)
        for (int j = 0; j < R; ++j)
          if (i != j) l.e[t][i][j] = l.n++;
    if (inst.beta > 0.0)
      for (int r = 0; r < R; ++r) l.d[t][r] = l.n++;
  }
  return l;
}

std::string cell(const char* family, int t, int r) {
  return std::string(family) + "[" + std::to_string(t) + "," + std::to_string(r) + "]";
}

std::string cell(const char* family, int t, int i, int j) {
  return std::string(family) + "[" + std::to_string(t) + "," + std::to_string(i) + "," + std::to_string(j) + "]";
}

void add_row(lp::LpProblem& pr, const Affine& expr, RowSense sense, std::string name) {
  std::vector<Term> terms;
  for (std::size_t i = 0; i < expr.a.size(); ++i)
    if (std::abs(expr.a[i]) > 1e-15) terms.push_back({static_cast<int>(i), expr.a[i]});
  pr.add_constraint(std::move(terms), sense, -expr.c, std::move(name));
}

void check_matrix(const Matrix<double>& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.size() != rows) throw InvalidInput(std::string(what) + ": wrong number of rows");
  for (const auto& row : m) {
    if (row.size() != cols) throw InvalidInput(std::string(what) + ": wrong number of columns");
    for (double v : row)
      if (!std::isfinite(v) || v < 0.0) throw InvalidInput(std::string(what) + ": entries must be finite and >= 0");
  }
}

Pattern infer_pattern(const SlmSolution& s) {
  Pattern a = make_matrix<int>(s.F.size(), s.F.empty() ? 0 : s.F[0].size(), 0);
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t r = 0; r < a[t].size(); ++r) a[t][r] = s.Nd[t][r] - s.F[t][r] <= 1e-7 ? 1 : 0;
  return a;
}

Pattern complement(const Pattern& a) {
  Pattern b = a;
  for (auto& row : b)
    for (auto& v : row) v = 1 - v;
  return b;
}

}  // namespace

double SlmInstance::default_big_m() const {
  double total = 1.0;
  for (const auto& row : forecasts.demand) total += std::accumulate(row.begin(), row.end(), 0.0);
  for (const auto& row : forecasts.supply) total += std::accumulate(row.begin(), row.end(), 0.0);
  for (const auto& row : carry_demand) total += std::accumulate(row.begin(), row.end(), 0.0);
  total += std::accumulate(carry_supply.begin(), carry_supply.end(), 0.0);
  for (const auto& row : inflight_relocating) total += std::accumulate(row.begin(), row.end(), 0.0);
  for (const auto& row : inflight_occupied) total += std::accumulate(row.begin(), row.end(), 0.0);
  return total;
}

void SlmInstance::validate() const {
  zones.validate();
  const int R = zone_count();
  const int p = intervals();
  if (R < 1) throw InvalidInput("instance needs at least one zone");
  if (p < 1) throw InvalidInput("instance needs at least one interval");
  forecasts.validate(R);
  check_matrix(carry_demand, R, R, "carry_demand");
  check_matrix(inflight_relocating, p, R, "inflight_relocating");
  check_matrix(inflight_occupied, p, R, "inflight_occupied");
  if (carry_supply.size() != static_cast<std::size_t>(R)) throw InvalidInput("carry_supply: wrong length");
  for (double v : carry_supply)
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput("carry_supply: entries must be finite and >= 0");
  if (!std::isfinite(alpha) || alpha < 0.0) throw InvalidInput("alpha must be finite and >= 0");
  if (!std::isfinite(beta) || beta < 0.0) throw InvalidInput("beta must be finite and >= 0");
  if (!std::isfinite(big_m) || big_m <= 0.0) throw InvalidInput("big_m must be finite and > 0");
}

int SlmInstance::lag(int from, int to) const { return std::max(zones.travel_intervals[from][to], 1); }

SlmInstance build_instance(int k, const HorizonConfig& horizon, const ZoneGraph& zones,
                           const forecast::Forecasts& forecasts, const WorldCarryover& world, bool allow_relocation) {
  horizon.validate();
  SlmInstance in;
  in.k = k;
  in.zones = zones;
  in.forecasts = forecasts;
  in.carry_demand = world.carry_demand;
  in.carry_supply = world.carry_supply;
  in.inflight_relocating = world.inflight_relocating;
  in.inflight_occupied = world.inflight_occupied;
  in.alpha = horizon.alpha;
  in.beta = horizon.beta;
  in.allow_relocation = allow_relocation;
  if (forecasts.intervals() != horizon.planning_intervals)
    throw InvalidInput("forecast window length differs from the planning horizon");
  in.big_m = in.default_big_m();
  in.validate();
  return in;
}

SlmInstance empty_instance(int zone_count, int intervals) {
  if (zone_count < 1 || intervals < 1) throw InvalidInput("empty_instance needs positive sizes");
  SlmInstance in;
  in.zones.zone_count = zone_count;
  in.zones.travel_intervals = make_matrix<int>(zone_count, zone_count, 1);
  in.zones.distance_km = make_matrix<double>(zone_count, zone_count, 1.0);
  for (int r = 0; r < zone_count; ++r) {
    in.zones.travel_intervals[r][r] = 0;
    in.zones.distance_km[r][r] = 0.0;
  }
  auto& fc = in.forecasts;
  fc.demand = make_matrix<double>(intervals, zone_count, 0.0);
  fc.supply = make_matrix<double>(intervals, zone_count, 0.0);
  fc.transition = make_cube<double>(intervals, zone_count, zone_count, 1.0 / zone_count);
  fc.drop_demand.assign(intervals, 0.0);
  fc.drop_supply.assign(intervals, 0.0);
  in.carry_demand = make_matrix<double>(zone_count, zone_count, 0.0);
  in.carry_supply.assign(zone_count, 0.0);
  in.inflight_relocating = make_matrix<double>(intervals, zone_count, 0.0);
  in.inflight_occupied = make_matrix<double>(intervals, zone_count, 0.0);
  in.big_m = 1.0;
  return in;
}

Guidance SlmSolution::guidance(int k) const {
  Guidance g;
  g.interval = k;
  if (!M.empty()) g.match_target = M[0];
  if (!E.empty()) g.relocate_target = E[0];
  return g;
}

Multipliers Multipliers::zeros(int intervals, int zones) {
  return {make_matrix<double>(intervals, zones, 0.0), make_matrix<double>(intervals, zones, 0.0)};
}

CompactLp build_compact_lp(const SlmInstance& inst, const Multipliers* lambda, const Pattern* pattern) {
  const int p = inst.intervals(), R = inst.zone_count();
  const Layout lay = make_layout(inst);
  const std::size_t n = lay.n;
  const Affine zero(n);

  auto vars = [&](const Cube<int>& idx) {
    Cube<Affine> c(p, Matrix<Affine>(R, std::vector<Affine>(R, zero)));
    for (int t = 0; t < p; ++t)
      for (int i = 0; i < R; ++i)
        for (int j = 0; j < R; ++j)
          if (idx[t][i][j] >= 0) c[t][i][j].a[idx[t][i][j]] = 1.0;
    return c;
  };
  Flow<Affine> f(inst, zero, vars(lay.m), vars(lay.e));
  f.run();

  CompactLp out;
  auto& pr = out.problem;
  pr.sense = lp::ObjectiveSense::Maximize;
  pr.objective.assign(n, 0.0);
  pr.lower.assign(n, 0.0);
  pr.upper.assign(n, lp::kInf);
  pr.names.assign(n, {});
  for (int t = 0; t < p; ++t)
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < R; ++j) {
        pr.names[lay.m[t][i][j]] = cell("M", t, i, j);
        if (lay.e[t][i][j] >= 0) pr.names[lay.e[t][i][j]] = cell("E", t, i, j);
      }
  for (int t = 0; t < p; ++t)
    for (int r = 0; r < R; ++r)
      if (lay.d[t][r] >= 0) pr.names[lay.d[t][r]] = cell("D", t, r);
  // In the first interval waiting demand is fixed, so the cap is a bound.
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < R; ++j) pr.upper[lay.m[0][i][j]] = std::max(0.0, f.W[0][i][j].c);

  Affine obj(n);
  for (int t = 0; t < p; ++t)
    for (int r = 0; r < R; ++r) {
      const double ld = lambda ? lambda->d[t][r] : 0.0;
      const double ls = lambda ? lambda->s[t][r] : 0.0;
      axpy(obj, f.F[t][r], 1.0 + ld + ls);
      if (ld != 0.0) axpy(obj, f.Nd[t][r], -ld);
      if (ls != 0.0) axpy(obj, f.Ns[t][r], -ls);
      for (int j = 0; j < R; ++j)
        if (lay.e[t][r][j] >= 0) obj.a[lay.e[t][r][j]] -= inst.alpha;
      if (lay.d[t][r] >= 0) obj.a[lay.d[t][r]] -= inst.beta;
    }
  pr.objective = obj.a;
  out.objective_constant = obj.c;

  for (int t = 0; t < p; ++t) {
    if (t > 0)
      for (int i = 0; i < R; ++i)
        for (int j = 0; j < R; ++j)
          add_row(pr, f.W[t][i][j] - f.M[t][i][j], RowSense::GreaterEqual, cell("match_cap", t, i, j));
    for (int r = 0; r < R; ++r) {
      Affine left = f.Ls[t][r];
      for (int j = 0; j < R; ++j)
        if (j != r) left -= f.E[t][r][j];
      add_row(pr, left, RowSense::GreaterEqual, cell("reloc_cap", t, r));
    }
    if (inst.beta > 0.0) {
      Affine mean(n);
      for (int r = 0; r < R; ++r) {
        axpy(mean, f.Ns[t][r], 1.0 / R);
        axpy(mean, f.Nd[t][r], -1.0 / R);
      }
      for (int r = 0; r < R; ++r) {
        Affine gap = f.Ns[t][r] - f.Nd[t][r] - mean;
        Affine d(n);
        d.a[lay.d[t][r]] = 1.0;
        add_row(pr, d - gap, RowSense::GreaterEqual, cell("imbalance_pos", t, r));
        add_row(pr, d + gap, RowSense::GreaterEqual, cell("imbalance_neg", t, r));
      }
    }
    if (pattern)
      for (int r = 0; r < R; ++r) {
        if ((*pattern)[t][r] == 1)
          add_row(pr, f.Nd[t][r] - f.F[t][r], RowSense::LessEqual, cell("full_demand", t, r));
        else
          add_row(pr, f.Ls[t][r], RowSense::LessEqual, cell("full_supply", t, r));
      }
  }
  return out;
}

SlmSolution evaluate_flows(const SlmInstance& inst, const Cube<double>& m, const Cube<double>& e) {
  const int p = inst.intervals(), R = inst.zone_count();
  Cube<double> e0 = e;
  for (auto& mat : e0)
    for (int r = 0; r < R; ++r) mat[r][r] = 0.0;
  Flow<double> f(inst, 0.0, m, e0);
  f.run();
  SlmSolution s;
  s.M = std::move(f.M);
  s.E = std::move(f.E);
  s.Ld = std::move(f.Ld);
  s.Ls = std::move(f.Ls);
  s.Nd = std::move(f.Nd);
  s.Ns = std::move(f.Ns);
  s.F = std::move(f.F);
  s.D = make_matrix<double>(p, R, 0.0);
  for (int t = 0; t < p; ++t) {
    double mean = 0.0;
    for (int r = 0; r < R; ++r) mean += (s.Ns[t][r] - s.Nd[t][r]) / R;
    for (int r = 0; r < R; ++r) s.D[t][r] = std::abs(s.Ns[t][r] - s.Nd[t][r] - mean);
  }
  s.Ad = infer_pattern(s);
  s.As = complement(s.Ad);
  s.objective = objective_value(inst, s);
  return s;
}

std::optional<SlmSolution> solve_compact(const SlmInstance& inst, const Multipliers* lambda, const Pattern* pattern,
                                         double* value_out) {
  const auto c = build_compact_lp(inst, lambda, pattern);
  const auto res = lp::solve_lp(c.problem);
  if (res.status == lp::LpStatus::Infeasible) return std::nullopt;
  if (!res.optimal()) throw std::runtime_error(std::string("strategic LP ended with status ") + to_string(res.status));
  const int p = inst.intervals(), R = inst.zone_count();
  const Layout lay = make_layout(inst);
  auto value = [&](int idx) {
    if (idx < 0) return 0.0;
    return std::clamp(res.x[idx], 0.0, c.problem.upper[idx]);
  };
  Cube<double> m = make_cube<double>(p, R, R, 0.0), e = make_cube<double>(p, R, R, 0.0);
  for (int t = 0; t < p; ++t)
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < R; ++j) {
        m[t][i][j] = value(lay.m[t][i][j]);
        e[t][i][j] = value(lay.e[t][i][j]);
      }
  auto sol = evaluate_flows(inst, m, e);
  if (pattern) {
    sol.Ad = *pattern;
    sol.As = complement(*pattern);
  }
  if (value_out) *value_out = res.objective + c.objective_constant;
  return sol;
}

double objective_value(const SlmInstance& inst, const SlmSolution& sol) {
  double v = 0.0;
  const int p = inst.intervals(), R = inst.zone_count();
  for (int t = 0; t < p; ++t)
    for (int r = 0; r < R; ++r) {
      v += sol.F[t][r] - inst.beta * sol.D[t][r];
      for (int j = 0; j < R; ++j)
        if (j != r) v -= inst.alpha * sol.E[t][r][j];
    }
  return v;
}

struct ForwardPass::Impl {
  const SlmInstance& inst;
  Flow<double> flow;
  explicit Impl(const SlmInstance& in)
      : inst(in),
        flow(in, 0.0, make_cube<double>(in.intervals(), in.zone_count(), in.zone_count(), 0.0),
             make_cube<double>(in.intervals(), in.zone_count(), in.zone_count(), 0.0)) {}
};

ForwardPass::ForwardPass(const SlmInstance& inst) : impl_(std::make_unique<Impl>(inst)) {}
ForwardPass::~ForwardPass() = default;

void ForwardPass::open(int t) { impl_->flow.open(t); }
double ForwardPass::waiting(int t, int r, int j) const { return impl_->flow.W[t][r][j]; }
double ForwardPass::demand(int t, int r) const { return impl_->flow.Nd[t][r]; }
double ForwardPass::supply(int t, int r) const { return impl_->flow.Ns[t][r]; }

void ForwardPass::close(int t, const Matrix<double>& m, const Matrix<double>& e) {
  auto& f = impl_->flow;
  f.M[t] = m;
  f.E[t] = e;
  for (int r = 0; r < f.R; ++r) f.E[t][r][r] = 0.0;
  f.close(t);
}

SlmSolution ForwardPass::finish() const { return evaluate_flows(impl_->inst, impl_->flow.M, impl_->flow.E); }

namespace {

// Variable indices of the full formulation.
struct FullLayout {
  Cube<int> M, E, Ld;
  Matrix<int> Ls, Nd, Ns, F, D, Et, Ec, Ot, Oc;
};

FullLayout full_variables(const SlmInstance& inst, lp::LpProblem& pr) {
  const int p = inst.intervals(), R = inst.zone_count();
  FullLayout v;
  v.M = v.E = v.Ld = make_cube<int>(p, R, R, -1);
  v.Ls = v.Nd = v.Ns = v.F = v.D = v.Et = v.Ec = v.Ot = v.Oc = make_matrix<int>(p, R, -1);
  const double free_lb = -lp::kInf;
  for (int t = 0; t < p; ++t) {
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < R; ++j) {
        v.M[t][i][j] = pr.add_variable(0.0, lp::kInf, 0.0, cell("M", t, i, j));
        const double eub = (i != j && inst.allow_relocation) ? lp::kInf : 0.0;
        v.E[t][i][j] = pr.add_variable(0.0, eub, i != j ? -inst.alpha : 0.0, cell("E", t, i, j));
        v.Ld[t][i][j] = pr.add_variable(0.0, lp::kInf, 0.0, cell("Ld", t, i, j));
      }
    for (int r = 0; r < R; ++r) {
      v.Ls[t][r] = pr.add_variable(0.0, lp::kInf, 0.0, cell("Ls", t, r));
      v.Nd[t][r] = pr.add_variable(free_lb, lp::kInf, 0.0, cell("Nd", t, r));
      v.Ns[t][r] = pr.add_variable(free_lb, lp::kInf, 0.0, cell("Ns", t, r));
      v.F[t][r] = pr.add_variable(free_lb, lp::kInf, 1.0, cell("F", t, r));
      v.D[t][r] = pr.add_variable(0.0, lp::kInf, -inst.beta, cell("D", t, r));
      v.Et[t][r] = pr.add_variable(free_lb, lp::kInf, 0.0, cell("Et", t, r));
      v.Ec[t][r] = pr.add_variable(free_lb, lp::kInf, 0.0, cell("Ec", t, r));
      v.Ot[t][r] = pr.add_variable(free_lb, lp::kInf, 0.0, cell("Ot", t, r));
      v.Oc[t][r] = pr.add_variable(free_lb, lp::kInf, 0.0, cell("Oc", t, r));
    }
  }
  return v;
}

}  // namespace

lp::LpProblem build_full_lp(const SlmInstance& inst, const Pattern* pattern) {
  inst.validate();
  const int p = inst.intervals(), R = inst.zone_count();
  const auto& fc = inst.forecasts;
  lp::LpProblem pr;
  pr.sense = lp::ObjectiveSense::Maximize;
  const FullLayout v = full_variables(inst, pr);
  const auto GE = RowSense::GreaterEqual, LE = RowSense::LessEqual, EQ = RowSense::Equal;

  for (int t = 0; t < p; ++t) {
    const double keep_s = t > 0 ? 1.0 - fc.drop_supply[t - 1] : 0.0;
    const double keep_d = t > 0 ? 1.0 - fc.drop_demand[t - 1] : 0.0;
    for (int r = 0; r < R; ++r) {
      // Vacant supply: new entries, survivors of the previous interval, arrivals.
      std::vector<Term> vs{{v.Ns[t][r], 1.0}, {v.Et[t][r], -1.0}, {v.Ot[t][r], -1.0}};
      double rhs = fc.supply[t][r];
      if (t == 0) {
        rhs += inst.carry_supply[r];
      } else {
        vs.push_back({v.Ls[t - 1][r], -keep_s});
        for (int j = 0; j < R; ++j)
          if (j != r) vs.push_back({v.E[t - 1][r][j], keep_s});
      }
      pr.add_constraint(vs, EQ, rhs, cell("vacant", t, r));

      pr.add_constraint({{v.Et[t][r], 1.0}, {v.Ec[t][r], -1.0}}, EQ, inst.inflight_relocating[t][r],
                        cell("reloc_arrivals", t, r));
      std::vector<Term> ri{{v.Ec[t][r], 1.0}};
      for (int j = 0; j < R; ++j) {
        const int s = t - inst.lag(j, r);
        if (j != r && s >= 0) ri.push_back({v.E[s][j][r], -1.0});
      }
      pr.add_constraint(ri, EQ, 0.0, cell("reloc_inflow", t, r));

      pr.add_constraint({{v.Ot[t][r], 1.0}, {v.Oc[t][r], -1.0}}, EQ, inst.inflight_occupied[t][r],
                        cell("occupied_arrivals", t, r));
      std::vector<Term> oi{{v.Oc[t][r], 1.0}};
      for (int j = 0; j < R; ++j) {
        const int s = t - inst.lag(j, r);
        if (s >= 0) oi.push_back({v.M[s][j][r], -1.0});
      }
      pr.add_constraint(oi, EQ, 0.0, cell("occupied_inflow", t, r));

      pr.add_constraint({{v.Ns[t][r], 1.0}, {v.Ls[t][r], -1.0}, {v.F[t][r], -1.0}}, EQ, 0.0,
                        cell("supply_split", t, r));

      std::vector<Term> wd{{v.Nd[t][r], 1.0}};
      double wrhs = fc.demand[t][r];
      for (int j = 0; j < R; ++j) {
        if (t == 0)
          wrhs += inst.carry_demand[r][j];
        else
          wd.push_back({v.Ld[t - 1][r][j], -keep_d});
      }
      pr.add_constraint(wd, EQ, wrhs, cell("waiting", t, r));

      std::vector<Term> ds{{v.Nd[t][r], 1.0}, {v.F[t][r], -1.0}};
      for (int j = 0; j < R; ++j) ds.push_back({v.Ld[t][r][j], -1.0});
      pr.add_constraint(ds, EQ, 0.0, cell("demand_split", t, r));

      std::vector<Term> rc{{v.Ls[t][r], -1.0}};
      for (int j = 0; j < R; ++j)
        if (j != r) rc.push_back({v.E[t][r][j], 1.0});
      pr.add_constraint(rc, LE, 0.0, cell("reloc_cap", t, r));

      for (int j = 0; j < R; ++j) {
        const double arrive = fc.demand[t][r] * fc.transition[t][r][j];
        std::vector<Term> mc{{v.M[t][r][j], 1.0}};
        std::vector<Term> ud{{v.Ld[t][r][j], 1.0}, {v.M[t][r][j], 1.0}};
        double crhs = arrive;
        if (t == 0) {
          crhs += inst.carry_demand[r][j];
        } else {
          mc.push_back({v.Ld[t - 1][r][j], -keep_d});
          ud.push_back({v.Ld[t - 1][r][j], -keep_d});
        }
        pr.add_constraint(mc, LE, crhs, cell("match_cap", t, r, j));
        pr.add_constraint(ud, EQ, crhs, cell("unmatched_demand", t, r, j));
      }

      std::vector<Term> ms{{v.F[t][r], 1.0}};
      for (int j = 0; j < R; ++j) ms.push_back({v.M[t][r][j], -1.0});
      pr.add_constraint(ms, EQ, 0.0, cell("matched_sum", t, r));
      pr.add_constraint({{v.F[t][r], 1.0}, {v.Nd[t][r], -1.0}}, LE, 0.0, cell("match_le_demand", t, r));
      pr.add_constraint({{v.F[t][r], 1.0}, {v.Ns[t][r], -1.0}}, LE, 0.0, cell("match_le_supply", t, r));

      if (pattern) {
        const int ad = (*pattern)[t][r];
        pr.add_constraint({{v.F[t][r], 1.0}, {v.Nd[t][r], -1.0}}, GE, -inst.big_m * (1 - ad),
                          cell("full_demand", t, r));
        pr.add_constraint({{v.F[t][r], 1.0}, {v.Ns[t][r], -1.0}}, GE, -inst.big_m * ad, cell("full_supply", t, r));
      }

      // D >= +-(gap_r - mean gap)
      std::vector<Term> pos{{v.D[t][r], 1.0}}, neg{{v.D[t][r], 1.0}};
      for (int i = 0; i < R; ++i) {
        const double w = (i == r ? 1.0 : 0.0) - 1.0 / R;
        pos.push_back({v.Ns[t][i], -w});
        pos.push_back({v.Nd[t][i], w});
        neg.push_back({v.Ns[t][i], w});
        neg.push_back({v.Nd[t][i], -w});
      }
      pr.add_constraint(pos, GE, 0.0, cell("imbalance_pos", t, r));
      pr.add_constraint(neg, GE, 0.0, cell("imbalance_neg", t, r));
    }
  }
  return pr;
}

std::map<std::string, int> constraint_family_counts(const lp::LpProblem& full) {
  std::map<std::string, int> out;
  for (const auto& row : full.rows) ++out[row.name.substr(0, row.name.find('['))];
  return out;
}

SlmSolution exact_solve(const SlmInstance& inst, int cell_limit) {
  inst.validate();
  const int p = inst.intervals(), R = inst.zone_count();
  const int cells = p * R;
  if (cells > cell_limit || cells >= 31)
    throw CellLimitExceeded("exact solve needs " + std::to_string(cells) + " cells, limit is " +
                            std::to_string(cell_limit));
  std::optional<SlmSolution> best;
  Pattern a = make_matrix<int>(p, R, 0);
  for (long bits = 0; bits < (1L << cells); ++bits) {
    for (int t = 0; t < p; ++t)
      for (int r = 0; r < R; ++r) a[t][r] = static_cast<int>((bits >> (t * R + r)) & 1);
    auto sol = solve_compact(inst, nullptr, &a);
    if (sol && (!best || sol->objective > best->objective + 1e-9)) best = std::move(sol);
  }
  if (!best) throw std::runtime_error("no full-matching pattern is feasible");
  return *best;
}

std::vector<std::string> check_solution(const SlmInstance& inst, const SlmSolution& sol, double tol) {
  const int p = inst.intervals(), R = inst.zone_count();
  std::vector<std::string> bad;
  auto shaped = [&](const auto& m, bool cube) {
    if (static_cast<int>(m.size()) != p) return false;
    for (const auto& row : m) {
      if (static_cast<int>(row.size()) != R) return false;
      if constexpr (requires { row[0].size(); })
        if (cube)
          for (const auto& inner : row)
            if (static_cast<int>(inner.size()) != R) return false;
    }
    return true;
  };
  if (!shaped(sol.M, true) || !shaped(sol.E, true) || !shaped(sol.Ld, true) || !shaped(sol.Ls, false) ||
      !shaped(sol.Nd, false) || !shaped(sol.Ns, false) || !shaped(sol.F, false) || !shaped(sol.D, false) ||
      !shaped(sol.Ad, false) || !shaped(sol.As, false))
    return {"shape"};

  for (int t = 0; t < p; ++t)
    for (int r = 0; r < R; ++r) {
      const int ad = sol.Ad[t][r], as = sol.As[t][r];
      if ((ad != 0 && ad != 1) || (as != 0 && as != 1)) bad.push_back(cell("binary", t, r));
      if (ad + as != 1) bad.push_back(cell("one_mode", t, r));
    }

  lp::LpProblem full = build_full_lp(inst, &sol.Ad);
  FullLayout v;
  {
    lp::LpProblem scratch;
    v = full_variables(inst, scratch);
  }
  std::vector<double> x(full.variable_count(), 0.0);
  for (int t = 0; t < p; ++t) {
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < R; ++j) {
        x[v.M[t][i][j]] = sol.M[t][i][j];
        x[v.E[t][i][j]] = sol.E[t][i][j];
        x[v.Ld[t][i][j]] = sol.Ld[t][i][j];
      }
    for (int r = 0; r < R; ++r) {
      x[v.Ls[t][r]] = sol.Ls[t][r];
      x[v.Nd[t][r]] = sol.Nd[t][r];
      x[v.Ns[t][r]] = sol.Ns[t][r];
      x[v.F[t][r]] = sol.F[t][r];
      x[v.D[t][r]] = sol.D[t][r];
      double ec = 0.0, oc = 0.0;
      for (int j = 0; j < R; ++j) {
        const int s = t - inst.lag(j, r);
        if (s < 0) continue;
        oc += sol.M[s][j][r];
        if (j != r) ec += sol.E[s][j][r];
      }
      x[v.Ec[t][r]] = ec;
      x[v.Et[t][r]] = ec + inst.inflight_relocating[t][r];
      x[v.Oc[t][r]] = oc;
      x[v.Ot[t][r]] = oc + inst.inflight_occupied[t][r];
    }
  }
  for (int k = 0; k < full.variable_count(); ++k) {
    const double scale = tol * (1.0 + std::abs(x[k]));
    if (!std::isfinite(x[k]) || x[k] < full.lower[k] - scale || x[k] > full.upper[k] + scale)
      bad.push_back("bound:" + full.names[k]);
  }
  for (const auto& row : full.rows) {
    double lhs = 0.0;
    for (const auto& term : row.terms) lhs += term.coef * x[term.var];
    const double slack = tol * (1.0 + std::abs(row.rhs));
    const bool ok = row.sense == RowSense::LessEqual      ? lhs <= row.rhs + slack
                    : row.sense == RowSense::GreaterEqual ? lhs >= row.rhs - slack
                                                          : std::abs(lhs - row.rhs) <= slack;
    if (!ok) bad.push_back(row.name);
  }
  return bad;
}

std::string instance_to_json(const SlmInstance& inst) {
  nlohmann::ordered_json j;
  j["layout_version"] = 1;
  j["k"] = inst.k;
  j["zones"] = {{"zone_count", inst.zones.zone_count},
                {"travel_intervals", inst.zones.travel_intervals},
                {"distance_km", inst.zones.distance_km}};
  const auto& fc = inst.forecasts;
  j["forecasts"] = {{"demand", fc.demand},
                    {"supply", fc.supply},
                    {"transition", fc.transition},
                    {"drop_demand", fc.drop_demand},
                    {"drop_supply", fc.drop_supply}};
  j["carry_demand"] = inst.carry_demand;
  j["carry_supply"] = inst.carry_supply;
  j["inflight_relocating"] = inst.inflight_relocating;
  j["inflight_occupied"] = inst.inflight_occupied;
  j["alpha"] = inst.alpha;
  j["beta"] = inst.beta;
  j["big_m"] = inst.big_m;
  j["allow_relocation"] = inst.allow_relocation;
  return j.dump();
}

SlmInstance instance_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("instance json: ") + e.what());
  }
  try {
    SlmInstance in;
    in.k = j.value("k", 0);
    const auto& z = j.at("zones");
    z.at("zone_count").get_to(in.zones.zone_count);
    z.at("travel_intervals").get_to(in.zones.travel_intervals);
    z.at("distance_km").get_to(in.zones.distance_km);
    const auto& f = j.at("forecasts");
    f.at("demand").get_to(in.forecasts.demand);
    f.at("supply").get_to(in.forecasts.supply);
    f.at("transition").get_to(in.forecasts.transition);
    f.at("drop_demand").get_to(in.forecasts.drop_demand);
    f.at("drop_supply").get_to(in.forecasts.drop_supply);
    const int R = in.zones.zone_count, p = in.forecasts.intervals();
    in.carry_demand = j.contains("carry_demand") ? j["carry_demand"].get<Matrix<double>>()
                                                 : make_matrix<double>(R, R, 0.0);
    in.carry_supply = j.contains("carry_supply") ? j["carry_supply"].get<std::vector<double>>()
                                                 : std::vector<double>(R, 0.0);
    in.inflight_relocating = j.contains("inflight_relocating") ? j["inflight_relocating"].get<Matrix<double>>()
                                                               : make_matrix<double>(p, R, 0.0);
    in.inflight_occupied = j.contains("inflight_occupied") ? j["inflight_occupied"].get<Matrix<double>>()
                                                           : make_matrix<double>(p, R, 0.0);
    in.alpha = j.value("alpha", 0.0);
    in.beta = j.value("beta", 0.0);
    in.allow_relocation = j.value("allow_relocation", true);
    in.big_m = j.contains("big_m") ? j["big_m"].get<double>() : in.default_big_m();
    in.validate();
    return in;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("instance json: ") + e.what());
  }
}

std::string solution_to_json(const SlmSolution& s) {
  nlohmann::ordered_json j;
  j["objective"] = s.objective;
  j["M"] = s.M;
  j["E"] = s.E;
  j["Ld"] = s.Ld;
  j["Ls"] = s.Ls;
  j["Nd"] = s.Nd;
  j["Ns"] = s.Ns;
  j["F"] = s.F;
  j["D"] = s.D;
  j["Ad"] = s.Ad;
  j["As"] = s.As;
  return j.dump();
}

SlmSolution solution_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SlmSolution s;
    j.at("objective").get_to(s.objective);
    j.at("M").get_to(s.M);
    j.at("E").get_to(s.E);
    j.at("Ld").get_to(s.Ld);
    j.at("Ls").get_to(s.Ls);
    j.at("Nd").get_to(s.Nd);
    j.at("Ns").get_to(s.Ns);
    j.at("F").get_to(s.F);
    j.at("D").get_to(s.D);
    j.at("Ad").get_to(s.Ad);
    j.at("As").get_to(s.As);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("solution json: ") + e.what());
  }
}

}  // namespace mma::slm
