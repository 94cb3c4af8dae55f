#include "mma/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mma/core.hpp"

namespace mma::lp {

int LpProblem::add_variable(double lb, double ub, double cost, std::string name) {
  objective.push_back(cost);
  lower.push_back(lb);
  upper.push_back(ub);
  names.push_back(std::move(name));
  return static_cast<int>(objective.size()) - 1;
}

int LpProblem::add_constraint(std::vector<Term> terms, RowSense s, double rhs, std::string name) {
  rows.push_back(Constraint{std::move(terms), s, rhs, std::move(name)});
  return static_cast<int>(rows.size()) - 1;
}

void LpProblem::validate() const {
  const auto n = objective.size();
  if (lower.size() != n || upper.size() != n) throw InvalidInput("LpProblem: bound arrays mismatch");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(objective[j])) throw InvalidInput("LpProblem: non-finite objective coefficient");
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j]) {
      throw InvalidInput("LpProblem: variable bounds must satisfy lower <= upper");
    }
    if (lower[j] == kInf || upper[j] == -kInf) throw InvalidInput("LpProblem: empty variable domain");
  }
  for (const auto& row : rows) {
    if (!std::isfinite(row.rhs)) throw InvalidInput("LpProblem: non-finite right-hand side");
    for (const auto& t : row.terms) {
      if (t.var < 0 || static_cast<std::size_t>(t.var) >= n) throw InvalidInput("LpProblem: bad variable index");
      if (!std::isfinite(t.coef)) throw InvalidInput("LpProblem: non-finite coefficient");
    }
  }
}

double LpProblem::evaluate(std::span<const double> x) const {
  double v = 0.0;
  for (std::size_t j = 0; j < objective.size(); ++j) v += objective[j] * x[j];
  return v;
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
  }
  return "?";
}

double max_violation(const LpProblem& p, std::span<const double> x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < p.objective.size(); ++j) {
    worst = std::max(worst, p.lower[j] - x[j]);
    worst = std::max(worst, x[j] - p.upper[j]);
  }
  for (const auto& row : p.rows) {
    double lhs = 0.0;
    for (const auto& t : row.terms) lhs += t.coef * x[t.var];
    switch (row.sense) {
      case RowSense::LessEqual: worst = std::max(worst, lhs - row.rhs); break;
      case RowSense::GreaterEqual: worst = std::max(worst, row.rhs - lhs); break;
      case RowSense::Equal: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
    }
  }
  return worst;
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kZeroSnap = 1e-13;

enum class StepResult { Optimal, Unbounded, Continue };

// Internally always minimises cost . x subject to [A I Art] x = b.
class RevisedSimplex {
 public:
  RevisedSimplex(const LpProblem& p, const LpOptions& o) : opt_(o) {
    m_ = p.constraint_count();
    n_ = p.variable_count();
    // Column-major copy of A.
    std::vector<int> counts(static_cast<std::size_t>(n_), 0);
    for (const auto& row : p.rows)
      for (const auto& t : row.terms) ++counts[static_cast<std::size_t>(t.var)];
    col_start_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (int j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + counts[j];
    col_row_.resize(static_cast<std::size_t>(col_start_[n_]));
    col_val_.resize(static_cast<std::size_t>(col_start_[n_]));
    std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
    for (int i = 0; i < m_; ++i) {
      for (const auto& t : p.rows[i].terms) {
        const int k = fill[t.var]++;
        col_row_[k] = i;
        col_val_[k] = t.coef;
      }
    }
    total_ = n_ + m_;
    lb_.assign(p.lower.begin(), p.lower.end());
    ub_.assign(p.upper.begin(), p.upper.end());
    b_.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) {
      b_[i] = p.rows[i].rhs;
      switch (p.rows[i].sense) {
        case RowSense::LessEqual: lb_.push_back(0.0); ub_.push_back(kInf); break;
        case RowSense::GreaterEqual: lb_.push_back(-kInf); ub_.push_back(0.0); break;
        case RowSense::Equal: lb_.push_back(0.0); ub_.push_back(0.0); break;
      }
    }
    const double flip = p.sense == ObjectiveSense::Maximize ? -1.0 : 1.0;
    phase2_cost_.assign(static_cast<std::size_t>(total_), 0.0);
    for (int j = 0; j < n_; ++j) phase2_cost_[j] = flip * p.objective[j];
  }

  LpResult run() {
    LpResult res;
    if (m_ == 0) return solve_unconstrained();
    initialise_basis();
    if (!art_sign_.empty()) {
      std::vector<double> cost(static_cast<std::size_t>(total_), 0.0);
      for (int j = n_ + m_; j < total_; ++j) cost[j] = 1.0;
      const auto st = iterate(cost);
      if (st == LpStatus::IterationLimit) return finish(LpStatus::IterationLimit);
      double infeas = 0.0;
      for (int j = n_ + m_; j < total_; ++j) infeas += x_[j];
      double scale = 1.0;
      for (double v : b_) scale = std::max(scale, std::abs(v));
      if (infeas > 10.0 * opt_.feasibility_tol * scale) return finish(LpStatus::Infeasible);
      for (int j = n_ + m_; j < total_; ++j) {
        ub_[j] = 0.0;
        if (pos_[j] < 0) x_[j] = 0.0;
      }
    }
    auto st = iterate(phase2_cost_);
    // Guard against drift: refactor and polish once if the final point is loose.
    if (st == LpStatus::Optimal && residual_norm() > opt_.feasibility_tol) {
      refactor();
      st = iterate(phase2_cost_);
    }
    return finish(st);
  }

 private:
  LpResult solve_unconstrained() {
    x_.assign(static_cast<std::size_t>(n_), 0.0);
    for (int j = 0; j < n_; ++j) {
      const double c = phase2_cost_[j];
      if (c < 0) {
        if (ub_[j] == kInf) return finish(LpStatus::Unbounded);
        x_[j] = ub_[j];
      } else if (c > 0) {
        if (lb_[j] == -kInf) return finish(LpStatus::Unbounded);
        x_[j] = lb_[j];
      } else {
        x_[j] = std::isfinite(lb_[j]) ? lb_[j] : (std::isfinite(ub_[j]) ? ub_[j] : 0.0);
      }
    }
    y_.clear();
    return finish(LpStatus::Optimal);
  }

  void initialise_basis() {
    x_.assign(static_cast<std::size_t>(total_), 0.0);
    for (int j = 0; j < n_; ++j) {
      x_[j] = std::isfinite(lb_[j]) ? lb_[j] : (std::isfinite(ub_[j]) ? ub_[j] : 0.0);
    }
    std::vector<double> resid(b_);
    for (int j = 0; j < n_; ++j) {
      if (x_[j] == 0.0) continue;
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) resid[col_row_[k]] -= col_val_[k] * x_[j];
    }
    head_.assign(static_cast<std::size_t>(m_), -1);
    for (int i = 0; i < m_; ++i) {
      const int s = n_ + i;
      const double r = resid[i];
      if (r >= lb_[s] - opt_.feasibility_tol && r <= ub_[s] + opt_.feasibility_tol) {
        x_[s] = std::clamp(r, lb_[s], ub_[s]);
        head_[i] = s;
      } else {
        const double v = std::clamp(r, lb_[s], ub_[s]);
        x_[s] = v;
        const double rem = r - v;
        art_row_.push_back(i);
        art_sign_.push_back(rem > 0 ? 1.0 : -1.0);
        lb_.push_back(0.0);
        ub_.push_back(kInf);
        x_.push_back(std::abs(rem));
        phase2_cost_.push_back(0.0);
        head_[i] = total_ + static_cast<int>(art_row_.size()) - 1;
      }
    }
    total_ += static_cast<int>(art_row_.size());
    pos_.assign(static_cast<std::size_t>(total_), -1);
    for (int i = 0; i < m_; ++i) pos_[head_[i]] = i;
    binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      const int h = head_[i];
      binv_[idx(i, i)] = h >= n_ + m_ ? art_sign_[h - n_ - m_] : 1.0;
    }
  }

  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * m_ + j; }

  // Column j as (row, value) pairs.
  template <typename F>
  void for_column(int j, F&& f) const {
    if (j < n_) {
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) f(col_row_[k], col_val_[k]);
    } else if (j < n_ + m_) {
      f(j - n_, 1.0);
    } else {
      const int a = j - n_ - m_;
      f(art_row_[a], art_sign_[a]);
    }
  }

  bool refactor() {
    // Gauss-Jordan on B with partial pivoting.
    std::vector<double> bm(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) for_column(head_[i], [&](int r, double v) { bm[idx(r, i)] = v; });
    std::vector<double> inv(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) inv[idx(i, i)] = 1.0;
    for (int c = 0; c < m_; ++c) {
      int piv = c;
      double best = std::abs(bm[idx(c, c)]);
      for (int r = c + 1; r < m_; ++r) {
        const double v = std::abs(bm[idx(r, c)]);
        if (v > best) { best = v; piv = r; }
      }
      if (best < 1e-12) return false;
      if (piv != c) {
        for (int k = 0; k < m_; ++k) {
          std::swap(bm[idx(c, k)], bm[idx(piv, k)]);
          std::swap(inv[idx(c, k)], inv[idx(piv, k)]);
        }
      }
      const double d = 1.0 / bm[idx(c, c)];
      for (int k = 0; k < m_; ++k) { bm[idx(c, k)] *= d; inv[idx(c, k)] *= d; }
      for (int r = 0; r < m_; ++r) {
        if (r == c) continue;
        const double f = bm[idx(r, c)];
        if (f == 0.0) continue;
        for (int k = 0; k < m_; ++k) {
          bm[idx(r, k)] -= f * bm[idx(c, k)];
          inv[idx(r, k)] -= f * inv[idx(c, k)];
        }
      }
    }
    binv_ = std::move(inv);
    recompute_basic_values();
    since_refactor_ = 0;
    return true;
  }

  void recompute_basic_values() {
    std::vector<double> r(b_);
    for (int j = 0; j < total_; ++j) {
      if (pos_[j] >= 0 || x_[j] == 0.0) continue;
      for_column(j, [&](int row, double v) { r[row] -= v * x_[j]; });
    }
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      const double* row = &binv_[idx(i, 0)];
      for (int k = 0; k < m_; ++k) s += row[k] * r[k];
      x_[head_[i]] = s;
    }
  }

  double residual_norm() const {
    std::vector<double> r(b_);
    for (int j = 0; j < total_; ++j) {
      if (x_[j] == 0.0) continue;
      for_column(j, [&](int row, double v) { r[row] -= v * x_[j]; });
    }
    double worst = 0.0;
    for (double v : r) worst = std::max(worst, std::abs(v));
    for (int i = 0; i < m_; ++i) {
      const int h = head_[i];
      worst = std::max({worst, lb_[h] - x_[h], x_[h] - ub_[h]});
    }
    return worst;
  }

  LpStatus iterate(const std::vector<double>& cost) {
    y_.assign(static_cast<std::size_t>(m_), 0.0);
    std::vector<double> alpha(static_cast<std::size_t>(m_));
    bool bland = false;
    int degenerate_run = 0;
    while (true) {
      if (iterations_ >= opt_.max_iterations) return LpStatus::IterationLimit;
      if (since_refactor_ >= opt_.refactor_period) refactor();

      // Duals y = c_B B^-1.
      std::fill(y_.begin(), y_.end(), 0.0);
      for (int i = 0; i < m_; ++i) {
        const double c = cost[head_[i]];
        if (c == 0.0) continue;
        const double* row = &binv_[idx(i, 0)];
        for (int k = 0; k < m_; ++k) y_[k] += c * row[k];
      }

      // Pricing.
      int enter = -1;
      double enter_dir = 0.0;
      double best = 0.0;
      for (int j = 0; j < total_; ++j) {
        if (pos_[j] >= 0 || lb_[j] == ub_[j]) continue;
        double d = cost[j];
        for_column(j, [&](int r, double v) { d -= y_[r] * v; });
        double dir = 0.0;
        if (d < -opt_.optimality_tol && x_[j] < ub_[j] - opt_.feasibility_tol) dir = 1.0;
        else if (d > opt_.optimality_tol && x_[j] > lb_[j] + opt_.feasibility_tol) dir = -1.0;
        if (dir == 0.0) continue;
        if (bland) { enter = j; enter_dir = dir; break; }
        if (std::abs(d) > best) { best = std::abs(d); enter = j; enter_dir = dir; }
      }
      if (enter < 0) return LpStatus::Optimal;

      // alpha = B^-1 a_q.
      std::fill(alpha.begin(), alpha.end(), 0.0);
      for_column(enter, [&](int r, double v) {
        for (int i = 0; i < m_; ++i) alpha[i] += binv_[idx(i, r)] * v;
      });

      // Ratio test. Basic i moves by delta_i = -dir * alpha_i per unit step.
      const double flip_range = ub_[enter] - lb_[enter];
      int leave = -1;
      double theta = kInf;
      if (!bland) {
        double theta_max = kInf;
        for (int i = 0; i < m_; ++i) {
          const double delta = -enter_dir * alpha[i];
          const int h = head_[i];
          if (delta < -kPivotTol && lb_[h] > -kInf) {
            theta_max = std::min(theta_max, (x_[h] - lb_[h] + opt_.feasibility_tol) / -delta);
          } else if (delta > kPivotTol && ub_[h] < kInf) {
            theta_max = std::min(theta_max, (ub_[h] - x_[h] + opt_.feasibility_tol) / delta);
          }
        }
        double best_piv = 0.0;
        for (int i = 0; i < m_; ++i) {
          const double delta = -enter_dir * alpha[i];
          const int h = head_[i];
          double ratio = kInf;
          if (delta < -kPivotTol && lb_[h] > -kInf) ratio = (x_[h] - lb_[h]) / -delta;
          else if (delta > kPivotTol && ub_[h] < kInf) ratio = (ub_[h] - x_[h]) / delta;
          else continue;
          if (ratio <= theta_max && std::abs(delta) > best_piv) {
            best_piv = std::abs(delta);
            leave = i;
            theta = std::max(ratio, 0.0);
          }
        }
      } else {
        for (int i = 0; i < m_; ++i) {
          const double delta = -enter_dir * alpha[i];
          const int h = head_[i];
          double ratio = kInf;
          if (delta < -kPivotTol && lb_[h] > -kInf) ratio = (x_[h] - lb_[h]) / -delta;
          else if (delta > kPivotTol && ub_[h] < kInf) ratio = (ub_[h] - x_[h]) / delta;
          else continue;
          ratio = std::max(ratio, 0.0);
          if (ratio < theta - 1e-12 || (std::abs(ratio - theta) <= 1e-12 && leave >= 0 && h < head_[leave])) {
            theta = ratio;
            leave = i;
          }
        }
      }

      const bool flip = flip_range <= theta;
      if (flip) {
        if (flip_range == kInf) return LpStatus::Unbounded;
        theta = flip_range;
        leave = -1;
      }

      ++iterations_;
      if (theta <= 1e-12) {
        if (++degenerate_run > opt_.degeneracy_trip) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      x_[enter] += enter_dir * theta;
      for (int i = 0; i < m_; ++i) {
        if (alpha[i] != 0.0) x_[head_[i]] -= enter_dir * alpha[i] * theta;
      }
      if (flip) {
        x_[enter] = enter_dir > 0 ? ub_[enter] : lb_[enter];
        continue;
      }

      const int out = head_[leave];
      const double delta_out = -enter_dir * alpha[leave];
      x_[out] = delta_out < 0 ? lb_[out] : ub_[out];
      if (std::abs(x_[out]) < kZeroSnap) x_[out] = 0.0;
      pos_[out] = -1;
      head_[leave] = enter;
      pos_[enter] = leave;

      // Product-form update of the explicit inverse.
      const double piv = alpha[leave];
      double* prow = &binv_[idx(leave, 0)];
      for (int k = 0; k < m_; ++k) prow[k] /= piv;
      for (int i = 0; i < m_; ++i) {
        if (i == leave || alpha[i] == 0.0) continue;
        const double f = alpha[i];
        double* row = &binv_[idx(i, 0)];
        for (int k = 0; k < m_; ++k) row[k] -= f * prow[k];
      }
      ++since_refactor_;
    }
  }

  LpResult finish(LpStatus st) {
    LpResult res;
    res.status = st;
    res.iterations = iterations_;
    if (st == LpStatus::Optimal) {
      res.x.assign(x_.begin(), x_.begin() + n_);
      for (int j = 0; j < n_; ++j) {
        double v = res.x[j];
        if (std::abs(v) < kZeroSnap) v = 0.0;
        // Clamp tiny bound drift.
        if (v < lb_[j] && v > lb_[j] - opt_.feasibility_tol) v = lb_[j];
        if (v > ub_[j] && v < ub_[j] + opt_.feasibility_tol) v = ub_[j];
        res.x[j] = v;
      }
      double obj = 0.0;
      for (int j = 0; j < n_; ++j) obj += phase2_cost_[j] * res.x[j];
      // phase2_cost_ is the minimisation form; undo the flip.
      sense_flip(res, obj);
      res.duals.assign(static_cast<std::size_t>(m_), 0.0);
      for (int i = 0; i < static_cast<int>(y_.size()) && i < m_; ++i) res.duals[i] = y_[i];
      if (maximize_) for (double& d : res.duals) d = -d;
    }
    return res;
  }

  void sense_flip(LpResult& res, double min_obj) const { res.objective = maximize_ ? -min_obj : min_obj; }

 public:
  void set_maximize(bool v) { maximize_ = v; }

 private:
  LpOptions opt_;
  int m_ = 0, n_ = 0, total_ = 0;
  bool maximize_ = false;
  std::vector<int> col_start_, col_row_;
  std::vector<double> col_val_;
  std::vector<double> lb_, ub_, b_, phase2_cost_;
  std::vector<int> art_row_;
  std::vector<double> art_sign_;
  std::vector<double> x_, y_, binv_;
  std::vector<int> head_, pos_;
  int iterations_ = 0;
  int since_refactor_ = 0;
};

}  // namespace

LpResult solve_lp(const LpProblem& problem, const LpOptions& options) {
  problem.validate();
  RevisedSimplex s(problem, options);
  s.set_maximize(problem.sense == ObjectiveSense::Maximize);
  return s.run();
}

std::string write_lp_format(const LpProblem& p) {
  auto name = [&](int j) {
    if (j < static_cast<int>(p.names.size()) && !p.names[j].empty()) return p.names[j];
    return "x" + std::to_string(j);
  };
  auto coef = [](std::ostringstream& os, double c, bool first) {
    if (c < 0) os << (first ? "- " : " - ");
    else os << (first ? "" : " + ");
    os << std::abs(c) << ' ';
  };
  std::ostringstream os;
  os.precision(17);
  os << (p.sense == ObjectiveSense::Maximize ? "Maximize\n" : "Minimize\n") << " obj: ";
  bool first = true;
  for (int j = 0; j < p.variable_count(); ++j) {
    if (p.objective[j] == 0.0) continue;
    coef(os, p.objective[j], first);
    os << name(j);
    first = false;
  }
  if (first) os << "0 " << name(0);
  os << "\nSubject To\n";
  for (int i = 0; i < p.constraint_count(); ++i) {
    const auto& r = p.rows[i];
    os << ' ' << (r.name.empty() ? "c" + std::to_string(i) : r.name) << ": ";
    first = true;
    for (const auto& t : r.terms) {
      coef(os, t.coef, first);
      os << name(t.var);
      first = false;
    }
    if (first) os << "0 " << name(0);
    os << (r.sense == RowSense::LessEqual ? " <= " : r.sense == RowSense::GreaterEqual ? " >= " : " = ")
       << r.rhs << '\n';
  }
  os << "Bounds\n";
  for (int j = 0; j < p.variable_count(); ++j) {
    const double lo = p.lower[j], hi = p.upper[j];
    if (lo == -kInf && hi == kInf) os << ' ' << name(j) << " free\n";
    else if (lo == hi) os << ' ' << name(j) << " = " << lo << '\n';
    else {
      os << ' ';
      if (lo == -kInf) os << "-inf";
      else os << lo;
      os << " <= " << name(j) << " <= ";
      if (hi == kInf) os << "+inf";
      else os << hi;
      os << '\n';
    }
  }
  os << "End\n";
  return os.str();
}

}  // namespace mma::lp
