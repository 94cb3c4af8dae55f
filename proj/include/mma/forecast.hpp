#pragma once

#include <string>
#include <vector>

#include "mma/core.hpp"

namespace mma::forecast {

/// Forecast inputs for one planning window, indexed relative to the window start.
struct Forecasts {
  Matrix<double> demand;      // [t][r]
  Matrix<double> supply;      // [t][r]
  Cube<double> transition;    // [t][i][j]
  std::vector<double> drop_demand;  // [t]
  std::vector<double> drop_supply;  // [t]

  int intervals() const { return static_cast<int>(demand.size()); }
  void validate(int zone_count) const;
};

struct LassoModel {
  std::vector<double> coef;
  double intercept = 0.0;
  double l1 = 0.0;
  int sweeps = 0;
  bool converged = false;

  double predict(const std::vector<double>& features) const;
};

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

/// Cyclic coordinate descent for  sum (y - b - X z)^2 + l1 * |z|_1  with an
/// unpenalized intercept b. X is row-major. Optionally records the objective
/// after every sweep.
LassoModel fit_lasso(const Matrix<double>& x, const std::vector<double>& y, double l1, double tol = 1e-9,
                     int max_iter = 10000, std::vector<double>* trace = nullptr);

double lasso_objective(const LassoModel& m, const Matrix<double>& x, const std::vector<double>& y);

enum class Target { Demand, Supply };
const char* to_string(Target t);

/// Number of same-interval lags, recent lags, and week offsets used per target.
int feature_count(Target t);
constexpr int kRecentLags = 6;

/// Per-interval counts of one day: counts[interval][zone].
using DayCounts = Matrix<double>;

/// Builds the feature vector for interval k + h of `today` in zone r. past_days
/// holds earlier days with the most recent last. Intervals outside the day count as 0.
std::vector<double> features(Target target, const std::vector<DayCounts>& past_days, const DayCounts& today, int k,
                             int h, int zone);

/// Minimum number of past days required by the layout.
int required_past_days(Target t);

struct ForecastModel {
  Target target = Target::Demand;
  double l1 = 0.0;
  bool pooled = true;
  int zone_count = 0;
  /// models[h][z]; one entry per h when pooled.
  std::vector<std::vector<LassoModel>> models;

  int horizon() const { return static_cast<int>(models.size()); }
  const LassoModel& at(int h, int zone) const { return pooled ? models[h][0] : models[h][zone]; }
};

/// Fits one model per look-ahead h over every complete day in `days` that has
/// enough predecessors. Throws InvalidInput with the required lag count when
/// history is too short.
ForecastModel fit_forecaster(Target target, const std::vector<DayCounts>& days, int horizon, double l1,
                             bool pooled = true);

struct WindowForecast {
  Matrix<double> values;  // [h][r], clamped to >= 0
  bool fallback = false;
  std::string warning;
};

/// Predicts intervals k..k+p-1 of `today` (only intervals < k are read).
WindowForecast predict_window(const ForecastModel& model, const std::vector<DayCounts>& past_days,
                              const DayCounts& today, int k, int p);

/// Row-normalised OD frequencies; an all-zero row becomes uniform.
Matrix<double> estimate_transition(const Matrix<double>& od_counts);

/// Share of a pool that leaves within dT when patience is exponential with mean phi.
double attrition_rate(double phi_s, double dt_s);

/// Maximum-likelihood exponential mean (the sample mean).
double estimate_phi(const std::vector<double>& patience_samples);

/// Per-interval attrition over a day from (time, patience) samples, estimating
/// one mean per time-of-day band. band_edges_s are the band starts, first = 0.
std::vector<double> estimate_attrition(const std::vector<std::pair<double, double>>& samples,
                                       const std::vector<double>& band_edges_s, int strategic_interval_s,
                                       int intervals_per_day);

/// sum |p - y| / sum y.
double error_rate(const std::vector<double>& predicted, const std::vector<double>& actual);

std::string model_to_json(const ForecastModel& m);
ForecastModel model_from_json(const std::string& text);

}  // namespace mma::forecast
