#include "mma/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace mma::forecast {

void Forecasts::validate(int zone_count) const {
  const int p = intervals();
  if (p == 0) throw InvalidInput("forecasts: empty window");
  auto check_rows = [&](const Matrix<double>& m, const char* what) {
    if (static_cast<int>(m.size()) != p) throw InvalidInput(std::string("forecasts: ") + what + " window mismatch");
    for (const auto& row : m) {
      if (static_cast<int>(row.size()) != zone_count) throw InvalidInput(std::string("forecasts: ") + what + " zone mismatch");
      for (double v : row)
        if (!std::isfinite(v) || v < 0.0) throw InvalidInput(std::string("forecasts: ") + what + " must be >= 0");
    }
  };
  check_rows(demand, "demand");
  check_rows(supply, "supply");
  if (static_cast<int>(transition.size()) != p) throw InvalidInput("forecasts: transition window mismatch");
  for (const auto& b : transition) {
    if (static_cast<int>(b.size()) != zone_count) throw InvalidInput("forecasts: transition zone mismatch");
    for (const auto& row : b) {
      if (static_cast<int>(row.size()) != zone_count) throw InvalidInput("forecasts: transition zone mismatch");
      double s = 0.0;
      for (double v : row) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidInput("forecasts: transition entries must be >= 0");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9) throw InvalidInput("forecasts: transition rows must sum to 1");
    }
  }
  for (const auto* mu : {&drop_demand, &drop_supply}) {
    if (static_cast<int>(mu->size()) != p) throw InvalidInput("forecasts: attrition window mismatch");
    for (double v : *mu)
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("forecasts: attrition must lie in [0,1]");
  }
}

double LassoModel::predict(const std::vector<double>& f) const {
  if (f.size() != coef.size()) throw InvalidInput("lasso: feature length mismatch");
  double s = intercept;
  for (std::size_t j = 0; j < f.size(); ++j) s += coef[j] * f[j];
  return s;
}

LassoModel fit_lasso(const Matrix<double>& x, const std::vector<double>& y, double l1, double tol, int max_iter,
                     std::vector<double>* trace) {
  const std::size_t n = y.size();
  if (n == 0 || x.size() != n) throw InvalidInput("lasso: need matching non-empty X and y");
  if (!(l1 >= 0.0)) throw InvalidInput("lasso: l1 must be >= 0");
  const std::size_t m = x[0].size();
  for (const auto& row : x)
    if (row.size() != m) throw InvalidInput("lasso: ragged feature matrix");

  // Column-major centred copy.
  std::vector<double> mean(m, 0.0);
  for (const auto& row : x)
    for (std::size_t j = 0; j < m; ++j) mean[j] += row[j];
  for (auto& v : mean) v /= static_cast<double>(n);
  const double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<std::vector<double>> col(m, std::vector<double>(n));
  std::vector<double> sq(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      col[j][i] = x[i][j] - mean[j];
      sq[j] += col[j][i] * col[j][i];
    }
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - ymean;

  LassoModel model;
  model.l1 = l1;
  model.coef.assign(m, 0.0);
  auto& z = model.coef;
  for (int sweep = 0; sweep < max_iter; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (sq[j] <= 1e-12 * n) continue;
      double rho = 0.0;
      const auto& c = col[j];
      for (std::size_t i = 0; i < n; ++i) rho += c[i] * r[i];
      rho += sq[j] * z[j];
      const double nz = soft_threshold(rho, l1 / 2.0) / sq[j];
      const double dz = nz - z[j];
      if (dz != 0.0) {
        for (std::size_t i = 0; i < n; ++i) r[i] -= c[i] * dz;
        z[j] = nz;
        max_change = std::max(max_change, std::abs(dz));
      }
    }
    model.sweeps = sweep + 1;
    if (trace) {
      double obj = 0.0;
      for (double v : r) obj += v * v;
      for (double v : z) obj += l1 * std::abs(v);
      trace->push_back(obj);
    }
    if (max_change < tol) {
      model.converged = true;
      break;
    }
  }
  model.intercept = ymean;
  for (std::size_t j = 0; j < m; ++j) model.intercept -= z[j] * mean[j];
  return model;
}

double lasso_objective(const LassoModel& m, const Matrix<double>& x, const std::vector<double>& y) {
  double obj = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = m.predict(x[i]) - y[i];
    obj += e * e;
  }
  for (double v : m.coef) obj += m.l1 * std::abs(v);
  return obj;
}

const char* to_string(Target t) { return t == Target::Demand ? "demand" : "supply"; }

int feature_count(Target t) { return t == Target::Demand ? 4 + kRecentLags * 5 : 2 * kRecentLags + 1; }

int required_past_days(Target t) { return t == Target::Demand ? 4 : 1; }

namespace {

double count_at(const DayCounts& day, int interval, int zone) {
  if (interval < 0 || interval >= static_cast<int>(day.size())) return 0.0;
  return day[interval][zone];
}

}  // namespace

std::vector<double> features(Target target, const std::vector<DayCounts>& past_days, const DayCounts& today, int k,
                             int h, int zone) {
  const int need = required_past_days(target);
  if (static_cast<int>(past_days.size()) < need)
    throw InvalidInput("forecast: " + std::to_string(need) + " past days required, got " +
                       std::to_string(past_days.size()));
  auto day = [&](int i) -> const DayCounts& { return i == 0 ? today : past_days[past_days.size() - i]; };
  std::vector<double> f;
  f.reserve(feature_count(target));
  if (target == Target::Demand) {
    for (int i = 1; i <= 4; ++i) f.push_back(count_at(day(i), k + h, zone));
    for (int i = 0; i <= 4; ++i)
      for (int j = 1; j <= kRecentLags; ++j) f.push_back(count_at(day(i), k - j, zone));
  } else {
    for (int j = 1; j <= kRecentLags; ++j) f.push_back(count_at(day(0), k - j, zone));
    for (int j = 1; j <= kRecentLags; ++j) f.push_back(count_at(day(1), k - j, zone));
    f.push_back(count_at(day(1), k + h, zone));
  }
  return f;
}

ForecastModel fit_forecaster(Target target, const std::vector<DayCounts>& days, int horizon, double l1,
                             bool pooled) {
  const int need = required_past_days(target);
  if (static_cast<int>(days.size()) <= need)
    throw InvalidInput("forecast: " + std::to_string(need + 1) + " history days required (" + std::to_string(need) +
                       " lag days plus one training day), got " + std::to_string(days.size()));
  if (horizon < 1) throw InvalidInput("forecast: horizon must be >= 1");
  const int intervals = static_cast<int>(days[0].size());
  const int zones = intervals > 0 ? static_cast<int>(days[0][0].size()) : 0;
  ForecastModel out;
  out.target = target;
  out.l1 = l1;
  out.pooled = pooled;
  out.zone_count = zones;
  out.models.resize(horizon);
  for (int h = 0; h < horizon; ++h) {
    const int groups = pooled ? 1 : zones;
    for (int gidx = 0; gidx < groups; ++gidx) {
      Matrix<double> x;
      std::vector<double> y;
      for (std::size_t d = need; d < days.size(); ++d) {
        const std::vector<DayCounts> past(days.begin(), days.begin() + static_cast<long>(d));
        for (int k = 0; k + h < intervals; ++k) {
          for (int r = 0; r < zones; ++r) {
            if (!pooled && r != gidx) continue;
            x.push_back(features(target, past, days[d], k, h, r));
            y.push_back(days[d][k + h][r]);
          }
        }
      }
      out.models[h].push_back(fit_lasso(x, y, l1, 1e-7, 5000));
    }
  }
  return out;
}

WindowForecast predict_window(const ForecastModel& model, const std::vector<DayCounts>& past_days,
                              const DayCounts& today, int k, int p) {
  if (p > model.horizon()) throw InvalidInput("forecast: window longer than the fitted horizon");
  const int zones = model.zone_count;
  WindowForecast out;
  out.values = make_matrix<double>(p, zones, 0.0);
  const int need = required_past_days(model.target);
  if (static_cast<int>(past_days.size()) < need) {
    out.fallback = true;
    out.warning = "insufficient history: using same-interval mean of " + std::to_string(past_days.size()) + " days";
    for (int h = 0; h < p; ++h)
      for (int r = 0; r < zones; ++r) {
        double s = 0.0;
        for (const auto& d : past_days) s += count_at(d, k + h, r);
        out.values[h][r] = past_days.empty() ? 0.0 : s / past_days.size();
      }
    return out;
  }
  for (int h = 0; h < p; ++h)
    for (int r = 0; r < zones; ++r)
      out.values[h][r] = std::max(0.0, model.at(h, r).predict(features(model.target, past_days, today, k, h, r)));
  return out;
}

Matrix<double> estimate_transition(const Matrix<double>& od) {
  const std::size_t R = od.size();
  Matrix<double> b(R, std::vector<double>(R, 0.0));
  for (std::size_t i = 0; i < R; ++i) {
    if (od[i].size() != R) throw InvalidInput("transition: count matrix must be square");
    double s = 0.0;
    for (double v : od[i]) {
      if (!std::isfinite(v) || v < 0.0) throw InvalidInput("transition: counts must be >= 0");
      s += v;
    }
    for (std::size_t j = 0; j < R; ++j) b[i][j] = s > 0.0 ? od[i][j] / s : 1.0 / static_cast<double>(R);
  }
  return b;
}

double attrition_rate(double phi_s, double dt_s) {
  if (!(phi_s > 0.0)) throw InvalidInput("attrition: mean patience must be > 0");
  if (std::isinf(phi_s)) return 0.0;
  return 1.0 - std::exp(-dt_s / phi_s);
}

double estimate_phi(const std::vector<double>& s) {
  if (s.empty()) throw InvalidInput("attrition: no patience samples");
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

std::vector<double> estimate_attrition(const std::vector<std::pair<double, double>>& samples,
                                       const std::vector<double>& band_edges_s, int strategic_interval_s,
                                       int intervals_per_day) {
  if (band_edges_s.empty() || band_edges_s[0] != 0.0) throw InvalidInput("attrition: bands must start at 0");
  const std::size_t nb = band_edges_s.size();
  auto band_of = [&](double t) {
    std::size_t b = 0;
    while (b + 1 < nb && t >= band_edges_s[b + 1]) ++b;
    return b;
  };
  std::vector<std::vector<double>> per(nb);
  for (const auto& [t, w] : samples) per[band_of(t)].push_back(w);
  std::vector<double> phi(nb);
  for (std::size_t b = 0; b < nb; ++b) phi[b] = estimate_phi(per[b]);
  std::vector<double> mu(intervals_per_day);
  for (int k = 0; k < intervals_per_day; ++k)
    mu[k] = attrition_rate(phi[band_of(static_cast<double>(k) * strategic_interval_s)], strategic_interval_s);
  return mu;
}

double error_rate(const std::vector<double>& p, const std::vector<double>& y) {
  if (p.size() != y.size()) throw InvalidInput("error rate: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    num += std::abs(p[i] - y[i]);
    den += y[i];
  }
  if (!(den > 0.0)) throw UndefinedMetric("error rate: actual values sum to zero");
  return num / den;
}

std::string model_to_json(const ForecastModel& m) {
  nlohmann::ordered_json j;
  j["layout_version"] = 1;
  j["target"] = to_string(m.target);
  j["features"] = feature_count(m.target);
  j["l1"] = m.l1;
  j["pooled"] = m.pooled;
  j["zone_count"] = m.zone_count;
  auto& hs = j["horizons"] = nlohmann::ordered_json::array();
  for (const auto& per_h : m.models) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& lm : per_h) arr.push_back({{"intercept", lm.intercept}, {"coef", lm.coef}});
    hs.push_back(arr);
  }
  return j.dump(2);
}

ForecastModel model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("layout_version").get<int>() != 1) throw InvalidInput("forecast model: unsupported layout version");
  ForecastModel m;
  const auto target = j.at("target").get<std::string>();
  if (target == "demand") m.target = Target::Demand;
  else if (target == "supply") m.target = Target::Supply;
  else throw InvalidInput("forecast model: unknown target " + target);
  m.l1 = j.at("l1").get<double>();
  m.pooled = j.at("pooled").get<bool>();
  m.zone_count = j.at("zone_count").get<int>();
  for (const auto& per_h : j.at("horizons")) {
    std::vector<LassoModel> v;
    for (const auto& e : per_h) {
      LassoModel lm;
      lm.l1 = m.l1;
      lm.intercept = e.at("intercept").get<double>();
      lm.coef = e.at("coef").get<std::vector<double>>();
      if (static_cast<int>(lm.coef.size()) != feature_count(m.target))
        throw InvalidInput("forecast model: coefficient count does not match the layout");
      lm.converged = true;
      v.push_back(std::move(lm));
    }
    m.models.push_back(std::move(v));
  }
  return m;
}

}  // namespace mma::forecast
