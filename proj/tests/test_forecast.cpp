#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mma/forecast.hpp"
#include "oracles/design.hpp"

using namespace mma;
using namespace mma::forecast;

using oracle::orthonormal_design;

TEST_CASE("lasso exact least squares") {
  Matrix<double> x;
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    x.push_back({static_cast<double>(i)});
    y.push_back(2.0 * i);
  }
  const auto m = fit_lasso(x, y, 0.0, 1e-12);
  CHECK(m.coef[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(m.intercept == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("lasso full shrinkage returns the mean") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  Matrix<double> x(30, std::vector<double>(4));
  std::vector<double> y(30);
  for (int i = 0; i < 30; ++i) {
    for (auto& v : x[i]) v = u(rng);
    y[i] = u(rng);
  }
  const auto m = fit_lasso(x, y, 1e12);
  for (double c : m.coef) CHECK(c == 0.0);
  CHECK(m.intercept == doctest::Approx(std::accumulate(y.begin(), y.end(), 0.0) / 30.0));
}

TEST_CASE("lasso errors and constant columns") {
  CHECK_THROWS_AS(fit_lasso({}, {}, 1.0), InvalidInput);
  Matrix<double> x{{1.0, 0.0}, {1.0, 1.0}, {1.0, 2.0}};
  const auto m = fit_lasso(x, {1.0, 2.0, 3.0}, 0.0, 1e-12);
  CHECK(m.coef[0] == 0.0);
  CHECK(m.coef[1] == doctest::Approx(1.0));
}

TEST_CASE("lasso matches the soft-threshold closed form on orthonormal designs") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 40, m = 6;
    const auto x = orthonormal_design(rng, n, m);
    std::vector<double> y(n);
    for (auto& v : y) v = g(rng);
    const double l1 = 0.5 + trial * 0.4;
    const auto fit = fit_lasso(x, y, l1, 1e-14);
    for (int j = 0; j < m; ++j) {
      double xty = 0.0;
      for (int i = 0; i < n; ++i) xty += x[i][j] * y[i];
      CHECK(fit.coef[j] == doctest::Approx(soft_threshold(xty, l1 / 2.0)).epsilon(1e-6));
    }
  }
}

TEST_CASE("lasso objective is monotone per sweep and l1 path shrinks") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix<double> x(80, std::vector<double>(8));
  std::vector<double> y(80);
  for (int i = 0; i < 80; ++i) {
    for (auto& v : x[i]) v = g(rng);
    x[i][1] = x[i][0] + 0.1 * g(rng);  // correlated pair slows convergence
    y[i] = 3 * x[i][0] - 2 * x[i][3] + g(rng);
  }
  std::vector<double> trace;
  const auto fit = fit_lasso(x, y, 2.0, 1e-10, 10000, &trace);
  REQUIRE(trace.size() > 2);
  for (std::size_t s = 1; s < trace.size(); ++s) CHECK(trace[s] <= trace[s - 1] + 1e-9);
  CHECK(trace.back() == doctest::Approx(lasso_objective(fit, x, y)).epsilon(1e-9));
  double prev = std::numeric_limits<double>::infinity();
  for (double l1 : {0.1, 5.0, 50.0, 500.0}) {
    const auto f = fit_lasso(x, y, l1, 1e-10);
    double norm = 0.0;
    for (double c : f.coef) norm += std::abs(c);
    CHECK(norm <= prev + 1e-9);
    prev = norm;
  }
}

TEST_CASE("feature layout sizes") {
  CHECK(feature_count(Target::Demand) == 34);
  CHECK(feature_count(Target::Supply) == 13);
  std::vector<DayCounts> past(4, make_matrix<double>(144, 2, 1.0));
  const auto today = make_matrix<double>(144, 2, 2.0);
  const auto f = features(Target::Demand, past, today, 10, 0, 1);
  REQUIRE(f.size() == 34);
  CHECK(f[0] == 1.0);
  CHECK(f[4] == 2.0);   // today, k-1
  CHECK(f[10] == 1.0);  // last week, k-1
  // Intervals before midnight are zero.
  const auto early = features(Target::Supply, past, today, 0, 0, 0);
  CHECK(early[0] == 0.0);
  CHECK(early[12] == 1.0);
}

TEST_CASE("predict_window basics") {
  const int zones = 2;
  std::vector<DayCounts> zero_days(6, make_matrix<double>(144, zones, 0.0));
  auto model = fit_forecaster(Target::Demand, zero_days, 3, 1.0);
  auto w = predict_window(model, std::vector<DayCounts>(zero_days.begin(), zero_days.begin() + 4), zero_days[4], 20, 3);
  for (const auto& row : w.values)
    for (double v : row) CHECK(v == 0.0);

  // Hand-built model: unit weight on today's k-1 feature.
  ForecastModel unit;
  unit.target = Target::Demand;
  unit.zone_count = zones;
  LassoModel lm;
  lm.coef.assign(34, 0.0);
  lm.coef[4] = 1.0;
  unit.models = {{lm}};
  auto today = make_matrix<double>(144, zones, 0.0);
  today[19][0] = 7.0;
  w = predict_window(unit, zero_days, today, 20, 1);
  CHECK(w.values[0][0] == 7.0);

  // Fallback with too little history.
  std::vector<DayCounts> two(2, make_matrix<double>(144, zones, 3.0));
  w = predict_window(model, two, today, 5, 2);
  CHECK(w.fallback);
  CHECK(w.values[1][1] == 3.0);
  CHECK_THROWS_AS(fit_forecaster(Target::Demand, two, 3, 1.0), InvalidInput);
}

TEST_CASE("stationary history forecasts its level") {
  std::mt19937_64 rng(12);
  std::poisson_distribution<int> pois(20.0);
  std::vector<DayCounts> days(8, make_matrix<double>(144, 3, 0.0));
  for (auto& d : days)
    for (auto& row : d)
      for (auto& v : row) v = pois(rng);
  auto model = fit_forecaster(Target::Demand, days, 2, 10.0);
  const std::vector<DayCounts> past(days.begin() + 3, days.begin() + 7);
  const auto w = predict_window(model, past, days[7], 60, 2);
  for (const auto& row : w.values)
    for (double v : row) CHECK(std::abs(v - 20.0) < 0.05 * 20.0 + 1.0);
}

TEST_CASE("transition estimation") {
  const auto b = estimate_transition({{2, 3, 5}, {0, 0, 0}, {1, 1, 2}});
  CHECK(b[0][0] == doctest::Approx(0.2));
  CHECK(b[0][1] == doctest::Approx(0.3));
  CHECK(b[0][2] == doctest::Approx(0.5));
  for (double v : b[1]) CHECK(v == doctest::Approx(1.0 / 3.0));
  for (const auto& row : b) CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-9);
}

TEST_CASE("attrition") {
  CHECK(attrition_rate(600, 600) == doctest::Approx(1.0 - std::exp(-1.0)));
  CHECK(attrition_rate(std::numeric_limits<double>::infinity(), 600) == 0.0);
  CHECK(attrition_rate(1e15, 600) < 1e-9);
  CHECK_THROWS_AS(attrition_rate(0.0, 600), InvalidInput);
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> ex(1.0 / 1200.0);
  std::vector<double> s(10000);
  for (auto& v : s) v = ex(rng);
  CHECK(std::abs(estimate_phi(s) - 1200.0) < 0.05 * 1200.0);

  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < 2000; ++i) samples.push_back({i * 10.0, 600.0});
  for (int i = 0; i < 2000; ++i) samples.push_back({50000.0 + i, 1200.0});
  const auto mu = estimate_attrition(samples, {0.0, 43200.0}, 600, 144);
  CHECK(mu[0] == doctest::Approx(1.0 - std::exp(-1.0)));
  CHECK(mu[100] == doctest::Approx(1.0 - std::exp(-0.5)));
}

TEST_CASE("error rate") {
  CHECK(error_rate({1, 2}, {1, 2}) == 0.0);
  CHECK(error_rate({3, 3}, {2, 4}) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(error_rate({1}, {0}), UndefinedMetric);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<double> p(50), y(50);
  double num = 0, den = 0;
  for (int i = 0; i < 50; ++i) {
    p[i] = u(rng);
    y[i] = u(rng);
    num += std::abs(p[i] - y[i]);
    den += y[i];
  }
  CHECK(error_rate(p, y) == doctest::Approx(num / den));
}

TEST_CASE("model json round trip") {
  std::mt19937_64 rng(12);
  std::poisson_distribution<int> pois(5.0);
  std::vector<DayCounts> days(3, make_matrix<double>(144, 2, 0.0));
  for (auto& d : days)
    for (auto& row : d)
      for (auto& v : row) v = pois(rng);
  const auto m = fit_forecaster(Target::Supply, days, 2, 1.0);
  const auto text = model_to_json(m);
  const auto back = model_from_json(text);
  CHECK(model_to_json(back) == text);
  CHECK(back.at(1, 0).coef == m.at(1, 0).coef);
}
