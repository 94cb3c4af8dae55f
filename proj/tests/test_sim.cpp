#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mma/sim.hpp"

using namespace mma;
using namespace mma::sim;

namespace {

// Four-hour day on the toy geometry, small enough for MMA in a unit test.
ScenarioConfig small_config() {
  auto c = toy_scenario();
  c.day_length_s = 4 * 3600;
  c.history_days = 5;
  for (auto& r : c.regions) {
    r.demand_quantity = 300;
    r.supply_quantity = 25;
    r.demand_mixture = {0.5, 0.5, 6, 4, 16, 4};
    r.supply_mixture = {1.0, 0.0, 3, 3, 0, 1};
  }
  c.regions[2].demand_quantity = 120;
  return c;
}

long count_columns(const std::string& line) { return std::count(line.begin(), line.end(), ',') + 1; }

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("mma_test_sim_" + name);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("toy scenario carries the published parameters") {
  const auto c = toy_scenario();
  REQUIRE(c.zone_count() == 3);
  CHECK(c.regions[0].demand_quantity == 5000);
  CHECK(c.regions[0].demand_mixture.mu2 == 100);
  CHECK(c.regions[1].transition == std::vector<double>{0.3, 0.2, 0.5});
  CHECK(c.regions[2].supply_quantity == 300);
  CHECK(c.regions[2].supply_mixture.mu1 == 43);
  CHECK(c.intervals_per_day() == 144);
  CHECK(c.horizon.planning_intervals == 9);
  CHECK(c.phi_demand_at(11 * 3600) == 1800);
  CHECK(c.phi_supply_at(11 * 3600) == 900);
  CHECK(c.phi_supply_at(23.5 * 3600) == 1200);
  CHECK(c.zone_of({13.0, 2.0}) == 2);
  CHECK(c.zone_of({7.0, 1.5}) == 0);  // outside every square, nearest centre
  const auto g = c.zone_graph();
  CHECK(g.travel_intervals[0][2] == 4);  // 12 km * 1.3 at 30 km/h is 31.2 min
  CHECK(g.travel_intervals[0][1] == 3);
}

TEST_CASE("config json round trips and rejects bad input") {
  const auto c = toy_scenario();
  const auto text = config_to_json(c);
  CHECK(config_to_json(config_from_json(text)) == text);

  auto bad = c;
  bad.regions[0].transition = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = c;
  bad.regions[1].demand_mixture.eps1 = 0.9;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = c;
  bad.regions[1].supply_mixture.sigma2 = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = c;
  bad.phi_demand_s.pop_back();
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  CHECK_THROWS_AS(config_from_json("{"), InvalidInput);
  CHECK_THROWS_AS(config_from_json("{\"regions\": [{\"center\": [0, 0]}]}"), InvalidInput);
  CHECK_THROWS_AS(load_config("/nonexistent/toy.json"), InvalidInput);
}

TEST_CASE("mixture draws have the mixture mean") {
  const Mixture m{0.7, 0.3, 36, 30, 96, 50};
  std::mt19937_64 rng(3);
  double s = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) s += m.sample(rng);
  // sd of the mixture is about 45, so the standard error is near 0.1.
  CHECK(s / n == doctest::Approx(0.7 * 36 + 0.3 * 96).epsilon(0.01));
}

TEST_CASE("generated day has the configured counts and stays inside the day") {
  const auto c = toy_scenario();
  const auto s = generate_day(c, 5);
  REQUIRE(s.requests.size() == 15000);
  REQUIRE(s.vehicles.size() == 900);
  std::vector<int> per(3, 0);
  for (std::size_t i = 0; i < s.requests.size(); ++i) {
    const auto& q = s.requests[i];
    CHECK(q.id == static_cast<int>(i));
    if (i > 0) CHECK(q.gen_time_s >= s.requests[i - 1].gen_time_s);
    CHECK(q.gen_time_s >= 0.0);
    CHECK(q.gen_time_s < 86400.0);
    CHECK(c.regions[q.origin_zone].contains(q.origin_xy));
    CHECK(c.regions[q.dest_zone].contains(q.dest_xy));
    CHECK(q.patience_s > 0.0);
    ++per[q.origin_zone];
  }
  CHECK(per == std::vector<int>{5000, 5000, 5000});
  for (const auto& v : s.vehicles) {
    CHECK(c.regions[v.zone].contains(v.xy));
    CHECK(v.state == VehicleState::Offline);
  }
}

TEST_CASE("same seed, same stream") {
  const auto c = small_config();
  const auto a = generate_day(c, 11), b = generate_day(c, 11), d = generate_day(c, 12);
  REQUIRE(a.requests.size() == b.requests.size());
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.requests.size(); ++i) {
    same = same && a.requests[i].gen_time_s == b.requests[i].gen_time_s &&
           a.requests[i].dest_xy.x == b.requests[i].dest_xy.x && a.requests[i].patience_s == b.requests[i].patience_s;
    differs = differs || a.requests[i].gen_time_s != d.requests[i].gen_time_s;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("destinations follow the transition row") {
  auto c = toy_scenario();
  for (auto& r : c.regions) {
    r.demand_quantity = 0;
    r.supply_quantity = 0;
  }
  c.regions[2].demand_quantity = 100000;
  const auto s = generate_day(c, 8);
  std::vector<double> f(3, 0.0);
  for (const auto& q : s.requests) f[q.dest_zone] += 1.0 / s.requests.size();
  CHECK(std::abs(f[0] - 0.2) <= 0.01);
  CHECK(std::abs(f[1] - 0.2) <= 0.01);
  CHECK(std::abs(f[2] - 0.6) <= 0.01);
}

TEST_CASE("patience follows the band means") {
  auto c = toy_scenario();
  for (auto& r : c.regions) r.demand_quantity = 20000;
  const auto s = generate_day(c, 9);
  double sum = 0.0;
  int n = 0;
  for (const auto& q : s.requests)
    if (q.gen_time_s >= 10 * 3600 && q.gen_time_s < 17 * 3600) {
      sum += q.patience_s;
      ++n;
    }
  REQUIRE(n > 5000);
  CHECK(sum / n == doctest::Approx(1800).epsilon(0.05));
}

TEST_CASE("zero demand reports a zero rate") {
  auto c = small_config();
  for (auto& r : c.regions) r.demand_quantity = 0;
  for (const std::string p : {"fcfs", "batch", "mma", "mma-noreloc"}) {
    const auto r = run_day(c, Policy::parse(p), 4);
    CAPTURE(p);
    CHECK(r.metrics.generated_requests == 0);
    CHECK(r.metrics.completed_requests == 0);
    CHECK(r.metrics.completion_rate == 0.0);
    CHECK(r.metrics.mean_pickup_distance_km == 0.0);
  }
}

TEST_CASE("with ample supply batch matching loses only impatient riders") {
  auto c = toy_scenario();
  for (auto& r : c.regions) {
    r.supply_quantity = 3000;
    r.supply_mixture = {1.0, 0.0, 0.5, 0.01, 0.0, 1.0};  // everyone enters in the first slot
  }
  c.phi_supply_s.assign(c.phi_supply_s.size(), 1e9);
  const auto r = run_day(c, Policy::parse("batch"), 2, {.record_events = false});
  // A rider waits at most one 10 s tick: loss <= 1 - exp(-10 / 1200) < 0.01.
  const double bound = 1.0 - (1.0 - std::exp(-10.0 / 1200.0));
  MESSAGE("ample-supply completion: " << r.metrics.completion_rate);
  CHECK(r.metrics.completion_rate > 0.99);
  CHECK(r.metrics.completion_rate >= bound - 0.005);
}

TEST_CASE("perturbation keeps ratios in band and is unbiased") {
  forecast::Forecasts f;
  f.demand = make_matrix<double>(100, 50, 10.0);
  f.supply = make_matrix<double>(100, 50, 4.0);
  f.transition.assign(100, make_matrix<double>(50, 50, 0.02));
  f.drop_demand.assign(100, 0.1);
  f.drop_supply.assign(100, 0.2);
  const auto same = perturb_forecasts(f, 0.0, 1);
  CHECK(same.demand == f.demand);
  CHECK(same.supply == f.supply);
  const auto p = perturb_forecasts(f, 0.5, 1);
  double mean = 0.0, lo = 1e9, hi = -1e9;
  for (int t = 0; t < 100; ++t)
    for (int r = 0; r < 50; ++r) {
      const double ratio = p.demand[t][r] / 10.0;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      mean += p.demand[t][r] / 5000.0;
      const double rs = p.supply[t][r] / 4.0;
      CHECK(rs >= 0.5);
      CHECK(rs <= 1.5);
    }
  CHECK(lo >= 0.5);
  CHECK(hi <= 1.5);
  CHECK(std::abs(mean - 10.0) <= 0.1);
  CHECK(p.drop_demand == f.drop_demand);
  CHECK(perturb_forecasts(f, 0.5, 1).demand == p.demand);
  CHECK_THROWS_AS(perturb_forecasts(f, 1.0, 1), InvalidInput);
}

TEST_CASE("irregular events add and drop requests") {
  const auto c = toy_scenario();
  const auto base = generate_day(c, 21);
  CHECK(apply_irregular_events(base, {}, c, 1).requests.size() == base.requests.size());

  auto in_window = [](const DayStream& s, int zone, double a, double b) {
    return std::count_if(s.requests.begin(), s.requests.end(), [&](const Request& q) {
      return q.origin_zone == zone && q.gen_time_s >= a && q.gen_time_s < b;
    });
  };
  const double a = 8 * 3600.0, b = 10 * 3600.0;
  const auto added = apply_irregular_events(base, {{a, b, 0, 400.0, 0.0}}, c, 1);
  CHECK(added.requests.size() == base.requests.size() + 800);
  CHECK(in_window(added, 0, a, b) == in_window(base, 0, a, b) + 800);
  for (std::size_t i = 0; i < added.requests.size(); ++i) CHECK(added.requests[i].id == static_cast<int>(i));

  // A constructed stream with exactly 150 eligible requests.
  DayStream s;
  for (int i = 0; i < 150; ++i) {
    Request q;
    q.gen_time_s = 3600.0 + i;
    q.origin_zone = 1;
    q.dest_zone = 0;
    q.patience_s = 100;
    s.requests.push_back(q);
  }
  Request other;
  other.gen_time_s = 3650.0;
  other.origin_zone = 2;
  s.requests.push_back(other);
  const auto dropped = apply_irregular_events(s, {{3600.0, 7200.0, 1, 0.0, 200.0}}, c, 3);
  REQUIRE(dropped.requests.size() == 1);
  CHECK(dropped.requests[0].origin_zone == 2);

  CHECK_THROWS_AS(apply_irregular_events(s, {{0.0, 90000.0, 1, 1.0, 0.0}}, c, 3), InvalidInput);
  CHECK(toy_irregular_schedule().size() == 4);
}

TEST_CASE("stream csv round trips") {
  const auto c = small_config();
  const auto s = generate_day(c, 31);
  const auto dir = temp_dir("csv");
  const auto rq = (dir / "requests.csv").string(), vh = (dir / "vehicles.csv").string();
  write_stream_csv(s, rq, vh);
  const auto back = read_stream_csv(rq, vh, c, 31);
  REQUIRE(back.requests.size() == s.requests.size());
  REQUIRE(back.vehicles.size() == s.vehicles.size());
  for (std::size_t i = 0; i < s.requests.size(); ++i) {
    CHECK(back.requests[i].gen_time_s == s.requests[i].gen_time_s);
    CHECK(back.requests[i].dest_zone == s.requests[i].dest_zone);
    CHECK(back.requests[i].origin_xy.y == s.requests[i].origin_xy.y);
    CHECK(back.requests[i].patience_s == s.requests[i].patience_s);
  }
  for (std::size_t i = 0; i < s.vehicles.size(); ++i) {
    CHECK(back.vehicles[i].xy.x == s.vehicles[i].xy.x);
    CHECK(back.vehicles[i].zone == s.vehicles[i].zone);
  }
  const auto rq2 = (dir / "requests2.csv").string(), vh2 = (dir / "vehicles2.csv").string();
  write_stream_csv(back, rq2, vh2);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(slurp(rq) == slurp(rq2));
  CHECK(slurp(vh) == slurp(vh2));
  CHECK_THROWS_AS(read_stream_csv((dir / "missing.csv").string(), vh, c, 1), InvalidInput);
}

TEST_CASE("policy names parse back") {
  for (const char* p : {"fcfs", "batch", "mma-noreloc", "mma:0.5,0.2", "mma:1,0"}) CHECK(Policy::parse(p).name() == p);
  CHECK(Policy::parse("mma").name() == "mma:0.5,0.2");
  CHECK_FALSE(Policy::parse("mma-noreloc").relocation);
  CHECK_THROWS_AS(Policy::parse("greedy"), InvalidInput);
  CHECK_THROWS_AS(Policy::parse("mma:0.5"), InvalidInput);
}

TEST_CASE("simulation bookkeeping holds for every policy") {
  const auto c = small_config();
  const auto fb = prepare_forecasts(c, 2);
  for (const std::string p : {"fcfs", "batch", "mma-noreloc", "mma:0.5,0.2"}) {
    CAPTURE(p);
    const auto r = run_day(c, Policy::parse(p), 6, {.forecasts = &fb, .audit_every = 50});
    const auto& m = r.metrics;
    CHECK(m.generated_requests == 720);
    CHECK(m.completed_requests + m.abandoned_requests == m.generated_requests);
    long od = 0;
    for (const auto& row : m.completed_od) od = std::accumulate(row.begin(), row.end(), od);
    CHECK(od == m.completed_requests);
    CHECK(m.completed_requests > 0);
    CHECK(m.waiting_requests.size() == 24);
    CHECK(r.ledger_violations == 0);
    const bool mma = p.rfind("mma", 0) == 0;
    CHECK(r.strategic_solves == (mma ? 24 : 0));
    if (p != "mma:0.5,0.2") CHECK(m.relocation_count == 0);
    long assigns = 0, relocs = 0;
    for (const auto& e : r.events) {
      assigns += e.find("\"assign\"") != std::string::npos;
      relocs += e.find("\"relocate\"") != std::string::npos;
    }
    CHECK(assigns == m.completed_requests);
    CHECK(relocs == m.relocation_count);
  }
}

TEST_CASE("runs are deterministic") {
  const auto c = small_config();
  const auto fb = prepare_forecasts(c, 2);
  for (const char* p : {"fcfs", "mma:0.5,0.2"}) {
    const auto a = run_day(c, Policy::parse(p), 7, {.forecasts = &fb});
    const auto b = run_day(c, Policy::parse(p), 7, {.forecasts = &fb});
    CHECK(metrics_csv_row(p, 0, 7, a.metrics) == metrics_csv_row(p, 0, 7, b.metrics));
    CHECK(a.events == b.events);
  }
  CHECK(day_seed(1, 0) != day_seed(1, 1));
  CHECK(day_seed(1, 3) == day_seed(1, 3));
}

TEST_CASE("metrics rows line up with the header") {
  SimMetrics m;
  m.completed_od = make_matrix<long>(3, 3, 1);
  m.completion_rate = 0.5;
  const auto row = metrics_csv_row("batch", 2, 99, m);
  CHECK(count_columns(row) == count_columns(metrics_csv_header(3)));
  CHECK(row.rfind("batch,2,99,", 0) == 0);
  const auto quoted = metrics_csv_row("mma:0.5,0.2", 0, 1, m);
  CHECK(quoted.rfind("\"mma:0.5,0.2\",0,1,", 0) == 0);
  CHECK(csv_field("a\"b,c") == "\"a\"\"b,c\"");
  CHECK(csv_field("fcfs") == "fcfs");
}

TEST_CASE("shipped toy config equals the built-in scenario") {
  const auto shipped = load_config(MMA_SOURCE_DIR "/configs/toy.json");
  CHECK(config_to_json(shipped) == config_to_json(toy_scenario()));
}

TEST_CASE("batch shortens pickups relative to first come first served") {
  const auto c = toy_scenario();
  const auto stream = generate_day(c, day_seed(1, 0));
  const auto f = simulate(c, Policy::parse("fcfs"), stream, 1, {.record_events = false});
  const auto b = simulate(c, Policy::parse("batch"), stream, 1, {.record_events = false});
  MESSAGE("pickup fcfs " << f.metrics.mean_pickup_distance_km << " batch " << b.metrics.mean_pickup_distance_km);
  CHECK(f.metrics.mean_pickup_distance_km > b.metrics.mean_pickup_distance_km);
}
