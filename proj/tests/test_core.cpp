#include <cmath>
#include <limits>

#include "doctest.h"
#include "mma/core.hpp"

using namespace mma;

TEST_CASE("travel_time_s examples") {
  CHECK(travel_time_s({0, 0}, {10, 0}, 30.0, 1.3) == doctest::Approx(1560.0));
  CHECK(travel_time_s({2, 5}, {2, 5}, 30.0, 1.3) == 0.0);
  CHECK(travel_time_s({0, 0}, {3, 4}, 30.0, 1.0) == doctest::Approx(600.0));
}

TEST_CASE("travel_time_s rejects bad input") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(travel_time_s({nan, 0}, {1, 1}, 30.0, 1.3), InvalidInput);
  CHECK_THROWS_AS(travel_time_s({0, 0}, {1, std::numeric_limits<double>::infinity()}, 30.0, 1.3),
                  InvalidInput);
  CHECK_THROWS_AS(travel_time_s({0, 0}, {1, 1}, 0.0, 1.3), InvalidInput);
  CHECK_THROWS_AS(travel_time_s({0, 0}, {1, 1}, 30.0, 0.9), InvalidInput);
}

TEST_CASE("ZoneGraph from toy centroids") {
  const std::vector<Point> c{{1.5, 1.5}, {1.5, 9.5}, {13.5, 1.5}};
  const auto g = ZoneGraph::from_centroids(c, 30.0, 1.3, 600);
  g.validate();
  CHECK(g.distance_km[0][1] == doctest::Approx(8.0));
  CHECK(g.distance_km[0][2] == doctest::Approx(12.0));
  CHECK(g.distance_km[2][1] == doctest::Approx(std::hypot(12.0, 8.0)));
  // 8 km * 1.3 / 30 km/h = 20.8 min -> 3 ten-minute intervals.
  CHECK(g.travel_intervals[0][1] == 3);
  CHECK(g.travel_intervals[0][2] == 4);
  CHECK(g.travel_intervals[1][2] == 4);
  for (int i = 0; i < 3; ++i) CHECK(g.travel_intervals[i][i] == 0);
}

TEST_CASE("ZoneGraph clamps short hops to one interval") {
  const auto g = ZoneGraph::from_centroids({{0, 0}, {0.1, 0}}, 30.0, 1.0, 600);
  CHECK(g.travel_intervals[0][1] == 1);
  CHECK(g.travel_intervals[1][0] == 1);
}

TEST_CASE("ZoneGraph validation") {
  ZoneGraph g;
  g.zone_count = 2;
  g.travel_intervals = {{0, 1}, {1, 0}};
  g.distance_km = {{0, 2}, {2, 0}};
  CHECK_NOTHROW(g.validate());
  g.travel_intervals[0][0] = 1;
  CHECK_THROWS_AS(g.validate(), InvalidInput);
  g.travel_intervals[0][0] = 0;
  g.distance_km[0][1] = 3;
  CHECK_THROWS_AS(g.validate(), InvalidInput);
}

TEST_CASE("HorizonConfig nesting") {
  HorizonConfig h;
  CHECK_NOTHROW(h.validate());
  CHECK(h.matching_ticks_per_interval() == 60);
  h.matching_interval_s = 7;
  CHECK_THROWS_AS(h.validate(), InvalidInput);
  h.matching_interval_s = 10;
  h.planning_intervals = 0;
  CHECK_THROWS_AS(h.validate(), InvalidInput);
}

TEST_CASE("interval index is floor(t / dT)") {
  CHECK(interval_index(0.0, 600) == 0);
  CHECK(interval_index(599.999, 600) == 0);
  CHECK(interval_index(600.0, 600) == 1);
  CHECK(interval_index(86399.0, 600) == 143);
}

TEST_CASE("agent lifecycles") {
  using R = RequestState;
  CHECK(request_transition_allowed(R::Waiting, R::Matched));
  CHECK(request_transition_allowed(R::Waiting, R::Abandoned));
  CHECK(request_transition_allowed(R::Matched, R::InVehicle));
  CHECK(request_transition_allowed(R::InVehicle, R::Completed));
  CHECK_FALSE(request_transition_allowed(R::Matched, R::Abandoned));
  CHECK_FALSE(request_transition_allowed(R::Completed, R::Waiting));
  using V = VehicleState;
  CHECK(vehicle_transition_allowed(V::Vacant, V::Offline));
  CHECK(vehicle_transition_allowed(V::Relocating, V::Vacant));
  CHECK_FALSE(vehicle_transition_allowed(V::Relocating, V::Offline));
  for (auto to : {V::Vacant, V::PickingUp, V::Occupied, V::Relocating, V::Offline}) {
    CHECK_FALSE(vehicle_transition_allowed(V::Offline, to));
  }
}
