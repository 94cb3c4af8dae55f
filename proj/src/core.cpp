#include "mma/core.hpp"

#include <cmath>

namespace mma {

double euclidean_km(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double travel_time_s(Point from, Point to, double speed_kmh, double detour) {
  if (!std::isfinite(from.x) || !std::isfinite(from.y) || !std::isfinite(to.x) ||
      !std::isfinite(to.y)) {
    throw InvalidInput("travel_time_s: non-finite coordinates");
  }
  if (!(speed_kmh > 0.0)) throw InvalidInput("travel_time_s: speed must be positive");
  if (!(detour >= 1.0)) throw InvalidInput("travel_time_s: detour ratio must be >= 1");
  return euclidean_km(from, to) * detour / speed_kmh * 3600.0;
}

void ZoneGraph::validate() const {
  const auto n = static_cast<std::size_t>(zone_count);
  if (zone_count <= 0) throw InvalidInput("ZoneGraph: no zones");
  if (travel_intervals.size() != n || distance_km.size() != n) {
    throw InvalidInput("ZoneGraph: matrix shape mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (travel_intervals[i].size() != n || distance_km[i].size() != n) {
      throw InvalidInput("ZoneGraph: matrix shape mismatch");
    }
    if (travel_intervals[i][i] != 0) throw InvalidInput("ZoneGraph: a[i][i] must be 0");
    if (distance_km[i][i] != 0.0) throw InvalidInput("ZoneGraph: non-zero distance diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      if (travel_intervals[i][j] < 0) throw InvalidInput("ZoneGraph: negative travel interval");
      if (!(distance_km[i][j] >= 0.0) || distance_km[i][j] != distance_km[j][i]) {
        throw InvalidInput("ZoneGraph: distances must be non-negative and symmetric");
      }
    }
  }
}

ZoneGraph ZoneGraph::from_centroids(const std::vector<Point>& centroids, double speed_kmh,
                                    double detour, int strategic_interval_s) {
  if (strategic_interval_s <= 0) throw InvalidInput("ZoneGraph: strategic interval must be > 0");
  ZoneGraph g;
  g.zone_count = static_cast<int>(centroids.size());
  const auto n = centroids.size();
  g.travel_intervals = make_matrix<int>(n, n, 0);
  g.distance_km = make_matrix<double>(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      g.distance_km[i][j] = euclidean_km(centroids[i], centroids[j]);
      const double secs = travel_time_s(centroids[i], centroids[j], speed_kmh, detour);
      const int a = static_cast<int>(std::ceil(secs / strategic_interval_s));
      g.travel_intervals[i][j] = a < 1 ? 1 : a;
    }
  }
  // hypot is symmetric in its arguments up to the sign of the differences.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) g.distance_km[j][i] = g.distance_km[i][j];
  return g;
}

void HorizonConfig::validate() const {
  if (strategic_interval_s <= 0 || matching_interval_s <= 0) {
    throw InvalidInput("HorizonConfig: interval lengths must be positive");
  }
  if (strategic_interval_s % matching_interval_s != 0) {
    throw InvalidInput("HorizonConfig: strategic interval must be a multiple of the matching interval");
  }
  if (planning_intervals < 1) throw InvalidInput("HorizonConfig: planning_intervals must be >= 1");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw InvalidInput("HorizonConfig: weights must be >= 0");
}

int interval_index(double t_s, int strategic_interval_s) {
  return static_cast<int>(std::floor(t_s / strategic_interval_s));
}

const char* to_string(RequestState s) {
  switch (s) {
    case RequestState::Waiting: return "waiting";
    case RequestState::Matched: return "matched";
    case RequestState::InVehicle: return "in_vehicle";
    case RequestState::Completed: return "completed";
    case RequestState::Abandoned: return "abandoned";
  }
  return "?";
}

const char* to_string(VehicleState s) {
  switch (s) {
    case VehicleState::Vacant: return "vacant";
    case VehicleState::PickingUp: return "picking_up";
    case VehicleState::Occupied: return "occupied";
    case VehicleState::Relocating: return "relocating";
    case VehicleState::Offline: return "offline";
  }
  return "?";
}

bool request_transition_allowed(RequestState from, RequestState to) {
  using S = RequestState;
  return (from == S::Waiting && (to == S::Matched || to == S::Abandoned)) ||
         (from == S::Matched && to == S::InVehicle) ||
         (from == S::InVehicle && to == S::Completed);
}

bool vehicle_transition_allowed(VehicleState from, VehicleState to) {
  using S = VehicleState;
  switch (from) {
    case S::Vacant: return to == S::PickingUp || to == S::Relocating || to == S::Offline;
    case S::PickingUp: return to == S::Occupied;
    case S::Occupied: return to == S::Vacant;
    case S::Relocating: return to == S::Vacant;
    case S::Offline: return false;
  }
  return false;
}

}  // namespace mma
