#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mma {

/// Raised when an operation receives arguments outside its contract.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a metric is mathematically undefined for its inputs.
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

template <typename T>
using Matrix = std::vector<std::vector<T>>;

template <typename T>
Matrix<T> make_matrix(std::size_t rows, std::size_t cols, T value = T{}) {
  return Matrix<T>(rows, std::vector<T>(cols, value));
}

template <typename T>
using Cube = std::vector<Matrix<T>>;

template <typename T>
Cube<T> make_cube(std::size_t a, std::size_t b, std::size_t c, T value = T{}) {
  return Cube<T>(a, make_matrix<T>(b, c, value));
}

/// Planar position in kilometres.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

double euclidean_km(Point a, Point b);

/// Zones with pairwise travel intervals and centroid distances.
struct ZoneGraph {
  int zone_count = 0;
  /// travel_intervals[i][j]: strategic intervals needed to travel i -> j.
  Matrix<int> travel_intervals;
  /// distance_km[i][j]: centroid distance, symmetric, zero diagonal.
  Matrix<double> distance_km;

  /// Throws InvalidInput if shapes or entries break the invariants.
  void validate() const;

  /// Builds a graph from zone centroids. Travel intervals are the centroid
  /// travel time divided by the strategic interval, rounded up, and at least
  /// one for distinct zones.
  static ZoneGraph from_centroids(const std::vector<Point>& centroids, double speed_kmh,
                                  double detour, int strategic_interval_s);
};

struct HorizonConfig {
  int strategic_interval_s = 600;
  int matching_interval_s = 10;
  int planning_intervals = 9;
  double alpha = 0.0;
  double beta = 0.0;

  void validate() const;
  int matching_ticks_per_interval() const { return strategic_interval_s / matching_interval_s; }
};

/// Strategic interval containing time t (seconds).
int interval_index(double t_s, int strategic_interval_s);

enum class RequestState { Waiting, Matched, InVehicle, Completed, Abandoned };
enum class VehicleState { Vacant, PickingUp, Occupied, Relocating, Offline };

const char* to_string(RequestState s);
const char* to_string(VehicleState s);

/// True if `from -> to` is a legal request lifecycle step.
bool request_transition_allowed(RequestState from, RequestState to);
bool vehicle_transition_allowed(VehicleState from, VehicleState to);

struct Request {
  int id = 0;
  double gen_time_s = 0.0;
  int origin_zone = 0;
  int dest_zone = 0;
  Point origin_xy;
  Point dest_xy;
  double patience_s = 0.0;
  RequestState state = RequestState::Waiting;
};

struct Vehicle {
  int id = 0;
  double entry_time_s = 0.0;
  Point xy;
  int zone = 0;
  VehicleState state = VehicleState::Offline;
  double idle_since_s = 0.0;
  double patience_s = 0.0;
  double busy_until_s = 0.0;
  int target_zone = -1;
};

/// Current-interval slice of a strategic plan.
struct Guidance {
  int interval = 0;
  Matrix<double> match_target;     // M[r][j]
  Matrix<double> relocate_target;  // E[r][j]
};

struct SimMetrics {
  long generated_requests = 0;
  long completed_requests = 0;
  long abandoned_requests = 0;
  double completion_rate = 0.0;
  double mean_pickup_distance_km = 0.0;
  long relocation_count = 0;
  /// completed_od[i][j]: completed trips by origin/destination zone.
  Matrix<long> completed_od;
  /// Snapshots taken at every strategic-interval start: [interval][zone].
  Matrix<int> waiting_requests;
  Matrix<int> vacant_vehicles;
};

/// Straight-line distance times detour, at constant speed, in seconds.
double travel_time_s(Point from, Point to, double speed_kmh, double detour);

}  // namespace mma
