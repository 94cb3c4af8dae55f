#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mma/core.hpp"
#include "mma/forecast.hpp"
#include "mma/lr.hpp"

namespace mma::sim {

/// Two-component Gaussian mixture over generation slots.
struct Mixture {
  double eps1 = 1.0, eps2 = 0.0;
  double mu1 = 0.0, sigma1 = 1.0;
  double mu2 = 0.0, sigma2 = 1.0;

  void validate() const;
  double sample(std::mt19937_64& rng) const;
};

struct RegionConfig {
  std::string name;
  Point center;
  double side_km = 3.0;
  int demand_quantity = 0;
  Mixture demand_mixture;
  std::vector<double> transition;  // destination region probabilities
  int supply_quantity = 0;
  Mixture supply_mixture;

  bool contains(Point p) const;
};

struct ScenarioConfig {
  std::vector<RegionConfig> regions;
  double speed_kmh = 30.0;
  double detour = 1.3;
  /// Time-of-day bands (hours, first = 0) with mean patience per band.
  std::vector<double> band_start_h{0, 6, 10, 17, 21};
  std::vector<double> phi_demand_s{1500, 1200, 1800, 1200, 1500};
  std::vector<double> phi_supply_s{1200, 1800, 900, 1800, 1200};
  HorizonConfig horizon;
  int day_length_s = 86400;
  /// Length of one mixture unit; a draw x lands in slot floor(x).
  int generation_unit_s = 600;
  int history_days = 8;
  double forecast_l1 = 1.0;
  bool fcfs_global = false;
  int lr_max_iter = 50;
  double lr_gap_tol = 0.03;
  int lr_samples = 5;

  int zone_count() const { return static_cast<int>(regions.size()); }
  int intervals_per_day() const { return day_length_s / horizon.strategic_interval_s; }
  void validate() const;
  ZoneGraph zone_graph() const;
  /// Region containing p, or the nearest centre when none does.
  int zone_of(Point p) const;
  double phi_demand_at(double t_s) const;
  double phi_supply_at(double t_s) const;
  std::vector<double> band_edges_s() const;
};

/// The three-region network with its published parameters.
ScenarioConfig toy_scenario();
std::string config_to_json(const ScenarioConfig& cfg);
ScenarioConfig config_from_json(const std::string& text);
ScenarioConfig load_config(const std::string& path);

struct DayStream {
  std::vector<Request> requests;  // sorted by generation time, id = index
  std::vector<Vehicle> vehicles;  // sorted by entry time, id = index; patience_s is the first idle spell
};

DayStream generate_day(const ScenarioConfig& cfg, std::uint64_t seed);

/// requests.csv: id,gen_time_s,origin_zone,dest_zone,ox,oy,dx,dy
/// vehicles.csv: id,entry_time_s,x,y
/// Patience is drawn from the config bands with `seed`.
DayStream read_stream_csv(const std::string& requests_path, const std::string& vehicles_path,
                          const ScenarioConfig& cfg, std::uint64_t seed);
void write_stream_csv(const DayStream& s, const std::string& requests_path, const std::string& vehicles_path);

struct IrregularEvent {
  double start_s = 0.0;
  double end_s = 0.0;
  int zone = 0;
  double add_per_hour = 0.0;
  double drop_per_hour = 0.0;
};

/// Injects uniform extra requests and removes random existing ones per event window.
DayStream apply_irregular_events(const DayStream& stream, const std::vector<IrregularEvent>& events,
                                 const ScenarioConfig& cfg, std::uint64_t seed);

/// Morning surge and evening shift on the three-region network.
std::vector<IrregularEvent> toy_irregular_schedule();

/// Every demand and supply entry times an independent Uniform[1-a, 1+a] draw.
forecast::Forecasts perturb_forecasts(const forecast::Forecasts& f, double amplitude, std::uint64_t seed);

enum class PolicyKind { Fcfs, Batch, Mma };

struct Policy {
  PolicyKind kind = PolicyKind::Batch;
  double alpha = 0.5;
  double beta = 0.2;
  bool relocation = true;

  std::string name() const;
  /// fcfs | batch | mma-noreloc | mma | mma:ALPHA,BETA
  static Policy parse(const std::string& text);
};

/// Forecasters and estimates fitted on synthetic history days.
struct ForecastBundle {
  forecast::ForecastModel demand, supply;
  Matrix<double> transition;
  std::vector<double> drop_demand, drop_supply;  // per interval of the day
  std::vector<forecast::DayCounts> past_demand, past_supply;

  forecast::Forecasts window(const forecast::DayCounts& today_demand, const forecast::DayCounts& today_supply,
                             int k, int p) const;
};

struct HistoryDay {
  forecast::DayCounts demand, supply;
  Matrix<double> od;
  std::vector<std::pair<double, double>> demand_patience, supply_patience;
};

HistoryDay summarize_day(const ScenarioConfig& cfg, const DayStream& s);
ForecastBundle prepare_forecasts(const ScenarioConfig& cfg, std::uint64_t seed);

struct RunOptions {
  double perturb_amplitude = 0.0;
  bool record_events = true;
  /// Reused across days when set; otherwise fitted per run.
  const ForecastBundle* forecasts = nullptr;
  /// Consistency checks every this many events (0 = off).
  int audit_every = 0;
};

struct DayResult {
  SimMetrics metrics;
  std::vector<std::string> events;
  int strategic_solves = 0;
  double mean_lr_iterations = 0.0;
  double mean_lr_gap = 0.0;
  /// Largest vacant-count excess of matches over the interval's vacant vehicles.
  int ledger_violations = 0;
};

DayResult simulate(const ScenarioConfig& cfg, const Policy& policy, const DayStream& stream, std::uint64_t seed,
                   const RunOptions& options = {});
DayResult run_day(const ScenarioConfig& cfg, const Policy& policy, std::uint64_t seed, const RunOptions& options = {});

/// Quotes a CSV field when it holds a comma, quote or newline.
std::string csv_field(const std::string& text);
std::string metrics_csv_header(int zone_count);
std::string metrics_csv_row(const std::string& policy, int day, std::uint64_t seed, const SimMetrics& m);

/// Seed of day d in a run seeded with `seed`.
std::uint64_t day_seed(std::uint64_t seed, int day);

}  // namespace mma::sim
