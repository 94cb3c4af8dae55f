#include "mma/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "json.hpp"
#include "mma/baselines.hpp"
#include "mma/exec.hpp"
#include "mma/slm.hpp"

namespace mma::sim {

namespace {

using nlohmann::ordered_json;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per subsystem so adding draws in one leaves the others intact.
enum Stream : std::uint32_t {
  kDemandTimes = 1,
  kSupplyTimes,
  kRequestPatience,
  kVehiclePatience,
  kIrregular,
  kPerturb,
  kMatching,
  kPlanning,
  kHistory,
};

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint32_t stream, std::uint32_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream, sub};
  return std::mt19937_64(seq);
}

double exponential(std::mt19937_64& rng, double mean) { return std::exponential_distribution<double>(1.0 / mean)(rng); }

Point uniform_in(const RegionConfig& r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5 * r.side_km, 0.5 * r.side_km);
  const double dx = u(rng);
  return {r.center.x + dx, r.center.y + u(rng)};
}

int band_of(const std::vector<double>& start_h, double t_s) {
  const double h = std::fmod(std::max(t_s, 0.0), 86400.0) / 3600.0;
  int b = 0;
  for (std::size_t i = 0; i < start_h.size(); ++i)
    if (h >= start_h[i]) b = static_cast<int>(i);
  return b;
}

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void sort_requests(std::vector<Request>& reqs) {
  std::stable_sort(reqs.begin(), reqs.end(),
                   [](const Request& a, const Request& b) { return a.gen_time_s < b.gen_time_s; });
  for (std::size_t i = 0; i < reqs.size(); ++i) reqs[i].id = static_cast<int>(i);
}

void sort_vehicles(std::vector<Vehicle>& vs) {
  std::stable_sort(vs.begin(), vs.end(),
                   [](const Vehicle& a, const Vehicle& b) { return a.entry_time_s < b.entry_time_s; });
  for (std::size_t i = 0; i < vs.size(); ++i) vs[i].id = static_cast<int>(i);
}

Request make_request(const ScenarioConfig& cfg, int origin, double t, std::mt19937_64& rng) {
  const auto& reg = cfg.regions[origin];
  Request q;
  q.gen_time_s = t;
  q.origin_zone = origin;
  q.origin_xy = uniform_in(reg, rng);
  q.dest_zone = std::discrete_distribution<int>(reg.transition.begin(), reg.transition.end())(rng);
  q.dest_xy = uniform_in(cfg.regions[q.dest_zone], rng);
  return q;
}

void draw_request_patience(const ScenarioConfig& cfg, std::vector<Request>& reqs, std::uint64_t seed) {
  auto rng = stream_rng(seed, kRequestPatience);
  for (auto& q : reqs) q.patience_s = exponential(rng, cfg.phi_demand_at(q.gen_time_s));
}

void draw_vehicle_patience(const ScenarioConfig& cfg, std::vector<Vehicle>& vs, std::uint64_t seed) {
  auto rng = stream_rng(seed, kVehiclePatience);
  for (auto& v : vs) v.patience_s = exponential(rng, cfg.phi_supply_at(v.entry_time_s));
}

ordered_json mixture_json(const Mixture& m) { return {m.eps1, m.eps2, m.mu1, m.sigma1, m.mu2, m.sigma2}; }

Mixture mixture_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 6) throw InvalidInput("config: mixture must be [eps1,eps2,mu1,sigma1,mu2,sigma2]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
          j[3].get<double>(), j[4].get<double>(), j[5].get<double>()};
}

}  // namespace

// ---------------------------------------------------------------- config

void Mixture::validate() const {
  if (!(eps1 >= 0.0 && eps2 >= 0.0) || std::abs(eps1 + eps2 - 1.0) > 1e-9)
    throw InvalidInput("mixture weights must be non-negative and sum to 1");
  if (!(sigma1 > 0.0 && sigma2 > 0.0)) throw InvalidInput("mixture sigmas must be positive");
  if (!std::isfinite(mu1) || !std::isfinite(mu2)) throw InvalidInput("mixture means must be finite");
}

double Mixture::sample(std::mt19937_64& rng) const {
  const bool first = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < eps1;
  return first ? std::normal_distribution<double>(mu1, sigma1)(rng)
               : std::normal_distribution<double>(mu2, sigma2)(rng);
}

bool RegionConfig::contains(Point p) const {
  const double h = 0.5 * side_km;
  return std::abs(p.x - center.x) <= h && std::abs(p.y - center.y) <= h;
}

void ScenarioConfig::validate() const {
  horizon.validate();
  if (regions.empty()) throw InvalidInput("config: no regions");
  const std::size_t n = regions.size();
  for (const auto& r : regions) {
    if (!(r.side_km > 0.0)) throw InvalidInput("config: region " + r.name + " side must be positive");
    if (r.demand_quantity < 0 || r.supply_quantity < 0) throw InvalidInput("config: negative quantity in " + r.name);
    r.demand_mixture.validate();
    r.supply_mixture.validate();
    if (r.transition.size() != n) throw InvalidInput("config: transition row of " + r.name + " has wrong length");
    double s = 0.0;
    for (double v : r.transition) {
      if (!(v >= 0.0)) throw InvalidInput("config: negative transition probability in " + r.name);
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw InvalidInput("config: transition row of " + r.name + " must sum to 1");
  }
  if (!(speed_kmh > 0.0)) throw InvalidInput("config: speed must be positive");
  if (!(detour >= 1.0)) throw InvalidInput("config: detour must be >= 1");
  if (band_start_h.empty() || band_start_h[0] != 0.0) throw InvalidInput("config: bands must start at hour 0");
  if (phi_demand_s.size() != band_start_h.size() || phi_supply_s.size() != band_start_h.size())
    throw InvalidInput("config: one patience mean per band required");
  for (std::size_t i = 1; i < band_start_h.size(); ++i)
    if (!(band_start_h[i] > band_start_h[i - 1])) throw InvalidInput("config: band starts must increase");
  for (double v : phi_demand_s)
    if (!(v > 0.0)) throw InvalidInput("config: patience means must be positive");
  for (double v : phi_supply_s)
    if (!(v > 0.0)) throw InvalidInput("config: patience means must be positive");
  if (day_length_s <= 0 || day_length_s % horizon.strategic_interval_s != 0)
    throw InvalidInput("config: day length must be a positive multiple of the strategic interval");
  if (generation_unit_s <= 0) throw InvalidInput("config: generation unit must be positive");
  if (history_days < forecast::required_past_days(forecast::Target::Demand) + 1)
    throw InvalidInput("config: history_days must be at least " +
                       std::to_string(forecast::required_past_days(forecast::Target::Demand) + 1));
  if (!(forecast_l1 >= 0.0)) throw InvalidInput("config: forecast_l1 must be >= 0");
  if (lr_max_iter < 1 || !(lr_gap_tol >= 0.0) || lr_samples < 1) throw InvalidInput("config: bad LR settings");
}

ZoneGraph ScenarioConfig::zone_graph() const {
  std::vector<Point> c;
  for (const auto& r : regions) c.push_back(r.center);
  return ZoneGraph::from_centroids(c, speed_kmh, detour, horizon.strategic_interval_s);
}

int ScenarioConfig::zone_of(Point p) const {
  int best = 0;
  double bd = 1e300;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].contains(p)) return static_cast<int>(i);
    const double d = euclidean_km(p, regions[i].center);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

double ScenarioConfig::phi_demand_at(double t_s) const { return phi_demand_s[band_of(band_start_h, t_s)]; }
double ScenarioConfig::phi_supply_at(double t_s) const { return phi_supply_s[band_of(band_start_h, t_s)]; }

std::vector<double> ScenarioConfig::band_edges_s() const {
  std::vector<double> e;
  for (double h : band_start_h) e.push_back(h * 3600.0);
  return e;
}

ScenarioConfig toy_scenario() {
  ScenarioConfig c;
  auto region = [](std::string name, double x, double y, Mixture d, std::vector<double> p, Mixture s) {
    RegionConfig r;
    r.name = std::move(name);
    r.center = {x, y};
    r.side_km = 3.0;
    r.demand_quantity = 5000;
    r.demand_mixture = d;
    r.transition = std::move(p);
    r.supply_quantity = 300;
    r.supply_mixture = s;
    return r;
  };
  c.regions.push_back(region("A", 1.5, 1.5, {0.5, 0.5, 30, 30, 100, 30}, {0.2, 0.3, 0.5}, {0.7, 0.3, 36, 20, 108, 20}));
  c.regions.push_back(region("B", 1.5, 9.5, {0.5, 0.5, 96, 60, 126, 60}, {0.3, 0.2, 0.5}, {0.5, 0.5, 50, 20, 108, 20}));
  c.regions.push_back(region("C", 13.5, 1.5, {0.7, 0.3, 36, 30, 96, 50}, {0.2, 0.2, 0.6}, {0.7, 0.3, 43, 20, 108, 20}));
  c.horizon.planning_intervals = 9;
  return c;
}

std::string config_to_json(const ScenarioConfig& cfg) {
  ordered_json j;
  auto& regs = j["regions"] = ordered_json::array();
  for (const auto& r : cfg.regions) {
    ordered_json o;
    o["name"] = r.name;
    o["center"] = {r.center.x, r.center.y};
    o["side_km"] = r.side_km;
    o["demand"] = {{"quantity", r.demand_quantity}, {"mixture", mixture_json(r.demand_mixture)}, {"transition", r.transition}};
    o["supply"] = {{"quantity", r.supply_quantity}, {"mixture", mixture_json(r.supply_mixture)}};
    regs.push_back(o);
  }
  j["speed_kmh"] = cfg.speed_kmh;
  j["detour"] = cfg.detour;
  j["bands"] = {{"start_h", cfg.band_start_h}, {"phi_demand_s", cfg.phi_demand_s}, {"phi_supply_s", cfg.phi_supply_s}};
  j["horizon"] = {{"strategic_interval_s", cfg.horizon.strategic_interval_s},
                  {"matching_interval_s", cfg.horizon.matching_interval_s},
                  {"planning_intervals", cfg.horizon.planning_intervals}};
  j["day_length_s"] = cfg.day_length_s;
  j["generation_unit_s"] = cfg.generation_unit_s;
  j["history_days"] = cfg.history_days;
  j["forecast_l1"] = cfg.forecast_l1;
  j["fcfs_global"] = cfg.fcfs_global;
  j["lr"] = {{"max_iter", cfg.lr_max_iter}, {"gap_tol", cfg.lr_gap_tol}, {"samples", cfg.lr_samples}};
  return j.dump(2);
}

ScenarioConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("config: not valid JSON: ") + e.what());
  }
  ScenarioConfig c;
  try {
    if (!j.contains("regions")) throw InvalidInput("config: missing regions");
    for (const auto& o : j.at("regions")) {
      RegionConfig r;
      r.name = o.value("name", std::string("zone") + std::to_string(c.regions.size()));
      const auto& ctr = o.at("center");
      r.center = {ctr.at(0).get<double>(), ctr.at(1).get<double>()};
      r.side_km = o.value("side_km", 3.0);
      const auto& d = o.at("demand");
      r.demand_quantity = d.at("quantity").get<int>();
      r.demand_mixture = mixture_from(d.at("mixture"));
      r.transition = d.at("transition").get<std::vector<double>>();
      const auto& s = o.at("supply");
      r.supply_quantity = s.at("quantity").get<int>();
      r.supply_mixture = mixture_from(s.at("mixture"));
      c.regions.push_back(std::move(r));
    }
    c.speed_kmh = j.value("speed_kmh", c.speed_kmh);
    c.detour = j.value("detour", c.detour);
    if (j.contains("bands")) {
      const auto& b = j["bands"];
      c.band_start_h = b.at("start_h").get<std::vector<double>>();
      c.phi_demand_s = b.at("phi_demand_s").get<std::vector<double>>();
      c.phi_supply_s = b.at("phi_supply_s").get<std::vector<double>>();
    }
    if (j.contains("horizon")) {
      const auto& h = j["horizon"];
      c.horizon.strategic_interval_s = h.value("strategic_interval_s", c.horizon.strategic_interval_s);
      c.horizon.matching_interval_s = h.value("matching_interval_s", c.horizon.matching_interval_s);
      c.horizon.planning_intervals = h.value("planning_intervals", c.horizon.planning_intervals);
    }
    c.day_length_s = j.value("day_length_s", c.day_length_s);
    c.generation_unit_s = j.value("generation_unit_s", c.generation_unit_s);
    c.history_days = j.value("history_days", c.history_days);
    c.forecast_l1 = j.value("forecast_l1", c.forecast_l1);
    c.fcfs_global = j.value("fcfs_global", c.fcfs_global);
    if (j.contains("lr")) {
      const auto& l = j["lr"];
      c.lr_max_iter = l.value("max_iter", c.lr_max_iter);
      c.lr_gap_tol = l.value("gap_tol", c.lr_gap_tol);
      c.lr_samples = l.value("samples", c.lr_samples);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

// ---------------------------------------------------------------- streams

DayStream generate_day(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const double slots = static_cast<double>(cfg.day_length_s) / cfg.generation_unit_s;
  auto draw_time = [&](const Mixture& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (;;) {
      const double x = m.sample(rng);
      if (x >= 0.0 && x < slots) return (std::floor(x) + u(rng)) * cfg.generation_unit_s;
    }
  };
  DayStream s;
  auto rd = stream_rng(seed, kDemandTimes);
  for (int r = 0; r < cfg.zone_count(); ++r)
    for (int n = 0; n < cfg.regions[r].demand_quantity; ++n) {
      const double t = draw_time(cfg.regions[r].demand_mixture, rd);
      s.requests.push_back(make_request(cfg, r, t, rd));
    }
  auto rs = stream_rng(seed, kSupplyTimes);
  for (int r = 0; r < cfg.zone_count(); ++r)
    for (int n = 0; n < cfg.regions[r].supply_quantity; ++n) {
      Vehicle v;
      v.entry_time_s = draw_time(cfg.regions[r].supply_mixture, rs);
      v.xy = uniform_in(cfg.regions[r], rs);
      v.zone = r;
      s.vehicles.push_back(v);
    }
  sort_requests(s.requests);
  sort_vehicles(s.vehicles);
  draw_request_patience(cfg, s.requests, seed);
  draw_vehicle_patience(cfg, s.vehicles, seed);
  return s;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != columns)
      throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(columns) + " fields");
    rows.push_back(std::move(f));
  }
  return rows;
}

double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput(where + ": bad number '" + s + "'");
  }
}

}  // namespace

DayStream read_stream_csv(const std::string& requests_path, const std::string& vehicles_path,
                          const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  DayStream s;
  const int R = cfg.zone_count();
  for (const auto& f : read_csv(requests_path, 8)) {
    Request q;
    q.gen_time_s = to_double(f[1], requests_path);
    q.origin_zone = static_cast<int>(to_double(f[2], requests_path));
    q.dest_zone = static_cast<int>(to_double(f[3], requests_path));
    q.origin_xy = {to_double(f[4], requests_path), to_double(f[5], requests_path)};
    q.dest_xy = {to_double(f[6], requests_path), to_double(f[7], requests_path)};
    if (q.origin_zone < 0 || q.origin_zone >= R || q.dest_zone < 0 || q.dest_zone >= R)
      throw InvalidInput(requests_path + ": zone index out of range");
    if (q.gen_time_s < 0 || q.gen_time_s >= cfg.day_length_s) throw InvalidInput(requests_path + ": time outside the day");
    s.requests.push_back(q);
  }
  for (const auto& f : read_csv(vehicles_path, 4)) {
    Vehicle v;
    v.entry_time_s = to_double(f[1], vehicles_path);
    v.xy = {to_double(f[2], vehicles_path), to_double(f[3], vehicles_path)};
    v.zone = cfg.zone_of(v.xy);
    if (v.entry_time_s < 0 || v.entry_time_s >= cfg.day_length_s)
      throw InvalidInput(vehicles_path + ": time outside the day");
    s.vehicles.push_back(v);
  }
  sort_requests(s.requests);
  sort_vehicles(s.vehicles);
  draw_request_patience(cfg, s.requests, seed);
  draw_vehicle_patience(cfg, s.vehicles, seed);
  return s;
}

void write_stream_csv(const DayStream& s, const std::string& requests_path, const std::string& vehicles_path) {
  std::ofstream rq(requests_path), vh(vehicles_path);
  if (!rq) throw InvalidInput("cannot write " + requests_path);
  if (!vh) throw InvalidInput("cannot write " + vehicles_path);
  rq.precision(17);
  vh.precision(17);
  rq << "id,gen_time_s,origin_zone,dest_zone,ox,oy,dx,dy\n";
  for (const auto& q : s.requests)
    rq << q.id << ',' << q.gen_time_s << ',' << q.origin_zone << ',' << q.dest_zone << ',' << q.origin_xy.x << ','
       << q.origin_xy.y << ',' << q.dest_xy.x << ',' << q.dest_xy.y << '\n';
  vh << "id,entry_time_s,x,y\n";
  for (const auto& v : s.vehicles) vh << v.id << ',' << v.entry_time_s << ',' << v.xy.x << ',' << v.xy.y << '\n';
}

DayStream apply_irregular_events(const DayStream& stream, const std::vector<IrregularEvent>& events,
                                 const ScenarioConfig& cfg, std::uint64_t seed) {
  if (events.empty()) return stream;
  auto rng = stream_rng(seed, kIrregular);
  std::vector<Request> reqs = stream.requests;
  std::vector<char> removed(reqs.size(), 0);
  std::vector<Request> added;
  for (const auto& ev : events) {
    if (ev.zone < 0 || ev.zone >= cfg.zone_count()) throw InvalidInput("irregular event zone out of range");
    if (!(ev.start_s >= 0 && ev.end_s > ev.start_s && ev.end_s <= cfg.day_length_s))
      throw InvalidInput("irregular event window must lie within the day");
    if (ev.add_per_hour < 0 || ev.drop_per_hour < 0) throw InvalidInput("irregular event rates must be >= 0");
    const double hours = (ev.end_s - ev.start_s) / 3600.0;
    const long n_drop = std::lround(ev.drop_per_hour * hours);
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < reqs.size(); ++i)
      if (!removed[i] && reqs[i].origin_zone == ev.zone && reqs[i].gen_time_s >= ev.start_s &&
          reqs[i].gen_time_s < ev.end_s)
        eligible.push_back(i);
    std::shuffle(eligible.begin(), eligible.end(), rng);
    for (long i = 0; i < std::min<long>(n_drop, static_cast<long>(eligible.size())); ++i) removed[eligible[i]] = 1;
    const long n_add = std::lround(ev.add_per_hour * hours);
    std::uniform_real_distribution<double> when(ev.start_s, ev.end_s);
    for (long i = 0; i < n_add; ++i) {
      const double t = when(rng);
      added.push_back(make_request(cfg, ev.zone, t, rng));
    }
  }
  for (auto& q : added) q.patience_s = exponential(rng, cfg.phi_demand_at(q.gen_time_s));
  DayStream out;
  out.vehicles = stream.vehicles;
  for (std::size_t i = 0; i < reqs.size(); ++i)
    if (!removed[i]) out.requests.push_back(reqs[i]);
  out.requests.insert(out.requests.end(), added.begin(), added.end());
  sort_requests(out.requests);
  return out;
}

std::vector<IrregularEvent> toy_irregular_schedule() {
  // Morning surge out of A with a lull in C, then an evening shift from A to B.
  return {
      {8 * 3600.0, 10 * 3600.0, 0, 400.0, 0.0},
      {8 * 3600.0, 10 * 3600.0, 2, 0.0, 200.0},
      {16.5 * 3600.0, 20 * 3600.0, 1, 400.0, 0.0},
      {16.5 * 3600.0, 20 * 3600.0, 0, 0.0, 400.0},
  };
}

forecast::Forecasts perturb_forecasts(const forecast::Forecasts& f, double amplitude, std::uint64_t seed) {
  if (!(amplitude >= 0.0 && amplitude < 1.0)) throw InvalidInput("perturbation amplitude must be in [0, 1)");
  forecast::Forecasts out = f;
  if (amplitude == 0.0) return out;
  auto rng = stream_rng(seed, kPerturb);
  std::uniform_real_distribution<double> u(1.0 - amplitude, 1.0 + amplitude);
  for (auto* m : {&out.demand, &out.supply})
    for (auto& row : *m)
      for (auto& v : row) v *= u(rng);
  return out;
}

// ---------------------------------------------------------------- policies

std::string Policy::name() const {
  switch (kind) {
    case PolicyKind::Fcfs: return "fcfs";
    case PolicyKind::Batch: return "batch";
    case PolicyKind::Mma:
      if (!relocation) return "mma-noreloc";
      return "mma:" + fmt_num(alpha) + "," + fmt_num(beta);
  }
  return "?";
}

Policy Policy::parse(const std::string& text) {
  Policy p;
  if (text == "fcfs") {
    p.kind = PolicyKind::Fcfs;
  } else if (text == "batch") {
    p.kind = PolicyKind::Batch;
  } else if (text == "mma-noreloc") {
    p.kind = PolicyKind::Mma;
    p.relocation = false;
    p.beta = 0.0;
  } else if (text == "mma") {
    p.kind = PolicyKind::Mma;
  } else if (text.rfind("mma:", 0) == 0) {
    p.kind = PolicyKind::Mma;
    const auto body = text.substr(4);
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw InvalidInput("policy mma:ALPHA,BETA needs two numbers");
    p.alpha = to_double(body.substr(0, comma), "policy");
    p.beta = to_double(body.substr(comma + 1), "policy");
    if (p.alpha < 0 || p.beta < 0) throw InvalidInput("policy weights must be >= 0");
  } else {
    throw InvalidInput("unknown policy '" + text + "' (fcfs, batch, mma-noreloc, mma, mma:ALPHA,BETA)");
  }
  return p;
}

// ---------------------------------------------------------------- forecasts

forecast::Forecasts ForecastBundle::window(const forecast::DayCounts& today_demand,
                                           const forecast::DayCounts& today_supply, int k, int p) const {
  const int intervals = static_cast<int>(today_demand.size());
  const int R = demand.zone_count;
  const auto wd = forecast::predict_window(demand, past_demand, today_demand, k, p);
  const auto ws = forecast::predict_window(supply, past_supply, today_supply, k, p);
  forecast::Forecasts f;
  f.demand = make_matrix<double>(p, R, 0.0);
  f.supply = make_matrix<double>(p, R, 0.0);
  f.transition.assign(p, transition);
  f.drop_demand.resize(p);
  f.drop_supply.resize(p);
  for (int h = 0; h < p; ++h) {
    const int t = std::min(k + h, intervals - 1);
    f.drop_demand[h] = drop_demand[t];
    f.drop_supply[h] = drop_supply[t];
    if (k + h >= intervals) continue;
    f.demand[h] = wd.values[h];
    f.supply[h] = ws.values[h];
  }
  return f;
}

HistoryDay summarize_day(const ScenarioConfig& cfg, const DayStream& s) {
  const int R = cfg.zone_count(), T = cfg.intervals_per_day();
  const int dt = cfg.horizon.strategic_interval_s;
  HistoryDay h;
  h.demand = make_matrix<double>(T, R, 0.0);
  h.supply = make_matrix<double>(T, R, 0.0);
  h.od = make_matrix<double>(R, R, 0.0);
  for (const auto& q : s.requests) {
    h.demand[std::min(interval_index(q.gen_time_s, dt), T - 1)][q.origin_zone] += 1.0;
    h.od[q.origin_zone][q.dest_zone] += 1.0;
    h.demand_patience.emplace_back(q.gen_time_s, q.patience_s);
  }
  for (const auto& v : s.vehicles) {
    h.supply[std::min(interval_index(v.entry_time_s, dt), T - 1)][v.zone] += 1.0;
    h.supply_patience.emplace_back(v.entry_time_s, v.patience_s);
  }
  return h;
}

namespace {

// Bands without samples merge into the previous band; with no samples at all
// the configured means stand in.
std::vector<double> attrition(const ScenarioConfig& cfg, const std::vector<std::pair<double, double>>& samples,
                              const std::vector<double>& prior_phi) {
  const auto edges = cfg.band_edges_s();
  const int dt = cfg.horizon.strategic_interval_s, T = cfg.intervals_per_day();
  std::vector<int> seen(edges.size(), 0);
  for (const auto& [t, w] : samples) ++seen[band_of(cfg.band_start_h, t)];
  std::vector<double> kept;
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (seen[i] > 0) kept.push_back(edges[i]);
  if (kept.empty()) {
    std::vector<double> out(T);
    for (int k = 0; k < T; ++k) out[k] = forecast::attrition_rate(prior_phi[band_of(cfg.band_start_h, k * dt)], dt);
    return out;
  }
  kept[0] = 0.0;
  return forecast::estimate_attrition(samples, kept, dt, T);
}

}  // namespace

ForecastBundle prepare_forecasts(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int R = cfg.zone_count();
  std::vector<forecast::DayCounts> dem, sup;
  auto od = make_matrix<double>(R, R, 0.0);
  std::vector<std::pair<double, double>> pd, ps;
  for (int d = 0; d < cfg.history_days; ++d) {
    const std::uint64_t hs = splitmix(seed ^ (0x5eedULL << 32) ^ (static_cast<std::uint64_t>(kHistory) << 16)) + d;
    const auto h = summarize_day(cfg, generate_day(cfg, hs));
    dem.push_back(h.demand);
    sup.push_back(h.supply);
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < R; ++j) od[i][j] += h.od[i][j];
    pd.insert(pd.end(), h.demand_patience.begin(), h.demand_patience.end());
    ps.insert(ps.end(), h.supply_patience.begin(), h.supply_patience.end());
  }
  ForecastBundle b;
  const int p = cfg.horizon.planning_intervals;
  b.demand = forecast::fit_forecaster(forecast::Target::Demand, dem, p, cfg.forecast_l1);
  b.supply = forecast::fit_forecaster(forecast::Target::Supply, sup, p, cfg.forecast_l1);
  b.transition = forecast::estimate_transition(od);
  b.drop_demand = attrition(cfg, pd, cfg.phi_demand_s);
  b.drop_supply = attrition(cfg, ps, cfg.phi_supply_s);
  b.past_demand = std::move(dem);
  b.past_supply = std::move(sup);
  return b;
}

// ---------------------------------------------------------------- simulation

namespace {

enum class Ev : int {
  VehicleFree = 0,
  RequestArrival,
  VehicleEntry,
  RequestTimeout,
  VehicleTimeout,
  MatchTick,
  StrategicTick,
};

struct Event {
  double time;
  Ev type;
  std::uint64_t seq;
  int a;  // agent index or tick number
  int b;  // vehicle idle episode
};

struct EventLater {
  bool operator()(const Event& x, const Event& y) const {
    return std::tie(x.time, x.type, x.seq) > std::tie(y.time, y.type, y.seq);
  }
};

class World {
 public:
  World(const ScenarioConfig& cfg, const Policy& policy, const DayStream& stream, std::uint64_t seed,
        const RunOptions& opts, const ForecastBundle* bundle)
      : cfg_(cfg),
        policy_(policy),
        opts_(opts),
        bundle_(bundle),
        seed_(seed),
        R_(cfg.zone_count()),
        T_(cfg.intervals_per_day()),
        dt_(cfg.horizon.strategic_interval_s),
        graph_(cfg.zone_graph()),
        requests_(stream.requests),
        vehicles_(stream.vehicles),
        episode_(vehicles_.size(), 0),
        serving_(vehicles_.size(), -1),
        waiting_(R_),
        vacant_(R_),
        ledgers_(R_),
        vacant_seen_(R_, 0),
        patience_rng_(stream_rng(seed, kVehiclePatience, 1)),
        match_rng_(stream_rng(seed, kMatching)) {
    for (int r = 0; r < R_; ++r) ledgers_[r].reset(r, std::vector<double>(R_, 0.0));
    reloc_plan_ = make_matrix<double>(R_, R_, 0.0);
    today_d_ = make_matrix<double>(T_, R_, 0.0);
    today_s_ = make_matrix<double>(T_, R_, 0.0);
    m_.completed_od = make_matrix<long>(R_, R_, 0);
    m_.waiting_requests = make_matrix<int>(T_, R_, 0);
    m_.vacant_vehicles = make_matrix<int>(T_, R_, 0);
  }

  DayResult run() {
    for (std::size_t i = 0; i < requests_.size(); ++i) {
      auto& q = requests_[i];
      if (q.origin_zone < 0 || q.origin_zone >= R_ || q.dest_zone < 0 || q.dest_zone >= R_)
        throw InvalidInput("request zone out of range");
      q.state = RequestState::Waiting;
      push(q.gen_time_s, Ev::RequestArrival, static_cast<int>(i));
    }
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      vehicles_[i].state = VehicleState::Offline;
      push(vehicles_[i].entry_time_s, Ev::VehicleEntry, static_cast<int>(i));
    }
    if (policy_.kind != PolicyKind::Fcfs) push(cfg_.horizon.matching_interval_s, Ev::MatchTick, 1);
    push(0.0, Ev::StrategicTick, 0);

    std::uint64_t processed = 0;
    while (!queue_.empty()) {
      const Event ev = queue_.top();
      queue_.pop();
      if (ev.time < now_) throw std::logic_error("event time went backwards");
      now_ = ev.time;
      dispatch(ev);
      if (opts_.audit_every > 0 && ++processed % static_cast<std::uint64_t>(opts_.audit_every) == 0) audit();
    }
    if (opts_.audit_every > 0) audit();

    m_.generated_requests = static_cast<long>(requests_.size());
    m_.completion_rate =
        m_.generated_requests > 0 ? static_cast<double>(m_.completed_requests) / m_.generated_requests : 0.0;
    m_.mean_pickup_distance_km = matched_ > 0 ? pickup_sum_ / matched_ : 0.0;
    DayResult out;
    out.metrics = m_;
    out.events = std::move(events_);
    out.strategic_solves = solves_;
    out.mean_lr_iterations = solves_ ? lr_iter_sum_ / solves_ : 0.0;
    out.mean_lr_gap = solves_ ? lr_gap_sum_ / solves_ : 0.0;
    out.ledger_violations = ledger_excess_;
    return out;
  }

 private:
  void push(double t, Ev type, int a, int b = 0) { queue_.push({t, type, seq_++, a, b}); }

  void dispatch(const Event& ev) {
    switch (ev.type) {
      case Ev::RequestArrival: on_arrival(ev.a); break;
      case Ev::VehicleEntry: on_entry(ev.a); break;
      case Ev::VehicleFree: on_free(ev.a); break;
      case Ev::RequestTimeout: on_request_timeout(ev.a); break;
      case Ev::VehicleTimeout: on_vehicle_timeout(ev.a, ev.b); break;
      case Ev::MatchTick: on_match_tick(ev.a); break;
      case Ev::StrategicTick: on_strategic_tick(ev.a); break;
    }
  }


  void set_request(Request& q, RequestState s) {
    if (!request_transition_allowed(q.state, s))
      throw std::logic_error(std::string("illegal request transition ") + to_string(q.state) + " -> " + to_string(s));
    q.state = s;
  }

  void set_vehicle(Vehicle& v, VehicleState s) {
    const bool entering = v.state == VehicleState::Offline && s == VehicleState::Vacant && !entered_.count(v.id);
    if (!entering && !vehicle_transition_allowed(v.state, s))
      throw std::logic_error(std::string("illegal vehicle transition ") + to_string(v.state) + " -> " + to_string(s));
    v.state = s;
  }

  // Starts an idle spell; the first spell uses the patience drawn with the stream.
  void become_vacant(int vi, bool first) {
    auto& v = vehicles_[vi];
    set_vehicle(v, VehicleState::Vacant);
    if (first) entered_.insert(v.id);
    v.idle_since_s = now_;
    v.target_zone = -1;
    if (!first) v.patience_s = exponential(patience_rng_, cfg_.phi_supply_at(now_));
    const int ep = ++episode_[vi];
    vacant_[v.zone].push_back({vi, ep});
    ++vacant_seen_[v.zone];
    push(now_ + v.patience_s, Ev::VehicleTimeout, vi, ep);
    if (policy_.kind == PolicyKind::Fcfs) fcfs(v.zone);
  }

  void on_arrival(int qi) {
    const auto& q = requests_[qi];
    waiting_[q.origin_zone].push_back(qi);
    today_d_[std::min(interval_index(q.gen_time_s, dt_), T_ - 1)][q.origin_zone] += 1.0;
    push(q.gen_time_s + q.patience_s, Ev::RequestTimeout, qi);
    if (policy_.kind == PolicyKind::Fcfs) fcfs(q.origin_zone);
  }

  void on_entry(int vi) {
    auto& v = vehicles_[vi];
    today_s_[std::min(interval_index(v.entry_time_s, dt_), T_ - 1)][v.zone] += 1.0;
    become_vacant(vi, true);
  }

  void on_request_timeout(int qi) {
    auto& q = requests_[qi];
    if (q.state != RequestState::Waiting) return;
    set_request(q, RequestState::Abandoned);
    ++m_.abandoned_requests;
  }

  void on_vehicle_timeout(int vi, int ep) {
    auto& v = vehicles_[vi];
    if (v.state != VehicleState::Vacant || episode_[vi] != ep) return;
    set_vehicle(v, VehicleState::Offline);
    ++episode_[vi];
  }

  void on_free(int vi) {
    auto& v = vehicles_[vi];
    const int qi = serving_[vi];
    if (qi >= 0) {
      auto& q = requests_[qi];
      set_request(q, RequestState::InVehicle);
      set_request(q, RequestState::Completed);
      ++m_.completed_requests;
      ++m_.completed_od[q.origin_zone][q.dest_zone];
      set_vehicle(v, VehicleState::Occupied);
      v.xy = q.dest_xy;
      v.zone = q.dest_zone;
      serving_[vi] = -1;
    } else {
      v.xy = cfg_.regions[v.target_zone].center;
      v.zone = v.target_zone;
    }
    become_vacant(vi, false);
  }

  bool is_waiting(int qi) const { return requests_[qi].state == RequestState::Waiting; }
  bool is_vacant(const std::pair<int, int>& e) const {
    return vehicles_[e.first].state == VehicleState::Vacant && episode_[e.first] == e.second;
  }

  void purge(int z) {
    auto& w = waiting_[z];
    w.erase(std::remove_if(w.begin(), w.end(), [&](int qi) { return !is_waiting(qi); }), w.end());
    auto& v = vacant_[z];
    v.erase(std::remove_if(v.begin(), v.end(), [&](const auto& e) { return !is_vacant(e); }), v.end());
  }

  exec::MatchPool pool_of(const std::vector<int>& zones) {
    exec::MatchPool pool;
    pool.zone = zones.size() == 1 ? zones[0] : 0;
    for (int z : zones) {
      purge(z);
      for (int qi : waiting_[z]) {
        const auto& q = requests_[qi];
        pool.customers.push_back({q.id, q.dest_zone, q.gen_time_s, q.origin_xy});
      }
      for (const auto& [vi, ep] : vacant_[z]) pool.vehicles.push_back({vehicles_[vi].id, vehicles_[vi].xy});
    }
    return pool;
  }

  void fcfs(int zone) {
    std::vector<int> zones;
    if (cfg_.fcfs_global) {
      zones.resize(R_);
      std::iota(zones.begin(), zones.end(), 0);
    } else {
      zones = {zone};
    }
    bool any_c = false, any_v = false;
    for (int z : zones) {
      any_c = any_c || !waiting_[z].empty();
      any_v = any_v || !vacant_[z].empty();
    }
    if (!any_c || !any_v) return;
    const auto pool = pool_of(zones);
    if (pool.customers.empty() || pool.vehicles.empty()) return;
    apply(baselines::fcfs_match(pool).pairs);
  }

  void apply(const std::vector<exec::Pair>& pairs) {
    for (const auto& pr : pairs) {
      auto& q = requests_[pr.request_id];
      auto& v = vehicles_[pr.vehicle_id];
      if (q.state != RequestState::Waiting || v.state != VehicleState::Vacant)
        throw std::logic_error("matched agents are not both available");
      set_request(q, RequestState::Matched);
      set_vehicle(v, VehicleState::PickingUp);
      ++episode_[v.id];
      serving_[v.id] = q.id;
      const double pickup_km = euclidean_km(v.xy, q.origin_xy) * cfg_.detour;
      pickup_sum_ += pickup_km;
      ++matched_;
      const double pickup_s = travel_time_s(v.xy, q.origin_xy, cfg_.speed_kmh, cfg_.detour);
      const double trip_s = travel_time_s(q.origin_xy, q.dest_xy, cfg_.speed_kmh, cfg_.detour);
      v.busy_until_s = now_ + pickup_s + trip_s;
      v.target_zone = q.dest_zone;
      push(v.busy_until_s, Ev::VehicleFree, v.id);
      if (opts_.record_events) events_.push_back(exec::assignment_event_json(now_, q.origin_zone, pr));
    }
  }

  void on_match_tick(int n) {
    const int ticks_per_day = cfg_.day_length_s / cfg_.horizon.matching_interval_s;
    for (int z = 0; z < R_; ++z) {
      if (waiting_[z].empty() || vacant_[z].empty()) continue;
      const auto pool = pool_of({z});
      if (pool.customers.empty() || pool.vehicles.empty()) continue;
      if (policy_.kind == PolicyKind::Batch) {
        apply(baselines::batch_match(pool).pairs);
      } else {
        const auto out = exec::run_matching_interval(ledgers_[z], pool, R_, match_rng_);
        apply(out.assignment.pairs);
      }
    }
    if (n < ticks_per_day) push(static_cast<double>(n + 1) * cfg_.horizon.matching_interval_s, Ev::MatchTick, n + 1);
  }

  void close_interval(int k) {
    for (int r = 0; r < R_; ++r) {
      const int used = std::accumulate(ledgers_[r].completed.begin(), ledgers_[r].completed.end(), 0);
      ledger_excess_ = std::max(ledger_excess_, used - vacant_seen_[r]);
    }
    if (!policy_.relocation) return;
    for (int r = 0; r < R_; ++r) {
      purge(r);
      auto e = reloc_plan_[r];
      e[r] = 0.0;
      if (std::accumulate(e.begin(), e.end(), 0.0) <= 1e-9 || vacant_[r].empty()) continue;
      auto idle = vacant_[r];
      std::stable_sort(idle.begin(), idle.end(), [&](const auto& a, const auto& b) {
        const auto& va = vehicles_[a.first];
        const auto& vb = vehicles_[b.first];
        return std::tie(va.idle_since_s, va.id) < std::tie(vb.idle_since_s, vb.id);
      });
      const auto counts = exec::plan_relocation(e, static_cast<int>(idle.size()));
      std::size_t next = 0;
      for (int j = 0; j < R_; ++j) {
        for (int c = 0; c < counts[j] && next < idle.size(); ++c) {
          const int vi = idle[next++].first;
          auto& v = vehicles_[vi];
          set_vehicle(v, VehicleState::Relocating);
          ++episode_[vi];
          v.target_zone = j;
          v.busy_until_s = now_ + travel_time_s(v.xy, cfg_.regions[j].center, cfg_.speed_kmh, cfg_.detour);
          push(v.busy_until_s, Ev::VehicleFree, vi);
          ++m_.relocation_count;
          if (opts_.record_events) {
            ordered_json ev;
            ev["type"] = "relocate";
            ev["time"] = now_;
            ev["interval"] = k;
            ev["vehicle"] = v.id;
            ev["from"] = r;
            ev["to"] = j;
            events_.push_back(ev.dump());
          }
        }
      }
    }
  }

  void on_strategic_tick(int k) {
    if (k > 0 && policy_.kind == PolicyKind::Mma) close_interval(k - 1);
    if (k >= T_) return;
    for (int r = 0; r < R_; ++r) {
      purge(r);
      m_.waiting_requests[k][r] = static_cast<int>(waiting_[r].size());
      m_.vacant_vehicles[k][r] = static_cast<int>(vacant_[r].size());
      vacant_seen_[r] = static_cast<int>(vacant_[r].size());
    }
    if (policy_.kind == PolicyKind::Mma) plan(k);
    push(static_cast<double>(k + 1) * dt_, Ev::StrategicTick, k + 1);
  }

  void plan(int k) {
    const int p = cfg_.horizon.planning_intervals;
    auto fc = bundle_->window(today_d_, today_s_, k, p);
    if (opts_.perturb_amplitude > 0.0) fc = perturb_forecasts(fc, opts_.perturb_amplitude, splitmix(seed_ + k));

    slm::WorldCarryover w;
    w.carry_demand = make_matrix<double>(R_, R_, 0.0);
    w.carry_supply.assign(R_, 0.0);
    w.inflight_relocating = make_matrix<double>(p, R_, 0.0);
    w.inflight_occupied = make_matrix<double>(p, R_, 0.0);
    for (int r = 0; r < R_; ++r) {
      for (int qi : waiting_[r]) w.carry_demand[r][requests_[qi].dest_zone] += 1.0;
      w.carry_supply[r] = static_cast<double>(vacant_[r].size());
    }
    for (const auto& v : vehicles_) {
      const bool moving = v.state == VehicleState::PickingUp || v.state == VehicleState::Occupied;
      if (!moving && v.state != VehicleState::Relocating) continue;
      const int t = interval_index(v.busy_until_s, dt_) - k;
      if (t < 0 || t >= p) continue;
      (moving ? w.inflight_occupied : w.inflight_relocating)[t][v.target_zone] += 1.0;
    }

    HorizonConfig h = cfg_.horizon;
    h.alpha = policy_.alpha;
    h.beta = policy_.relocation ? policy_.beta : 0.0;
    const auto inst = slm::build_instance(k, h, graph_, fc, w, policy_.relocation);
    lr::LrOptions lo;
    lo.max_iter = cfg_.lr_max_iter;
    lo.gap_tol = cfg_.lr_gap_tol;
    lo.samples = cfg_.lr_samples;
    lo.seed = splitmix(seed_ ^ (static_cast<std::uint64_t>(kPlanning) << 40)) + static_cast<std::uint64_t>(k);
    const auto rep = lr::solve(inst, lo);
    ++solves_;
    lr_iter_sum_ += rep.iterations;
    lr_gap_sum_ += std::isfinite(rep.gap) ? rep.gap : 0.0;

    const auto g = rep.best_feasible.guidance(k);
    for (int r = 0; r < R_; ++r) ledgers_[r].reset(r, g.match_target[r]);
    reloc_plan_ = g.relocate_target;
    if (opts_.record_events) {
      ordered_json ev;
      ev["type"] = "plan";
      ev["time"] = now_;
      ev["interval"] = k;
      ev["upper"] = rep.best_upper_bound;
      ev["lower"] = rep.best_lower_bound;
      ev["iterations"] = rep.iterations;
      ev["match_target"] = g.match_target;
      ev["relocate_target"] = g.relocate_target;
      events_.push_back(ev.dump());
    }
  }

  void audit() const {
    long by_state[5] = {0, 0, 0, 0, 0};
    for (const auto& q : requests_) ++by_state[static_cast<int>(q.state)];
    if (by_state[static_cast<int>(RequestState::Completed)] != m_.completed_requests ||
        by_state[static_cast<int>(RequestState::Abandoned)] != m_.abandoned_requests)
      throw std::logic_error("request counters disagree with states");
    long active = 0;
    for (const auto& v : vehicles_) {
      if (v.state != VehicleState::Offline) ++active;
      if (v.state == VehicleState::Vacant && cfg_.zone_of(v.xy) != v.zone)
        throw std::logic_error("vacant vehicle outside its zone");
    }
    if (active > static_cast<long>(entered_.size())) throw std::logic_error("more active vehicles than entries");
    for (int r = 0; r < R_; ++r)
      for (const auto& e : vacant_[r])
        if (is_vacant(e) && vehicles_[e.first].zone != r) throw std::logic_error("vacant pool holds a foreign vehicle");
  }

  const ScenarioConfig& cfg_;
  Policy policy_;
  RunOptions opts_;
  const ForecastBundle* bundle_;
  std::uint64_t seed_;
  int R_, T_, dt_;
  ZoneGraph graph_;
  std::vector<Request> requests_;
  std::vector<Vehicle> vehicles_;
  std::vector<int> episode_;
  std::vector<int> serving_;
  std::vector<std::vector<int>> waiting_;
  std::vector<std::vector<std::pair<int, int>>> vacant_;
  std::vector<exec::MatchLedger> ledgers_;
  std::vector<int> vacant_seen_;
  Matrix<double> reloc_plan_;
  forecast::DayCounts today_d_, today_s_;
  std::set<int> entered_;
  std::mt19937_64 patience_rng_, match_rng_;
  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  SimMetrics m_;
  double pickup_sum_ = 0.0;
  long matched_ = 0;
  std::vector<std::string> events_;
  int solves_ = 0;
  double lr_iter_sum_ = 0.0, lr_gap_sum_ = 0.0;
  int ledger_excess_ = 0;
};

}  // namespace

DayResult simulate(const ScenarioConfig& cfg, const Policy& policy, const DayStream& stream, std::uint64_t seed,
                   const RunOptions& options) {
  cfg.validate();
  if (cfg.horizon.strategic_interval_s % cfg.horizon.matching_interval_s != 0)
    throw InvalidInput("strategic interval must be a multiple of the matching interval");
  if (!(options.perturb_amplitude >= 0.0 && options.perturb_amplitude < 1.0))
    throw InvalidInput("perturbation amplitude must be in [0, 1)");
  std::optional<ForecastBundle> own;
  const ForecastBundle* bundle = options.forecasts;
  if (policy.kind == PolicyKind::Mma && !bundle) {
    own = prepare_forecasts(cfg, seed);
    bundle = &*own;
  }
  Policy p = policy;
  if (p.kind != PolicyKind::Mma) p.relocation = false;
  World w(cfg, p, stream, seed, options, bundle);
  return w.run();
}

DayResult run_day(const ScenarioConfig& cfg, const Policy& policy, std::uint64_t seed, const RunOptions& options) {
  return simulate(cfg, policy, generate_day(cfg, seed), seed, options);
}

std::string metrics_csv_header(int zone_count) {
  std::string h =
      "policy,day,seed,generated,completed,abandoned,completion_rate,mean_pickup_km,relocations";
  for (int i = 0; i < zone_count; ++i)
    for (int j = 0; j < zone_count; ++j) h += ",od_" + std::to_string(i) + "_" + std::to_string(j);
  return h;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string metrics_csv_row(const std::string& policy, int day, std::uint64_t seed, const SimMetrics& m) {
  char buf[128];
  std::string row = csv_field(policy) + "," + std::to_string(day) + "," + std::to_string(seed) + "," +
                    std::to_string(m.generated_requests) + "," + std::to_string(m.completed_requests) + "," +
                    std::to_string(m.abandoned_requests);
  std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%ld", m.completion_rate, m.mean_pickup_distance_km, m.relocation_count);
  row += buf;
  for (const auto& r : m.completed_od)
    for (long v : r) row += "," + std::to_string(v);
  return row;
}

std::uint64_t day_seed(std::uint64_t seed, int day) { return splitmix(seed * 1000003ULL + static_cast<std::uint64_t>(day)); }

}  // namespace mma::sim
