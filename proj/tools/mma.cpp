#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "mma/forecast.hpp"
#include "mma/lr.hpp"
#include "mma/sim.hpp"
#include "mma/slm.hpp"

namespace fs = std::filesystem;
using namespace mma;

namespace {

constexpr int kOk = 0, kRuntime = 1, kUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw InvalidInput("cannot write " + p.string());
  return out;
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InvalidInput("cannot create output directory " + dir);
  return fs::path(dir);
}

std::string default_out_dir() {
  const char* env = std::getenv("MMA_OUT_DIR");
  return env && *env ? env : "out";
}

sim::ScenarioConfig scenario(const std::string& path) { return path.empty() ? sim::toy_scenario() : sim::load_config(path); }

// ------------------------------------------------------------ simulate

struct SimulateArgs {
  std::string config, out, requests_csv, vehicles_csv;
  std::vector<std::string> policies{"batch"};
  int days = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  double perturb = 0.0;
  bool irregular = false;
  bool no_events = false;
};

struct Summary {
  int days = 0;
  double completed = 0, rate = 0, pickup = 0, relocations = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto cfg = scenario(a.config);
  std::vector<sim::Policy> policies;
  for (const auto& p : a.policies) policies.push_back(sim::Policy::parse(p));
  if (a.days < 0) throw InvalidInput("--days must be >= 0");
  if (a.threads < 1) throw InvalidInput("--threads must be >= 1");
  if (a.requests_csv.empty() != a.vehicles_csv.empty())
    throw InvalidInput("--requests and --vehicles must be given together");
  const auto dir = ensure_dir(a.out);

  std::optional<sim::ForecastBundle> bundle;
  const bool any_mma = std::any_of(policies.begin(), policies.end(), [](const auto& p) { return p.kind == sim::PolicyKind::Mma; });
  if (any_mma && a.days > 0) bundle = sim::prepare_forecasts(cfg, a.seed);

  struct Job {
    std::size_t policy;
    int day;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < policies.size(); ++p)
    for (int d = 0; d < a.days; ++d) jobs.push_back({p, d});
  std::vector<sim::DayResult> results(jobs.size());
  std::vector<std::string> errors(jobs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) {
      try {
        const auto& job = jobs[i];
        const std::uint64_t s = sim::day_seed(a.seed, job.day);
        sim::RunOptions o;
        o.perturb_amplitude = a.perturb;
        o.record_events = !a.no_events;
        o.forecasts = bundle ? &*bundle : nullptr;
        auto stream = a.requests_csv.empty() ? sim::generate_day(cfg, s)
                                             : sim::read_stream_csv(a.requests_csv, a.vehicles_csv, cfg, s);
        if (a.irregular) stream = sim::apply_irregular_events(stream, sim::toy_irregular_schedule(), cfg, s);
        results[i] = sim::simulate(cfg, policies[job.policy], stream, s, o);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(a.threads, std::max<int>(1, static_cast<int>(jobs.size())));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (!errors[i].empty()) throw std::runtime_error("day " + std::to_string(jobs[i].day) + ": " + errors[i]);

  auto metrics = open_out(dir / "metrics.csv");
  auto events = open_out(dir / "events.jsonl");
  metrics << sim::metrics_csv_header(cfg.zone_count()) << '\n';
  std::vector<Summary> sums(policies.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    const auto name = policies[job.policy].name();
    const auto& m = results[i].metrics;
    metrics << sim::metrics_csv_row(name, job.day, sim::day_seed(a.seed, job.day), m) << '\n';
    const std::string tag = "{\"policy\":\"" + name + "\",\"day\":" + std::to_string(job.day) + ",";
    for (const auto& e : results[i].events) events << tag << e.substr(1) << '\n';
    auto& s = sums[job.policy];
    ++s.days;
    s.completed += m.completed_requests;
    s.rate += m.completion_rate;
    s.pickup += m.mean_pickup_distance_km;
    s.relocations += m.relocation_count;
  }

  std::optional<double> batch_completed;
  for (std::size_t p = 0; p < policies.size(); ++p)
    if (policies[p].kind == sim::PolicyKind::Batch && sums[p].days > 0) batch_completed = sums[p].completed / sums[p].days;
  auto summary = open_out(dir / "summary.csv");
  summary << "policy,days,completed,completion_rate,improvement_vs_batch,mean_pickup_km,relocations\n";
  std::printf("%-14s %5s %10s %9s %12s %10s %11s\n", "policy", "days", "completed", "rate(%)", "vs batch(%)",
              "pickup km", "relocations");
  for (std::size_t p = 0; p < policies.size(); ++p) {
    const auto& s = sums[p];
    if (s.days == 0) continue;
    const double c = s.completed / s.days;
    char imp[32] = "";
    if (batch_completed && *batch_completed > 0)
      std::snprintf(imp, sizeof imp, "%.2f", 100.0 * (c - *batch_completed) / *batch_completed);
    char line[256];
    std::snprintf(line, sizeof line, "%s,%d,%.2f,%.6f,%s,%.6f,%.2f", sim::csv_field(policies[p].name()).c_str(), s.days, c,
                  s.rate / s.days, imp, s.pickup / s.days, s.relocations / s.days);
    summary << line << '\n';
    std::printf("%-14s %5d %10.1f %9.2f %12s %10.4f %11.1f\n", policies[p].name().c_str(), s.days, c,
                100.0 * s.rate / s.days, *imp ? imp : "-", s.pickup / s.days, s.relocations / s.days);
  }
  std::printf("wrote %s\n", (dir / "metrics.csv").string().c_str());
  return kOk;
}

// ------------------------------------------------------------ solve-slm

struct SolveArgs {
  std::string instance, out;
  int max_iter = 50;
  double gap_tol = 0.03;
  int samples = 5;
  std::uint64_t seed = 1;
  bool exact = false;
  int cell_limit = 16;
};

int cmd_solve_slm(const SolveArgs& a) {
  const auto inst = slm::instance_from_json(read_file(a.instance));
  std::optional<slm::SlmSolution> exact;
  if (a.exact) {
    try {
      exact = slm::exact_solve(inst, a.cell_limit);
    } catch (const slm::CellLimitExceeded& e) {
      std::fprintf(stderr, "mma: refusing --exact: %s\n", e.what());
      return kUsage;
    }
  }
  lr::LrOptions o;
  o.max_iter = a.max_iter;
  o.gap_tol = a.gap_tol;
  o.samples = a.samples;
  o.seed = a.seed;
  const auto rep = lr::solve(inst, o);
  const auto dir = ensure_dir(a.out);
  open_out(dir / "solution.json") << slm::solution_to_json(rep.best_feasible) << '\n';
  std::string report = rep.to_json(false);
  if (exact) {
    report.pop_back();
    char buf[96];
    std::snprintf(buf, sizeof buf, ",\"exact_objective\":%.17g}", exact->objective);
    report += buf;
  }
  open_out(dir / "report.json") << report << '\n';
  std::printf("objective %.6f  upper %.6f  gap %.6g  iterations %d%s\n", rep.best_lower_bound, rep.best_upper_bound,
              rep.gap, rep.iterations, rep.converged ? "  converged" : "");
  if (exact) {
    const double rel = (rep.best_upper_bound - exact->objective) / std::max(exact->objective, 1.0);
    std::printf("exact %.6f  (UB - exact) / exact %.6g\n", exact->objective, rel);
  }
  return kOk;
}

// ------------------------------------------------------------ fit-forecast

struct FitArgs {
  std::string config, out;
  int synthetic_days = 8;
  int test_days = 2;
  double l1 = -1.0;
  int horizon = 0;
  std::uint64_t seed = 1;
  std::vector<std::string> history_requests, history_vehicles;
};

struct ErAccum {
  std::vector<double> err, tot;
  void add(int h, double p, double y) {
    err[h] += std::abs(p - y);
    tot[h] += y;
  }
  std::string at(int h) const {
    if (tot[h] <= 0) return "undefined";
    char b[32];
    std::snprintf(b, sizeof b, "%.4f", err[h] / tot[h]);
    return b;
  }
};

void score(const forecast::ForecastModel& m, const std::vector<forecast::DayCounts>& past, const forecast::DayCounts& day,
           ErAccum& acc) {
  const int T = static_cast<int>(day.size()), p = m.horizon();
  for (int k = 0; k < T; ++k) {
    const auto w = forecast::predict_window(m, past, day, k, p);
    for (int h = 0; h < p && k + h < T; ++h)
      for (int r = 0; r < m.zone_count; ++r) acc.add(h, w.values[h][r], day[k + h][r]);
  }
}

int cmd_fit_forecast(const FitArgs& a) {
  auto cfg = scenario(a.config);
  const int p = a.horizon > 0 ? a.horizon : cfg.horizon.planning_intervals;
  const double l1 = a.l1 >= 0 ? a.l1 : cfg.forecast_l1;
  if (a.history_requests.size() != a.history_vehicles.size())
    throw InvalidInput("--history-requests and --history-vehicles must pair up");
  std::vector<forecast::DayCounts> dem, sup;
  if (!a.history_requests.empty()) {
    for (std::size_t i = 0; i < a.history_requests.size(); ++i) {
      const auto h = sim::summarize_day(cfg, sim::read_stream_csv(a.history_requests[i], a.history_vehicles[i], cfg, a.seed));
      dem.push_back(h.demand);
      sup.push_back(h.supply);
    }
  } else {
    if (a.synthetic_days < 0) throw InvalidInput("--synthetic-days must be >= 0");
    for (int d = 0; d < a.synthetic_days + a.test_days; ++d) {
      const auto h = sim::summarize_day(cfg, sim::generate_day(cfg, sim::day_seed(a.seed, 1000 + d)));
      dem.push_back(h.demand);
      sup.push_back(h.supply);
    }
  }
  const int test = a.history_requests.empty() ? a.test_days : 0;
  const int train = static_cast<int>(dem.size()) - test;
  const std::vector<forecast::DayCounts> dtrain(dem.begin(), dem.begin() + train), strain(sup.begin(), sup.begin() + train);
  const auto md = forecast::fit_forecaster(forecast::Target::Demand, dtrain, p, l1);
  const auto ms = forecast::fit_forecaster(forecast::Target::Supply, strain, p, l1);

  const auto dir = ensure_dir(a.out);
  open_out(dir / "demand_model.json") << forecast::model_to_json(md) << '\n';
  open_out(dir / "supply_model.json") << forecast::model_to_json(ms) << '\n';

  auto report = open_out(dir / "forecast_er.csv");
  report << "target,h,train_er,test_er,nonzero_coefficients\n";
  std::printf("%-7s %3s %10s %10s %8s\n", "target", "h", "train ER", "test ER", "nonzero");
  for (auto [target, model, days] : {std::tuple{"demand", &md, &dem}, std::tuple{"supply", &ms, &sup}}) {
    const int need = forecast::required_past_days(model->target);
    ErAccum tr{std::vector<double>(p), std::vector<double>(p)}, te = tr;
    for (int d = need; d < train; ++d)
      score(*model, {days->begin(), days->begin() + d}, (*days)[d], tr);
    for (int d = train; d < static_cast<int>(days->size()); ++d)
      score(*model, {days->begin(), days->begin() + d}, (*days)[d], te);
    for (int h = 0; h < p; ++h) {
      const auto& lm = model->at(h, 0);
      const long nz = std::count_if(lm.coef.begin(), lm.coef.end(), [](double c) { return c != 0.0; });
      const auto tre = tr.at(h), tee = test > 0 ? te.at(h) : std::string("-");
      report << target << ',' << h << ',' << tre << ',' << tee << ',' << nz << '\n';
      std::printf("%-7s %3d %10s %10s %8ld\n", target, h, tre.c_str(), tee.c_str(), nz);
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based dispatch: simulate, solve strategic instances, fit forecasters"};
  app.require_subcommand(1);

  SimulateArgs sa;
  sa.out = default_out_dir();
  auto* sim_cmd = app.add_subcommand("simulate", "Run seeded simulated days and write metrics.csv, events.jsonl, summary.csv");
  sim_cmd->add_option("--config", sa.config, "Scenario JSON (default: built-in toy network)");
  sim_cmd->add_option("--policy", sa.policies, "fcfs | batch | mma-noreloc | mma | mma:ALPHA,BETA (repeatable)")
      ->delimiter(';');
  sim_cmd->add_option("--days", sa.days, "Number of days")->capture_default_str();
  sim_cmd->add_option("--seed", sa.seed, "Run seed")->capture_default_str();
  sim_cmd->add_option("--out", sa.out, "Output directory (default $MMA_OUT_DIR or ./out)");
  sim_cmd->add_option("--threads", sa.threads, "Days simulated in parallel")->capture_default_str();
  sim_cmd->add_option("--perturb", sa.perturb, "Forecast perturbation amplitude in [0,1)");
  sim_cmd->add_flag("--irregular", sa.irregular, "Apply the irregular-event schedule");
  sim_cmd->add_option("--requests", sa.requests_csv, "Replay requests.csv instead of generating days");
  sim_cmd->add_option("--vehicles", sa.vehicles_csv, "Replay vehicles.csv (with --requests)");
  sim_cmd->add_flag("--no-events", sa.no_events, "Skip the event log");

  SolveArgs va;
  va.out = default_out_dir();
  auto* solve_cmd = app.add_subcommand("solve-slm", "Solve a serialized strategic instance by Lagrangian relaxation");
  solve_cmd->add_option("instance", va.instance, "Instance JSON")->required();
  solve_cmd->add_option("--max-iter", va.max_iter, "Iteration cap")->capture_default_str();
  solve_cmd->add_option("--gap-tol", va.gap_tol, "Stop below this relative gap")->capture_default_str();
  solve_cmd->add_option("--samples", va.samples, "Heuristic samples per iteration")->capture_default_str();
  solve_cmd->add_option("--seed", va.seed, "Heuristic seed")->capture_default_str();
  solve_cmd->add_flag("--exact", va.exact, "Also solve exactly by pattern enumeration");
  solve_cmd->add_option("--cell-limit", va.cell_limit, "Largest p*R accepted by --exact")->capture_default_str();
  solve_cmd->add_option("--out", va.out, "Output directory");

  FitArgs fa;
  fa.out = default_out_dir();
  auto* fit_cmd = app.add_subcommand("fit-forecast", "Fit per-horizon Lasso forecasters and report ER");
  fit_cmd->add_option("--config", fa.config, "Scenario JSON (default: built-in toy network)");
  fit_cmd->add_option("--synthetic-days", fa.synthetic_days, "Generated training days")->capture_default_str();
  fit_cmd->add_option("--test-days", fa.test_days, "Generated held-out days")->capture_default_str();
  fit_cmd->add_option("--history-requests", fa.history_requests, "requests.csv per history day")->expected(1, -1);
  fit_cmd->add_option("--history-vehicles", fa.history_vehicles, "vehicles.csv per history day")->expected(1, -1);
  fit_cmd->add_option("--l1", fa.l1, "L1 weight (default from config)");
  fit_cmd->add_option("--horizon", fa.horizon, "Look-ahead intervals (default from config)");
  fit_cmd->add_option("--seed", fa.seed, "Seed")->capture_default_str();
  fit_cmd->add_option("--out", fa.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  try {
    if (*sim_cmd) return cmd_simulate(sa);
    if (*solve_cmd) return cmd_solve_slm(va);
    if (*fit_cmd) return cmd_fit_forecast(fa);
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "mma: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mma: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
