#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <random>

#include "mma/exec.hpp"
#include "mma/forecast.hpp"
#include "mma/lr.hpp"
#include "mma/sim.hpp"
#include "mma/slm.hpp"

namespace py = pybind11;
using namespace mma;

namespace {

py::object parse_json(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

std::string dump_json(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return obj.cast<std::string>();
  return py::module_::import("json").attr("dumps")(obj).cast<std::string>();
}

py::dict metrics_dict(const SimMetrics& m) {
  py::dict d;
  d["generated"] = m.generated_requests;
  d["completed"] = m.completed_requests;
  d["abandoned"] = m.abandoned_requests;
  d["completion_rate"] = m.completion_rate;
  d["mean_pickup_km"] = m.mean_pickup_distance_km;
  d["relocations"] = m.relocation_count;
  d["completed_od"] = m.completed_od;
  return d;
}

sim::ScenarioConfig config_arg(const py::object& config) {
  if (config.is_none()) return sim::toy_scenario();
  return sim::config_from_json(dump_json(config));
}

}  // namespace

PYBIND11_MODULE(mma_dispatch, m) {
  m.doc() = "Multi-module dispatch: strategic planning, matching and simulation";

  m.def(
      "mva_allocate",
      [](int n_s, const std::vector<int>& n_d, const std::vector<double>& d, std::optional<std::uint64_t> seed) {
        exec::MvaResult r;
        if (seed) {
          std::mt19937_64 rng(*seed);
          r = exec::mva_allocate(n_s, n_d, d, rng);
        } else {
          r = exec::mva_allocate(n_s, n_d, d);
        }
        return py::make_tuple(r.x, r.fallback);
      },
      py::arg("n_s"), py::arg("n_d"), py::arg("d"), py::arg("seed") = py::none(),
      "Allocation x and whether the waiting-demand fallback was used.");
  m.def("mva_objective", &exec::mva_objective, py::arg("n_s"), py::arg("n_d"), py::arg("d"), py::arg("x"));
  m.def("relocate_greedy", &exec::relocate_greedy, py::arg("e"), py::arg("l"));
  m.def("plan_relocation", &exec::plan_relocation, py::arg("e"), py::arg("l"));

  m.def(
      "vom_match",
      [](const std::vector<std::tuple<std::int64_t, double, double>>& vehicles,
         const std::vector<std::tuple<std::int64_t, int, double, double, double>>& customers,
         std::optional<std::vector<int>> x) {
        exec::MatchPool pool;
        for (const auto& [id, vx, vy] : vehicles) pool.vehicles.push_back({id, {vx, vy}});
        for (const auto& [id, dest, gen, cx, cy] : customers) pool.customers.push_back({id, dest, gen, {cx, cy}});
        const auto a = exec::vom_match(pool, x);
        std::vector<std::tuple<std::int64_t, std::int64_t, double>> pairs;
        for (const auto& p : a.pairs) pairs.emplace_back(p.vehicle_id, p.request_id, p.pickup_km);
        return py::make_tuple(pairs, a.cost);
      },
      py::arg("vehicles"), py::arg("customers"), py::arg("x") = py::none(),
      "vehicles: (id, x, y); customers: (id, dest, gen_time_s, x, y). Returns (pairs, cost).");

  m.def("soft_threshold", &forecast::soft_threshold, py::arg("z"), py::arg("gamma"));
  m.def(
      "fit_lasso",
      [](const Matrix<double>& x, const std::vector<double>& y, double l1, double tol) {
        std::vector<double> trace;
        const auto f = forecast::fit_lasso(x, y, l1, tol, 10000, &trace);
        py::dict d;
        d["coef"] = f.coef;
        d["intercept"] = f.intercept;
        d["sweeps"] = f.sweeps;
        d["converged"] = f.converged;
        d["trace"] = trace;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("l1"), py::arg("tol") = 1e-9);
  m.def("estimate_transition", &forecast::estimate_transition, py::arg("od_counts"));
  m.def("attrition_rate", &forecast::attrition_rate, py::arg("phi_s"), py::arg("dt_s"));

  m.def(
      "empty_instance",
      [](int zones, int intervals) {
        auto in = slm::empty_instance(zones, intervals);
        in.big_m = in.default_big_m();
        return parse_json(slm::instance_to_json(in));
      },
      py::arg("zones"), py::arg("intervals"));
  m.def(
      "solve_slm",
      [](const py::object& instance, int max_iter, double gap_tol, int samples, std::uint64_t seed) {
        const auto in = slm::instance_from_json(dump_json(instance));
        lr::LrOptions o;
        o.max_iter = max_iter;
        o.gap_tol = gap_tol;
        o.samples = samples;
        o.seed = seed;
        std::string text;
        {
          py::gil_scoped_release nogil;
          text = lr::solve(in, o).to_json();
        }
        return parse_json(text);
      },
      py::arg("instance"), py::arg("max_iter") = 50, py::arg("gap_tol") = 0.03, py::arg("samples") = 5,
      py::arg("seed") = 1, "Lagrangian relaxation; instance as dict or JSON text, returns the report dict.");
  m.def(
      "exact_solve",
      [](const py::object& instance, int cell_limit) {
        const auto in = slm::instance_from_json(dump_json(instance));
        std::string text;
        {
          py::gil_scoped_release nogil;
          text = slm::solution_to_json(slm::exact_solve(in, cell_limit));
        }
        return parse_json(text);
      },
      py::arg("instance"), py::arg("cell_limit") = 16);

  m.def("toy_config", [] { return parse_json(sim::config_to_json(sim::toy_scenario())); });
  m.def("policy_name", [](const std::string& text) { return sim::Policy::parse(text).name(); }, py::arg("policy"));
  m.def("day_seed", &sim::day_seed, py::arg("seed"), py::arg("day"));
  m.def("metrics_csv_header", &sim::metrics_csv_header, py::arg("zone_count"));
  m.def(
      "simulate",
      [](const std::string& policy, int days, std::uint64_t seed, const py::object& config, double perturb,
         bool irregular) {
        const auto cfg = config_arg(config);
        const auto p = sim::Policy::parse(policy);
        if (days < 0) throw InvalidInput("days must be >= 0");
        std::vector<sim::DayResult> results;
        {
          py::gil_scoped_release nogil;
          std::optional<sim::ForecastBundle> bundle;
          if (p.kind == sim::PolicyKind::Mma && days > 0) bundle = sim::prepare_forecasts(cfg, seed);
          for (int d = 0; d < days; ++d) {
            const auto s = sim::day_seed(seed, d);
            auto stream = sim::generate_day(cfg, s);
            if (irregular) stream = sim::apply_irregular_events(stream, sim::toy_irregular_schedule(), cfg, s);
            sim::RunOptions o;
            o.perturb_amplitude = perturb;
            o.record_events = false;
            o.forecasts = bundle ? &*bundle : nullptr;
            results.push_back(sim::simulate(cfg, p, stream, s, o));
          }
        }
        py::list out;
        for (int d = 0; d < days; ++d) {
          auto row = metrics_dict(results[d].metrics);
          row["day"] = d;
          row["seed"] = sim::day_seed(seed, d);
          row["policy"] = p.name();
          row["strategic_solves"] = results[d].strategic_solves;
          row["csv"] = sim::metrics_csv_row(p.name(), d, sim::day_seed(seed, d), results[d].metrics);
          out.append(row);
        }
        return out;
      },
      py::arg("policy") = "batch", py::arg("days") = 1, py::arg("seed") = 1, py::arg("config") = py::none(),
      py::arg("perturb") = 0.0, py::arg("irregular") = false,
      "Per-day metrics dicts; config is a dict or JSON text, None for the built-in toy network.");
}
