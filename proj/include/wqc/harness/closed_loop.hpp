#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/harness/rbc.hpp"
#include "wqc/harness/scenario.hpp"
#include "wqc/harness/uncertainty.hpp"
#include "wqc/mpc/controller.hpp"
#include "wqc/quality/simulate.hpp"
#include "wqc/units.hpp"

namespace wqc {

struct ControlRecord {
  double time = 0.0;                 // s, start of the interval
  double duration = 0.0;             // s
  std::vector<double> u;             // mg/L per booster
  std::vector<double> booster_flow;  // m^3/s per booster
};

struct Metrics {
  double reference_deviation = 0.0;
  double smoothness = 0.0;
  double chlorine_cost_usd = 0.0;
  double total() const { return reference_deviation + smoothness + chlorine_cost_usd; }
};

struct MetricWeights {
  double q = 1.0, r = 1.0, lambda = 0.001, y_ref = 2.0;
};

struct ScenarioReport {
  std::string name, controller;
  std::vector<std::string> boosters;
  std::vector<std::string> metric_entities;
  Trajectory trajectory;  // plant, every water-quality step
  std::vector<ControlRecord> controls;
  Metrics metrics;
  MetricWeights weights;
  std::optional<double> wall_ms_per_control_step;
  std::vector<double> period_changes;  // s, times where A/B or plant demand change
  int qp_fallbacks = 0;
  std::vector<std::string> warnings;
  double lumping_period_s = 0.0;

  int probe(const std::string& name) const {
    for (size_t i = 0; i < trajectory.names.size(); ++i)
      if (trajectory.names[i] == name) return int(i);
    throw ConfigError("entity '" + name + "' was not recorded");
  }
};

// Reference deviation sums 1/2 q (y_ref - y)^2 over every water-quality step
// in (t0, t1] and every metric entity; smoothness sums 1/2 r du^2 over input
// changes at control instants in [t0, t1); chlorine cost prices the injected
// mass q^B u dt of those intervals.
inline Metrics compute_metrics(const ScenarioReport& rep, const MetricWeights& w, double t0 = -INFINITY,
                               double t1 = INFINITY) {
  Metrics m;
  std::vector<int> cols;
  for (const auto& e : rep.metric_entities) cols.push_back(rep.probe(e));
  const auto& tr = rep.trajectory;
  for (size_t k = 1; k < tr.time.size(); ++k) {
    if (!(tr.time[k] > t0 && tr.time[k] <= t1)) continue;
    for (int c : cols) {
      const double e = w.y_ref - tr.values[k][c];
      m.reference_deviation += 0.5 * w.q * e * e;
    }
  }
  std::vector<double> prev;
  for (const auto& c : rep.controls) {
    if (prev.empty()) prev.assign(c.u.size(), 0.0);
    if (c.time >= t0 && c.time < t1) {
      for (size_t i = 0; i < c.u.size(); ++i) {
        const double du = c.u[i] - prev[i];
        m.smoothness += 0.5 * w.r * du * du;
        const double mg = units::cms_to_liters_per_minute(c.booster_flow[i]) * c.u[i] * c.duration / 60.0;
        m.chlorine_cost_usd += w.lambda * mg;
      }
    }
    prev = c.u;
  }
  return m;
}

namespace detail {

inline bool is_multiple(double t, double step) {
  const double r = t / step;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

}  // namespace detail

inline ScenarioReport run_closed_loop(const ScenarioConfig& sc, const WaterNetwork& net,
                                      const HydraulicProfile& prof) {
  sc.validate();
  if (std::abs(prof.period_s - sc.hydraulic_period_s) > 1e-9)
    throw ConfigError("hydraulic profile period differs from the scenario's hydraulic period");
  const int n_periods = int(std::llround(sc.duration_s / sc.hydraulic_period_s));
  const int n_prof = int(prof.periods.size());
  if (n_periods > n_prof && !sc.repeat_hydraulics)
    throw ModelError("schedule gap: scenario needs " + std::to_string(n_periods) + " hydraulic periods, profile has " +
                     std::to_string(n_prof));

  ScheduleOptions opt;
  opt.segments = segment_counts(net, sc);
  opt.align_s = sc.alignment_s();
  opt.assembly.paper_literal_reaction = sc.paper_literal_reaction;
  const std::vector<StateSpaceSystem> nominal = build_schedule(net, prof, opt);

  const UncertaintySource unc(sc.uncertainty, sc.seed);
  const WaterNetwork plant_net = unc.perturb_reaction(net);
  const ReactionModel plant_reaction = build_reaction(plant_net);
  const IncidenceSet inc0 = build_incidence(net);

  const StateIndexMap& map = nominal.front().map;
  const double y_ref = sc.mpc.y_ref;

  ScenarioReport rep;
  rep.name = sc.name;
  rep.controller = sc.controller;
  rep.boosters = sc.mpc.boosters;
  rep.metric_entities = sc.metric_entities.empty() ? sc.mpc.sensors : sc.metric_entities;
  rep.weights = {sc.mpc.q_weight, sc.mpc.r_weight, sc.mpc.lambda, y_ref};
  rep.lumping_period_s = sc.mpc.lumping_period_s;

  std::vector<std::string> names = sc.record;
  auto add_name = [&](const std::string& n) {
    if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  };
  for (const auto& n : rep.metric_entities) add_name(n);
  if (!sc.tracking_entity.empty()) add_name(sc.tracking_entity);
  if (sc.controller == "rbc")
    for (const auto& n : sc.rbc.monitored) add_name(n);
  const std::vector<Probe> probes = make_probes(map, names);
  rep.trajectory.names = names;

  MpcController mpc(net, sc.mpc);
  std::optional<RuleTable> rules;
  std::vector<Probe> rbc_probes;
  if (sc.controller == "rbc") {
    rules.emplace(sc.rbc.rules, y_ref);
    rbc_probes = make_probes(map, sc.rbc.monitored);
  }
  const std::vector<int>& boosters = mpc.booster_nodes();
  const int nu = int(boosters.size());
  std::vector<int> sensor_idx;
  for (const auto& s : sc.mpc.sensors) {
    auto r = map.resolve(s);
    if (r.size() != 1) throw ConfigError("sensor '" + s + "' must name a single state");
    sensor_idx.push_back(r[0]);
  }

  struct Forced {
    double time;
    std::vector<int> index;
    double value;
  };
  std::vector<Forced> events;
  for (const auto& e : sc.uncertainty.events) {
    Forced f{e.time_s, {}, e.value};
    for (const auto& n : e.entities) {
      auto r = map.resolve(n);
      f.index.insert(f.index.end(), r.begin(), r.end());
    }
    events.push_back(std::move(f));
  }
  std::sort(events.begin(), events.end(), [](const Forced& a, const Forced& b) { return a.time < b.time; });
  size_t next_event = 0;

  Vec x_plant = initial_state(net, map, sc.initial_concentration);
  Vec x_model = x_plant;
  Vec x_model_prev = x_model;
  auto apply_events = [&](double t) {
    while (next_event < events.size() && events[next_event].time <= t + 1e-9) {
      for (int i : events[next_event].index) x_plant[i] = events[next_event].value;
      ++next_event;
    }
  };
  apply_events(0.0);
  rep.trajectory.record(0.0, x_plant, probes);

  const double tc = sc.control_step_s();
  Vec u = Vec::Zero(nu);
  std::map<std::pair<int, int>, StateSpaceSystem> plant_cache;
  double wall_ms = 0.0;
  int solves = 0;

  for (int p = 0; p < n_periods; ++p) {
    const int pp = p % n_prof;
    const StateSpaceSystem& sys = nominal[pp];
    const double dt = sys.dt;
    const long steps = std::lround(sc.hydraulic_period_s / dt);
    const double t_start = p * sc.hydraulic_period_s;
    const IncidenceSet inc = orient_by_flow(inc0, prof.periods[pp].link_flow);
    Discretization disc = make_discretization(net, opt.segments);
    compute_time_step(net, disc, prof.periods[pp].link_flow, opt.align_s);
    if (p > 0) rep.period_changes.push_back(t_start);

    std::vector<double> qb(nu);
    for (int i = 0; i < nu; ++i) qb[i] = sys.booster_flow[boosters[i]];

    int window = -1;
    const StateSpaceSystem* plant = nullptr;
    for (long k = 0; k < steps; ++k) {
      const double t = t_start + double(k) * dt;
      const int w = int(std::floor(t / sc.demand_period_s + 1e-9));
      if (w != window) {
        if (window >= 0 && k > 0) rep.period_changes.push_back(t);
        window = w;
        auto key = std::make_pair(pp, w);
        auto it = plant_cache.find(key);
        if (it == plant_cache.end()) {
          plant_cache.clear();
          const HydraulicPeriod hp = unc.perturb_demand(prof.periods[pp], w);
          try {
            it = plant_cache.emplace(key, assemble_system(plant_net, inc, disc, hp, plant_reaction, pp, opt.assembly))
                     .first;
          } catch (const ModelError& e) {
            throw ModelError("plant at t=" + detail::fmt_double(t) + " s: " + e.what());
          }
        }
        plant = &it->second;
      }

      if (detail::is_multiple(t, tc)) {
        const auto c0 = std::chrono::steady_clock::now();
        if (rules) {
          std::vector<double> mon;
          for (const auto& pr : rbc_probes) mon.push_back(pr.read(x_plant));
          const double dose = rbc_control(*rules, mon, y_ref);
          for (int i = 0; i < nu; ++i) {
            const double lpm = units::cms_to_liters_per_minute(qb[i]);
            u[i] = lpm > 0.0 ? dose / lpm : 0.0;
          }
        } else {
          Vec y(int(sensor_idx.size()));
          for (size_t i = 0; i < sensor_idx.size(); ++i) y[i] = x_plant[sensor_idx[i]];
          try {
            u = mpc.step(sys, x_model - x_model_prev, y, t, int(std::lround(tc / dt)));
          } catch (const std::exception& e) {
            const std::string msg = "control at t=" + detail::fmt_double(t) + " s: " + e.what();
            if (dynamic_cast<const SolverError*>(&e)) throw SolverError(msg);
            if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
            throw ModelError(msg);
          }
        }
        wall_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - c0).count();
        ++solves;
        rep.controls.push_back({t, tc, std::vector<double>(u.data(), u.data() + nu), qb});
      }

      const Vec U = mpc.expand(u, net.node_count());
      x_model_prev = x_model;
      x_model = step(sys, x_model, U);
      x_plant = step(*plant, x_plant, U);
      const double t_next = t_start + double(k + 1) * dt;
      apply_events(t_next);
      rep.trajectory.record(t_next, x_plant, probes);
    }
  }
  if (sc.timing && solves > 0) rep.wall_ms_per_control_step = wall_ms / solves;
  rep.qp_fallbacks = mpc.fallback_count();
  rep.warnings = mpc.warnings();
  rep.metrics = compute_metrics(rep, rep.weights);
  return rep;
}

inline ScenarioReport run_closed_loop(const ScenarioConfig& sc) {
  const WaterNetwork net = parse_network(read_file(sc.network));
  const HydraulicProfile prof = load_hydraulics(read_file(sc.hydraulics), net, sc.hydraulic_period_s);
  return run_closed_loop(sc, net, prof);
}

// Tracking statistics for one entity, on the per-minute view.
struct TrackingSummary {
  double max_steady_error = 0.0;    // relative to y_ref, over steady samples
  int steady_samples = 0;
  double max_after_first_horizon = 0.0;
  std::vector<std::pair<double, std::optional<double>>> recoveries;  // event time, seconds to recover
};

// Steady samples exclude the first prediction period, one prediction period
// after each hydraulic/demand change and the recovery window after each
// disturbance. Recovery is the first time after an event from which the
// entity stays inside the band for a full prediction period.
inline TrackingSummary tracking_summary(const ScenarioReport& rep, const ScenarioConfig& sc) {
  const std::string entity = sc.tracking_entity.empty() ? sc.mpc.sensors.at(0) : sc.tracking_entity;
  const int c = rep.probe(entity);
  const double y_ref = sc.mpc.y_ref, band = sc.tracking_band * y_ref, tp = sc.prediction_period_s;
  TrackingSummary s;
  const auto& tr = rep.trajectory;
  for (const auto& e : sc.uncertainty.events) {
    std::optional<double> rec;
    double entered = -1.0;
    for (size_t k = 0; k < tr.time.size(); ++k) {
      const double t = tr.time[k];
      if (t <= e.time_s + 1e-9) continue;
      const bool in = std::abs(tr.values[k][c] - y_ref) <= band;
      if (!in) {
        entered = -1.0;
        continue;
      }
      if (entered < 0.0) entered = t;
      if (t - entered >= tp - 1e-9) {
        rec = entered - e.time_s;
        break;
      }
    }
    s.recoveries.emplace_back(e.time_s, rec);
  }
  const Trajectory pm = tr.per_minute();
  for (size_t k = 0; k < pm.time.size(); ++k) {
    const double t = pm.time[k], v = pm.values[k][c];
    if (t >= tp) s.max_after_first_horizon = std::max(s.max_after_first_horizon, v);
    bool steady = t >= tp;
    for (double ch : rep.period_changes)
      if (t >= ch && t < ch + tp) steady = false;
    for (const auto& e : sc.uncertainty.events)
      if (t >= e.time_s && t < e.time_s + sc.recovery_window_s) steady = false;
    if (!steady) continue;
    ++s.steady_samples;
    s.max_steady_error = std::max(s.max_steady_error, std::abs(v - y_ref) / y_ref);
  }
  return s;
}

}  // namespace wqc
