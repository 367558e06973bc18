#pragma once

#include <json.hpp>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/mpc/controller.hpp"
#include "wqc/network/hydraulics.hpp"
#include "wqc/network/network.hpp"

namespace wqc {

struct DisturbanceEvent {
  double time_s = 0.0;
  std::vector<std::string> entities;  // node, pump/valve, pipe (all segments) or pipe:k
  double value = 1.0;                 // mg/L forced into the plant state
};

struct UncertaintySpec {
  double demand_band = 0.0;    // relative, demand multipliers in [1-b, 1+b]
  double reaction_band = 0.0;  // relative, applied to k^b and k^w
  std::vector<DisturbanceEvent> events;
};

struct RbcRule {
  double lower, upper;      // deviation interval [lower, upper)
  double dose_mg_per_min;
};

struct RbcConfig {
  std::vector<RbcRule> rules;
  std::vector<std::string> monitored;  // deviation is the mean error over these
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::filesystem::path network, hydraulics;
  double duration_s = 86400.0;          // T_d
  double hydraulic_period_s = 3600.0;   // T_h
  double demand_period_s = 3600.0;      // T_n
  double prediction_period_s = 300.0;   // T_p
  double control_interval_s = 0.0;      // 0: T_p
  bool repeat_hydraulics = false;
  int segments = 100;                   // per pipe unless overridden
  std::map<std::string, int> segments_by_pipe;
  double initial_concentration = 0.0;   // mg/L everywhere except reservoirs
  bool paper_literal_reaction = false;
  std::string controller = "mpc";       // mpc | rbc
  ControllerConfig mpc;
  RbcConfig rbc;
  UncertaintySpec uncertainty;
  std::vector<std::string> record;          // entities written to trajectories
  std::vector<std::string> metric_entities; // default: controller sensors
  std::string tracking_entity;              // default: first sensor
  double tracking_band = 0.05;              // relative to y_ref
  double recovery_window_s = 1800.0;
  std::uint64_t seed = 1;
  bool timing = true;

  double control_step_s() const { return control_interval_s > 0.0 ? control_interval_s : prediction_period_s; }

  // Interval every water-quality step must tile.
  double alignment_s() const {
    long long g = 0;
    for (double v : {hydraulic_period_s, demand_period_s, prediction_period_s, control_step_s()}) {
      const long long k = std::llround(v);
      if (k <= 0 || std::abs(v - double(k)) > 1e-9) throw ConfigError("time scales must be whole positive seconds");
      g = std::gcd(g, k);
    }
    return double(g);
  }

  void validate() const {
    alignment_s();
    auto whole = [](double a, double b) {
      const double r = a / b;
      return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
    };
    if (!(duration_s > 0.0)) throw ConfigError("duration must be positive");
    if (!whole(duration_s, hydraulic_period_s) || !whole(duration_s, prediction_period_s))
      throw ConfigError("duration must be a whole number of hydraulic and prediction periods");
    if (!whole(duration_s, control_step_s())) throw ConfigError("duration must be a whole number of control steps");
    if (controller != "mpc" && controller != "rbc") throw ConfigError("controller must be 'mpc' or 'rbc'");
    if (!(uncertainty.demand_band > -1.0) || !(uncertainty.reaction_band > -1.0))
      throw ConfigError("uncertainty bands must exceed -1");
    for (const auto& e : uncertainty.events)
      if (e.time_s < 0.0 || e.time_s > duration_s) throw ConfigError("disturbance event outside the simulated horizon");
    if (segments < 1) throw ConfigError("segments must be positive");
  }
};

namespace detail {

template <class T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

// null means unbounded: -inf for a lower bound, +inf for an upper one.
inline double get_bound(const nlohmann::json& j, const char* key, double dflt, bool lower) {
  if (!j.contains(key)) return dflt;
  if (j.at(key).is_null()) return lower ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  return j.at(key).get<double>();
}

}  // namespace detail

// Relative paths resolve against `base`.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  using detail::get_if;
  ScenarioConfig s;
  try {
    get_if(j, "name", s.name);
    std::string net, hyd;
    get_if(j, "network", net);
    get_if(j, "hydraulics", hyd);
    if (!net.empty()) s.network = base / net;
    if (!hyd.empty()) s.hydraulics = base / hyd;
    get_if(j, "duration_s", s.duration_s);
    get_if(j, "hydraulic_period_s", s.hydraulic_period_s);
    get_if(j, "demand_period_s", s.demand_period_s);
    get_if(j, "prediction_period_s", s.prediction_period_s);
    get_if(j, "control_interval_s", s.control_interval_s);
    get_if(j, "repeat_hydraulics", s.repeat_hydraulics);
    if (j.contains("segments")) {
      if (j["segments"].is_object())
        for (auto& [k, v] : j["segments"].items()) {
          if (k == "default") s.segments = v.get<int>();
          else s.segments_by_pipe[k] = v.get<int>();
        }
      else
        s.segments = j["segments"].get<int>();
    }
    get_if(j, "initial_concentration", s.initial_concentration);
    get_if(j, "paper_literal_reaction", s.paper_literal_reaction);
    get_if(j, "controller", s.controller);
    get_if(j, "record", s.record);
    get_if(j, "metric_entities", s.metric_entities);
    get_if(j, "tracking_entity", s.tracking_entity);
    get_if(j, "tracking_band", s.tracking_band);
    get_if(j, "recovery_window_s", s.recovery_window_s);
    get_if(j, "seed", s.seed);
    get_if(j, "timing", s.timing);
    s.mpc.prediction_period_s = s.prediction_period_s;
    if (j.contains("mpc")) {
      const auto& m = j["mpc"];
      get_if(m, "horizon_steps", s.mpc.horizon_steps);
      get_if(m, "y_ref", s.mpc.y_ref);
      get_if(m, "lambda", s.mpc.lambda);
      get_if(m, "q_weight", s.mpc.q_weight);
      get_if(m, "r_weight", s.mpc.r_weight);
      s.mpc.y_min = detail::get_bound(m, "y_min", s.mpc.y_min, true);
      s.mpc.y_max = detail::get_bound(m, "y_max", s.mpc.y_max, false);
      s.mpc.u_min = detail::get_bound(m, "u_min", s.mpc.u_min, true);
      s.mpc.u_max = detail::get_bound(m, "u_max", s.mpc.u_max, false);
      get_if(m, "sensors", s.mpc.sensors);
      get_if(m, "boosters", s.mpc.boosters);
      get_if(m, "constrained", s.mpc.constrained);
      get_if(m, "lumping_period_s", s.mpc.lumping_period_s);
    }
    if (j.contains("rbc")) {
      const auto& r = j["rbc"];
      get_if(r, "monitored", s.rbc.monitored);
      if (r.contains("rules"))
        for (const auto& rule : r["rules"])
          s.rbc.rules.push_back({rule.at("lower").get<double>(), rule.at("upper").get<double>(),
                                 rule.at("dose_mg_per_min").get<double>()});
    }
    if (j.contains("uncertainty")) {
      const auto& u = j["uncertainty"];
      get_if(u, "demand_band", s.uncertainty.demand_band);
      get_if(u, "reaction_band", s.uncertainty.reaction_band);
      if (u.contains("events"))
        for (const auto& e : u["events"])
          s.uncertainty.events.push_back(
              {e.at("time_s").get<double>(), e.at("entities").get<std::vector<std::string>>(), e.value("value", 1.0)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  s.mpc.prediction_period_s = s.prediction_period_s;
  return s;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ScenarioConfig load_scenario(const std::filesystem::path& file) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(file));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("scenario '" + file.string() + "': " + e.what());
  }
  return scenario_from_json(j, file.parent_path());
}

inline std::vector<int> segment_counts(const WaterNetwork& net, const ScenarioConfig& s) {
  std::vector<int> seg(net.pipes.size(), s.segments);
  for (const auto& [id, n] : s.segments_by_pipe) {
    auto l = net.find_link(id);
    if (!l || *l >= int(net.pipes.size())) throw ConfigError("segment override for unknown pipe '" + id + "'");
    if (n < 1) throw ConfigError("pipe '" + id + "' needs at least one segment");
    seg[*l] = n;
  }
  return seg;
}

}  // namespace wqc
