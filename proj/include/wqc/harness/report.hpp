#pragma once

#include <json.hpp>
#include <filesystem>
#include <fstream>
#include <string>

#include "wqc/errors.hpp"
#include "wqc/harness/closed_loop.hpp"
#include "wqc/mpc/accounting.hpp"
#include "wqc/network/network.hpp"

namespace wqc {

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  return out;
}

inline std::string file_safe(std::string s) {
  for (char& c : s)
    if (c == ':' || c == '/' || c == '\\') c = '_';
  return s;
}

}  // namespace detail

inline nlohmann::ordered_json metrics_json(const ScenarioReport& rep) {
  nlohmann::ordered_json j;
  j["reference_deviation"] = rep.metrics.reference_deviation;
  j["smoothness"] = rep.metrics.smoothness;
  j["chlorine_cost_usd"] = rep.metrics.chlorine_cost_usd;
  j["total"] = rep.metrics.total();
  if (rep.wall_ms_per_control_step)
    j["wall_ms_per_control_step"] = *rep.wall_ms_per_control_step;
  else
    j["wall_ms_per_control_step"] = nullptr;
  return j;
}

// trajectories.csv, controls.csv, metrics.json and plotseries/ (per-minute
// series per entity, plus lumped controls when a lumping period is set).
inline void export_report(const ScenarioReport& rep, const std::filesystem::path& dir) {
  using detail::fmt_double;
  std::error_code ec;
  std::filesystem::create_directories(dir / "plotseries", ec);
  if (ec) throw ConfigError("cannot create '" + dir.string() + "': " + ec.message());

  {
    auto out = detail::open_out(dir / "trajectories.csv");
    out << "time,entity,value\n";
    const auto& tr = rep.trajectory;
    for (size_t k = 0; k < tr.time.size(); ++k)
      for (size_t i = 0; i < tr.names.size(); ++i)
        out << fmt_double(tr.time[k]) << "," << tr.names[i] << "," << fmt_double(tr.values[k][i]) << "\n";
  }
  {
    auto out = detail::open_out(dir / "controls.csv");
    out << "time,booster,u_mg_per_l,dose_mg_per_min\n";
    for (const auto& c : rep.controls)
      for (size_t i = 0; i < c.u.size(); ++i)
        out << fmt_double(c.time) << "," << rep.boosters[i] << "," << fmt_double(c.u[i]) << ","
            << fmt_double(c.u[i] * units::cms_to_liters_per_minute(c.booster_flow[i])) << "\n";
  }
  {
    auto out = detail::open_out(dir / "metrics.json");
    out << metrics_json(rep).dump(2) << "\n";
  }
  const Trajectory pm = rep.trajectory.per_minute();
  for (size_t i = 0; i < pm.names.size(); ++i) {
    auto out = detail::open_out(dir / "plotseries" / (detail::file_safe(pm.names[i]) + ".csv"));
    out << "minute,value\n";
    for (size_t k = 0; k < pm.time.size(); ++k)
      out << fmt_double(pm.time[k] / 60.0) << "," << fmt_double(pm.values[k][i]) << "\n";
  }
  if (rep.lumping_period_s > 0.0 && !rep.controls.empty()) {
    const double tc = rep.controls.front().duration;
    const double r = rep.lumping_period_s / tc;
    const int per = int(std::lround(r));
    if (per < 1 || std::abs(r - per) > 1e-9) throw ConfigError("lumping period is not a multiple of the control step");
    auto out = detail::open_out(dir / "plotseries" / "controls_lumped.csv");
    out << "time,booster,u_mg_per_l\n";
    const size_t usable = rep.controls.size() - rep.controls.size() % size_t(per);
    for (size_t i = 0; i < rep.boosters.size(); ++i) {
      std::vector<double> u, q;
      for (size_t k = 0; k < usable; ++k) {
        u.push_back(rep.controls[k].u[i]);
        q.push_back(rep.controls[k].booster_flow[i]);
      }
      const auto lumped = lump_schedule(u, per, q);
      for (size_t b = 0; b < lumped.size(); ++b)
        out << fmt_double(rep.controls[b * per].time) << "," << rep.boosters[i] << "," << fmt_double(lumped[b]) << "\n";
    }
  }
}

}  // namespace wqc
