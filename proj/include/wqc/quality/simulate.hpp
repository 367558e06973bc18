#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/quality/assembly.hpp"

namespace wqc {

struct ScheduleOptions {
  std::vector<int> segments;  // per pipe
  // Steps must tile this interval (s); also the hydraulic period must be a multiple.
  double align_s = 3600.0;
  AssemblyOptions assembly;
};

// One assembled system per hydraulic period; dt is recomputed per period.
inline std::vector<StateSpaceSystem> build_schedule(const WaterNetwork& net,
                                                    const HydraulicProfile& prof,
                                                    const ScheduleOptions& opt) {
  const IncidenceSet inc0 = build_incidence(net);
  const ReactionModel reaction = build_reaction(net);
  std::vector<StateSpaceSystem> out;
  out.reserve(prof.periods.size());
  for (size_t p = 0; p < prof.periods.size(); ++p) {
    const auto& hp = prof.periods[p];
    const IncidenceSet inc = orient_by_flow(inc0, hp.link_flow);
    Discretization disc = make_discretization(net, opt.segments);
    try {
      compute_time_step(net, disc, hp.link_flow, opt.align_s);
      out.push_back(assemble_system(net, inc, disc, hp, reaction, int(p), opt.assembly));
    } catch (const ModelError& e) {
      throw ModelError("hydraulic period " + std::to_string(p) + ": " + e.what());
    }
  }
  return out;
}

// A named observation: the mean of one or more state entries.
struct Probe {
  std::string name;
  std::vector<int> index;
  double read(const Vec& x) const {
    double s = 0.0;
    for (int i : index) s += x[i];
    return s / double(index.size());
  }
};

inline std::vector<Probe> make_probes(const StateIndexMap& map, const std::vector<std::string>& names) {
  std::vector<Probe> out;
  for (const auto& n : names) out.push_back({n, map.resolve(n)});
  return out;
}

struct Trajectory {
  std::vector<std::string> names;
  std::vector<double> time;                 // s, one entry per recorded step
  std::vector<std::vector<double>> values;  // values[k][probe]

  void record(double t, const Vec& x, const std::vector<Probe>& probes) {
    time.push_back(t);
    std::vector<double> row(probes.size());
    for (size_t i = 0; i < probes.size(); ++i) row[i] = probes[i].read(x);
    values.push_back(std::move(row));
  }

  // Sample-and-hold at every whole minute: latest record with time <= minute.
  Trajectory per_minute() const {
    Trajectory out;
    out.names = names;
    if (time.empty()) return out;
    size_t k = 0;
    const double end = time.back();
    for (double m = 0.0; m <= end + 1e-9; m += 60.0) {
      while (k + 1 < time.size() && time[k + 1] <= m + 1e-9) ++k;
      if (time[k] > m + 1e-9) continue;
      out.time.push_back(m);
      out.values.push_back(values[k]);
    }
    return out;
  }
};

using InputSchedule = std::function<Vec(double t, int period)>;

// Open-loop run over the whole schedule from x0; records every step.
inline Trajectory simulate(const std::vector<StateSpaceSystem>& systems, double period_s,
                           const Vec& x0, const InputSchedule& u,
                           const std::vector<std::string>& record) {
  if (systems.empty()) throw ModelError("schedule gap: no systems to simulate");
  const auto probes = make_probes(systems.front().map, record);
  Trajectory tr;
  tr.names = record;
  Vec x = x0;
  double t = 0.0;
  tr.record(t, x, probes);
  for (size_t p = 0; p < systems.size(); ++p) {
    const auto& sys = systems[p];
    const double n = period_s / sys.dt;
    const long steps = std::lround(n);
    if (std::abs(n - double(steps)) > 1e-9 * n)
      throw ModelError("period " + std::to_string(p) + ": step does not tile the hydraulic period");
    for (long k = 0; k < steps; ++k) {
      x = step(sys, x, u(t, int(p)));
      t = double(p) * period_s + double(k + 1) * sys.dt;
      tr.record(t, x, probes);
    }
  }
  return tr;
}

}  // namespace wqc
