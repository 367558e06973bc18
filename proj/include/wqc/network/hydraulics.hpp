#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/network/network.hpp"
#include "wqc/units.hpp"

namespace wqc {

// One hydraulic period, stored in SI. Link flows are signed relative to the
// declared link direction. Booster flow is indexed by node.
struct HydraulicPeriod {
  std::vector<double> link_flow;    // m^3/s
  std::vector<double> demand;       // m^3/s, per junction
  std::vector<double> tank_volume;  // m^3 at period start, per tank
  std::vector<double> booster_flow; // m^3/s, per node
  std::vector<double> balance_residual;  // per junction, m^3/s
};

struct HydraulicProfile {
  double period_s = 3600.0;
  std::vector<HydraulicPeriod> periods;
  bool consistent = true;
  std::vector<std::string> warnings;

  double duration_s() const { return period_s * double(periods.size()); }
};

inline constexpr double kBalanceTolerance = 1e-9;

// Junction balance residual q^B + inflow - outflow - demand, and whether it is
// within kBalanceTolerance relative to the largest flow touching the junction.
inline void compute_balance(const WaterNetwork& net, HydraulicPeriod& hp, bool& consistent,
                            std::vector<std::string>* warnings, int period) {
  const int nj = int(net.junctions.size());
  std::vector<int> up(net.link_count()), down(net.link_count());
  for (int l = 0; l < net.link_count(); ++l) {
    up[l] = net.node_index(net.link_from(l));
    down[l] = net.node_index(net.link_to(l));
  }
  hp.balance_residual.assign(nj, 0.0);
  std::vector<double> scale(nj, 0.0);
  for (int j = 0; j < nj; ++j) {
    hp.balance_residual[j] = hp.booster_flow[j] - hp.demand[j];
    scale[j] = std::max(std::abs(hp.booster_flow[j]), std::abs(hp.demand[j]));
  }
  for (int l = 0; l < net.link_count(); ++l) {
    const double q = hp.link_flow[l];
    if (up[l] < nj) {
      hp.balance_residual[up[l]] -= q;
      scale[up[l]] = std::max(scale[up[l]], std::abs(q));
    }
    if (down[l] < nj) {
      hp.balance_residual[down[l]] += q;
      scale[down[l]] = std::max(scale[down[l]], std::abs(q));
    }
  }
  for (int j = 0; j < nj; ++j) {
    if (std::abs(hp.balance_residual[j]) > kBalanceTolerance * std::max(scale[j], 1e-300)) {
      if (consistent && warnings)
        warnings->push_back("period " + std::to_string(period) + ": junction '" +
                            net.junctions[j].id + "' violates flow balance by " +
                            detail::fmt_double(units::cms_to_gpm(hp.balance_residual[j])) +
                            " GPM");
      consistent = false;
    }
  }
}

// Validates one period already in SI and fills its balance residuals.
inline void check_period(const WaterNetwork& net, HydraulicPeriod& hp, HydraulicProfile& prof,
                         int period) {
  if (int(hp.link_flow.size()) != net.link_count() ||
      int(hp.demand.size()) != int(net.junctions.size()) ||
      int(hp.tank_volume.size()) != int(net.tanks.size()) ||
      int(hp.booster_flow.size()) != net.node_count())
    throw ConfigError("period " + std::to_string(period) + ": vector sizes do not match network");
  for (size_t j = 0; j < hp.demand.size(); ++j)
    if (hp.demand[j] < 0.0)
      throw ConfigError("period " + std::to_string(period) + ": negative demand at '" +
                        net.junctions[j].id + "'");
  for (size_t t = 0; t < hp.tank_volume.size(); ++t)
    if (!(hp.tank_volume[t] > 0.0))
      throw ConfigError("period " + std::to_string(period) + ": tank '" + net.tanks[t].id +
                        "': empty tank unsupported");
  for (size_t n = 0; n < hp.booster_flow.size(); ++n)
    if (hp.booster_flow[n] < 0.0)
      throw ConfigError("period " + std::to_string(period) + ": negative booster flow at '" +
                        net.node_id(int(n)) + "'");
  compute_balance(net, hp, prof.consistent, &prof.warnings, period);
}

// CSV with header `period,entity,kind,value`; kind is flow (links, GPM),
// demand (junctions, GPM), volume (tanks, ft^3) or booster_flow (nodes, GPM).
// Periods are numbered from 0 and must be contiguous. Every link needs a flow,
// every junction a demand and every tank a volume in every period; booster
// flow defaults to zero.
inline HydraulicProfile load_hydraulics(std::string_view csv, const WaterNetwork& net,
                                        double period_s = 3600.0) {
  if (!(period_s > 0.0)) throw ConfigError("hydraulic period must be positive");
  struct Rec {
    int period;
    std::string entity, kind;
    double value;
    int line;
  };
  std::vector<Rec> recs;
  int line_no = 0;
  size_t pos = 0;
  bool header = false;
  while (pos <= csv.size()) {
    size_t eol = csv.find('\n', pos);
    if (eol == std::string_view::npos) eol = csv.size();
    std::string_view line = csv.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> f;
    size_t a = 0;
    while (true) {
      size_t c = line.find(',', a);
      f.push_back(line.substr(a, c == std::string_view::npos ? std::string_view::npos : c - a));
      if (c == std::string_view::npos) break;
      a = c + 1;
    }
    const std::string where = "hydraulics line " + std::to_string(line_no) + ": ";
    if (!header) {
      if (f.size() != 4 || f[0] != "period" || f[1] != "entity" || f[2] != "kind" ||
          f[3] != "value")
        throw ConfigError(where + "expected header 'period,entity,kind,value'");
      header = true;
      continue;
    }
    if (f.size() != 4) throw ConfigError(where + "expected 4 fields");
    const double p = detail::parse_number(f[0], line_no);
    if (p < 0 || p != std::floor(p)) throw ConfigError(where + "bad period index");
    recs.push_back({int(p), std::string(f[1]), std::string(f[2]),
                    detail::parse_number(f[3], line_no), line_no});
  }
  if (!header) throw ConfigError("hydraulics: missing header");

  int np = 0;
  for (const auto& r : recs) np = std::max(np, r.period + 1);
  if (np == 0) throw ConfigError("hydraulics: no records");

  const double nan = std::nan("");
  HydraulicProfile prof;
  prof.period_s = period_s;
  prof.periods.resize(np);
  for (auto& hp : prof.periods) {
    hp.link_flow.assign(net.link_count(), nan);
    hp.demand.assign(net.junctions.size(), nan);
    hp.tank_volume.assign(net.tanks.size(), nan);
    hp.booster_flow.assign(net.node_count(), 0.0);
  }
  const int nj = int(net.junctions.size()), nr = int(net.reservoirs.size());
  for (const auto& r : recs) {
    const std::string where = "hydraulics line " + std::to_string(r.line) + ": ";
    auto& hp = prof.periods[r.period];
    if (r.kind == "flow") {
      auto l = net.find_link(r.entity);
      if (!l) throw ConfigError(where + "unknown link '" + r.entity + "'");
      hp.link_flow[*l] = units::gpm_to_cms(r.value);
    } else if (r.kind == "demand") {
      auto n = net.find_node(r.entity);
      if (!n || *n >= nj) throw ConfigError(where + "unknown junction '" + r.entity + "'");
      hp.demand[*n] = units::gpm_to_cms(r.value);
    } else if (r.kind == "volume") {
      auto n = net.find_node(r.entity);
      if (!n || *n < nj + nr) throw ConfigError(where + "unknown tank '" + r.entity + "'");
      hp.tank_volume[*n - nj - nr] = units::cubic_feet_to_cubic_meters(r.value);
    } else if (r.kind == "booster_flow") {
      auto n = net.find_node(r.entity);
      if (!n) throw ConfigError(where + "unknown node '" + r.entity + "'");
      hp.booster_flow[*n] = units::gpm_to_cms(r.value);
    } else {
      throw ConfigError(where + "unknown kind '" + r.kind + "'");
    }
  }
  for (int p = 0; p < np; ++p) {
    auto& hp = prof.periods[p];
    auto missing = [&](const std::string& what, const std::string& id) {
      throw ConfigError("hydraulics period " + std::to_string(p) + ": missing " + what + " for '" +
                        id + "'");
    };
    for (int l = 0; l < net.link_count(); ++l)
      if (std::isnan(hp.link_flow[l])) missing("flow", net.link_id(l));
    for (int j = 0; j < nj; ++j)
      if (std::isnan(hp.demand[j])) missing("demand", net.junctions[j].id);
    for (size_t t = 0; t < net.tanks.size(); ++t)
      if (std::isnan(hp.tank_volume[t])) missing("volume", net.tanks[t].id);
    check_period(net, hp, prof, p);
  }
  return prof;
}

}  // namespace wqc
