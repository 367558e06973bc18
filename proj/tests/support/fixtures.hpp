#pragma once

#include <string>
#include <vector>

#include "wqc/network/hydraulics.hpp"
#include "wqc/network/network.hpp"
#include "wqc/quality/assembly.hpp"
#include "wqc/quality/discretization.hpp"

namespace wqc::testing {

inline std::string data_path(const std::string& name) { return std::string(WQC_DATA_DIR) + "/" + name; }

// R1 -> M12 -> J2 -> P23 -> TK3.
inline const char* kThreeNode = R"(
[JUNCTIONS]
J2
[RESERVOIRS]
R1 0.8
[TANKS]
TK3 -0.5
[PIPES]
P23 J2 TK3 304.8 0.2032 -0.55 -0.02 1.0
[PUMPS]
M12 R1 J2
[END]
)";

// Five-node layout: R1 -M12-> J2, TK5 -P52-> J2, J2 -P23-> J3,
// J2 -P24-> J4, J3 -V34-> J4.
inline const char* kFiveNode = R"(
[JUNCTIONS]
J2
J3
J4
[RESERVOIRS]
R1 1.0
[TANKS]
TK5
[PIPES]
P23 J2 J3 100 0.3 0 0 0
P24 J2 J4 120 0.3 0 0 0
P52 TK5 J2 80 0.3 0 0 0
[PUMPS]
M12 R1 J2
[VALVES]
V34 J3 J4
[END]
)";

// Balanced five-node period (m^3/s): M12 = 0.03, P52 = 0.01 feed J2 (demand
// 0.01) which sends 0.02 down P23 and 0.01 down P24; V34 carries 0.02; J4
// consumes 0.03.
inline HydraulicProfile five_node_profile(const WaterNetwork& net, double tank_volume = 50.0) {
  HydraulicProfile prof;
  HydraulicPeriod hp;
  hp.link_flow = {0.02, 0.01, 0.01, 0.03, 0.02};
  hp.demand = {0.01, 0.0, 0.03};
  hp.tank_volume = {tank_volume};
  hp.booster_flow.assign(net.node_count(), 0.0);
  prof.periods.push_back(hp);
  check_period(net, prof.periods.back(), prof, 0);
  return prof;
}

// Three-node period with pump flow q_m, demand q_d and booster flow q_b (m^3/s).
inline HydraulicProfile three_node_profile(const WaterNetwork& net, double q_m, double q_d, double q_b,
                                           double tank_volume = 500.0) {
  HydraulicProfile prof;
  HydraulicPeriod hp;
  hp.link_flow = {q_m + q_b - q_d, q_m};
  hp.demand = {q_d};
  hp.tank_volume = {tank_volume};
  hp.booster_flow.assign(net.node_count(), 0.0);
  hp.booster_flow[0] = q_b;
  prof.periods.push_back(hp);
  check_period(net, prof.periods.back(), prof, 0);
  return prof;
}

inline StateSpaceSystem assemble_period(const WaterNetwork& net, const HydraulicPeriod& hp,
                                        const std::vector<int>& segments, double align_s = 3600.0,
                                        const AssemblyOptions& opt = {}) {
  const IncidenceSet inc = orient_by_flow(build_incidence(net), hp.link_flow);
  Discretization d = make_discretization(net, segments);
  compute_time_step(net, d, hp.link_flow, align_s);
  return assemble_system(net, inc, d, hp, build_reaction(net), 0, opt);
}

}  // namespace wqc::testing
