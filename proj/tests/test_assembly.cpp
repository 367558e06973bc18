#include <gtest/gtest.h>

#include <random>

#include "support/fixtures.hpp"
#include "support/random_network.hpp"
#include "wqc/quality/assembly.hpp"
#include "wqc/quality/simulate.hpp"

using namespace wqc;
using wqc::testing::assemble_period;

namespace {

Eigen::RowVectorXd dense_row(const SparseD& m, int r) { return Eigen::MatrixXd(m).row(r); }

std::vector<int> random_segments(const WaterNetwork& net, std::mt19937_64& rng, int max_seg = 6) {
  std::vector<int> s(net.pipes.size());
  for (auto& v : s) v = int(rng() % max_seg) + 1;
  return s;
}

// Junction, tank and pipe-free layouts are skipped by callers that need pipes.
bool has_pipes(const WaterNetwork& net) { return !net.pipes.empty(); }

}  // namespace

TEST(Assembly, ThreeNodeMiddleSegmentRow) {
  const auto net = parse_network(wqc::testing::kThreeNode);
  const auto prof = wqc::testing::three_node_profile(net, 0.03, 0.01, 0.0);
  const auto sys = assemble_period(net, prof.periods[0], {3});
  const auto c = lw_coefficients(sys.cfl[0]);
  const double kp = pipe_reaction_constant(-0.55, -0.02, 1.0, 0.2032);
  const int s1 = sys.map.segment(0, 0), s2 = sys.map.segment(0, 1), s3 = sys.map.segment(0, 2);
  const auto row = dense_row(sys.A, s2);
  EXPECT_NEAR(row[s1], c.lower, 1e-15);
  EXPECT_NEAR(row[s2], c.center + units::seconds_to_hours(sys.dt) * kp, 1e-15);
  EXPECT_NEAR(row[s3], c.upper, 1e-15);
  EXPECT_EQ((row.array() != 0.0).count(), 3);
}

TEST(Assembly, BoundarySegmentsCoupleToNodes) {
  const auto net = parse_network(wqc::testing::kThreeNode);
  const auto prof = wqc::testing::three_node_profile(net, 0.03, 0.01, 0.0);
  const auto sys = assemble_period(net, prof.periods[0], {3});
  const auto c = lw_coefficients(sys.cfl[0]);
  const int j2 = net.node_index("J2"), tk3 = net.node_index("TK3");
  EXPECT_NEAR(sys.A.coeff(sys.map.segment(0, 0), j2), c.lower, 1e-15);
  EXPECT_NEAR(sys.A.coeff(sys.map.segment(0, 2), tk3), c.upper, 1e-15);
}

TEST(Assembly, ReversedFlowWalksSegmentsBackwards) {
  const auto net = parse_network(wqc::testing::kThreeNode);
  HydraulicPeriod hp;
  hp.link_flow = {-0.01, 0.01};  // tank drains into J2
  hp.demand = {0.02};
  hp.tank_volume = {500.0};
  hp.booster_flow = {0, 0, 0};
  const auto sys = assemble_period(net, hp, {3});
  const auto c = lw_coefficients(sys.cfl[0]);
  const int tk3 = net.node_index("TK3");
  // The segment next to TK3 is now the inlet.
  EXPECT_NEAR(sys.A.coeff(sys.map.segment(0, 2), tk3), c.lower, 1e-15);
  // J2 mixes the pump (R1) and the pipe outlet (declared first segment).
  const auto j2 = dense_row(sys.A, net.node_index("J2"));
  EXPECT_NEAR(j2[net.node_index("R1")], 0.5, 1e-12);
  EXPECT_GT(j2.sum(), 0.0);
}

TEST(Assembly, JunctionMixingCoefficients) {
  const auto net = parse_network(wqc::testing::kFiveNode);
  HydraulicPeriod hp;
  // q23 = q34 = 1 with a 0.1 booster at J3 and no demand there.
  hp.link_flow = {1.0, 1.0, 1.0, 2.0, 1.0};
  hp.demand = {1.0, 0.0, 2.0};
  hp.tank_volume = {1e6};
  hp.booster_flow = {0.0, 0.1, 0.0, 0.0, 0.0};
  const auto sys = assemble_period(net, hp, {3, 3, 3});
  const int j3 = net.node_index("J3");
  const int outlet = sys.map.segment(0, 2);  // last segment of P23
  const double beta1 = 1.0 / (1.0 + 0.0), beta2 = 0.1 / (1.0 + 0.0);
  const auto row = dense_row(sys.A, j3);
  const Eigen::RowVectorXd expect = beta1 * dense_row(sys.A, outlet);
  for (int k = 0; k < row.size(); ++k) EXPECT_NEAR(row[k], expect[k], 1e-14) << k;
  const auto c = lw_coefficients(sys.cfl[0]);
  EXPECT_NEAR(row[j3], beta1 * c.upper, 1e-14);
  EXPECT_NEAR(sys.B.coeff(j3, j3), beta2, 1e-15);
}

TEST(Assembly, TankDrainSelfCoefficient) {
  const auto net = parse_network(wqc::testing::kFiveNode);
  // TK5 has only the outflow P52 = 0.01 m^3/s; with dt = 200 s the step
  // drains 2 m^3 from 100 m^3.
  const auto prof = wqc::testing::five_node_profile(net, 100.0);
  const auto sys = assemble_period(net, prof.periods[0], {1, 1, 2}, 200.0);
  ASSERT_DOUBLE_EQ(sys.dt, 200.0);
  const int tk = net.node_index("TK5");
  EXPECT_NEAR(sys.tank_volume_next[0], 98.0, 1e-12);
  EXPECT_NEAR(sys.A.coeff(tk, tk), 98.0 / 98.0, 1e-14);
  EXPECT_EQ(dense_row(sys.A, tk).cwiseAbs().sum(), std::abs(sys.A.coeff(tk, tk)));
}

TEST(Assembly, TankReactionScaledByStep) {
  auto net = parse_network(wqc::testing::kFiveNode);
  net.tanks[0].kb = -0.36;
  const auto prof = wqc::testing::five_node_profile(net, 100.0);
  const auto sys = assemble_period(net, prof.periods[0], {1, 1, 2}, 200.0);
  const int tk = net.node_index("TK5");
  EXPECT_NEAR(sys.A.coeff(tk, tk), 1.0 + (200.0 / 3600.0) * -0.36 * 100.0 / 98.0, 1e-14);
}

TEST(Assembly, TankInflowAndBoosterGains) {
  const auto net = parse_network(wqc::testing::kThreeNode);
  const auto prof = wqc::testing::three_node_profile(net, 0.03, 0.01, 0.005, 400.0);
  const auto sys = assemble_period(net, prof.periods[0], {4});
  const int tk = net.node_index("TK3");
  const double q = 0.025, v = 400.0, vn = v + sys.dt * q;
  EXPECT_NEAR(sys.tank_volume_next[0], vn, 1e-12);
  EXPECT_NEAR(sys.A.coeff(tk, sys.map.segment(0, 3)), sys.dt * q / vn, 1e-15);
  const double kh = units::seconds_to_hours(sys.dt) * -0.5;
  EXPECT_NEAR(sys.A.coeff(tk, tk), v / vn + kh * v / vn, 1e-15);
  // Junction booster gain q^B / (q_out + q^D).
  EXPECT_NEAR(sys.B.coeff(net.node_index("J2"), net.node_index("J2")), 0.005 / 0.035, 1e-15);
}

TEST(Assembly, ReservoirRowsAreIdentity) {
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto rc = wqc::testing::random_network(seed);
    if (!has_pipes(rc.net)) continue;
    const auto sys = assemble_period(rc.net, rc.prof.periods[0], random_segments(rc.net, rng));
    for (int r = 0; r < int(rc.net.reservoirs.size()); ++r) {
      const int i = sys.map.node(int(rc.net.junctions.size()) + r);
      const auto row = dense_row(sys.A, i);
      EXPECT_EQ(row[i], 1.0);
      EXPECT_EQ((row.array() != 0.0).count(), 1);
      EXPECT_EQ(dense_row(sys.B, i).cwiseAbs().sum(), 0.0);
    }
  }
}

TEST(Assembly, PumpAndValveRowsEqualUpstreamNodeRows) {
  std::mt19937_64 rng(10);
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto rc = wqc::testing::random_network(seed);
    if (!has_pipes(rc.net)) continue;
    const auto sys = assemble_period(rc.net, rc.prof.periods[0], random_segments(rc.net, rng));
    const auto inc = orient_by_flow(build_incidence(rc.net), rc.prof.periods[0].link_flow);
    for (int l = int(rc.net.pipes.size()); l < rc.net.link_count(); ++l) {
      const int self = sys.map.short_link(l), up = sys.map.node(inc.up[l]);
      EXPECT_TRUE(dense_row(sys.A, self).isApprox(dense_row(sys.A, up), 0.0) ||
                  (dense_row(sys.A, self) - dense_row(sys.A, up)).cwiseAbs().maxCoeff() == 0.0);
      EXPECT_EQ((dense_row(sys.B, self) - dense_row(sys.B, up)).cwiseAbs().maxCoeff(), 0.0);
      ++checked;
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(Assembly, UniformFixedPointOnRandomNetworks) {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 100; seed < 150; ++seed) {
    const auto rc = wqc::testing::random_network(seed);
    if (!has_pipes(rc.net)) continue;
    ASSERT_TRUE(rc.prof.consistent);
    const auto sys = assemble_period(rc.net, rc.prof.periods[0], random_segments(rc.net, rng));
    const double c = 1.7;
    const Vec x = Vec::Constant(sys.states(), c), u = Vec::Constant(sys.inputs(), c);
    const Vec next = step(sys, x, u);
    EXPECT_LE((next - x).cwiseAbs().maxCoeff(), 1e-12 * c) << "seed " << seed;
  }
}

TEST(Assembly, ZeroStateStaysZero) {
  const auto rc = wqc::testing::random_network(3);
  std::mt19937_64 rng(1);
  const auto sys = assemble_period(rc.net, rc.prof.periods[0], random_segments(rc.net, rng));
  const Vec next = step(sys, Vec::Zero(sys.states()), Vec::Zero(sys.inputs()));
  EXPECT_EQ(next.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Assembly, ReservoirSourceReachesFirstSegment) {
  auto net = parse_network(wqc::testing::kThreeNode);
  net.pipes[0].kb = net.pipes[0].kw = 0.0;
  const auto prof = wqc::testing::three_node_profile(net, 0.03, 0.01, 0.0);
  const auto sys = assemble_period(net, prof.periods[0], {3});
  Vec x = Vec::Zero(sys.states());
  x[net.node_index("R1")] = 0.8;
  const Vec u = Vec::Zero(sys.inputs());
  const int m12 = sys.map.resolve("M12")[0], j2 = net.node_index("J2"), s1 = sys.map.segment(0, 0);
  x = step(sys, x, u);
  EXPECT_NEAR(x[m12], 0.8, 1e-15);
  EXPECT_NEAR(x[j2], 0.8, 1e-15);  // q_M = q_out + q^D without a booster
  EXPECT_EQ(x[s1], 0.0);
  x = step(sys, x, u);
  EXPECT_NEAR(x[s1], lw_coefficients(sys.cfl[0]).lower * 0.8, 1e-15);
  EXPECT_NEAR(x[net.node_index("R1")], 0.8, 0.0);
}

TEST(Assembly, PipeRowsHaveAtMostThreeEntries) {
  std::mt19937_64 rng(12);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto rc = wqc::testing::random_network(seed);
    if (!has_pipes(rc.net)) continue;
    const auto sys = assemble_period(rc.net, rc.prof.periods[0], random_segments(rc.net, rng));
    const auto inc = orient_by_flow(build_incidence(rc.net), rc.prof.periods[0].link_flow);
    std::vector<int> indeg(rc.net.node_count(), 0);
    for (int l = 0; l < inc.links(); ++l)
      if (inc.flow[l] > 0.0) ++indeg[inc.down[l]];
    for (int i = 0; i < sys.states(); ++i) {
      const long nnz = (dense_row(sys.A, i).array() != 0.0).count();
      if (i >= rc.net.node_count() && i < rc.net.node_count() + sys.map.segment_count()) EXPECT_LE(nnz, 3);
      const int tank0 = int(rc.net.junctions.size() + rc.net.reservoirs.size());
      if (i >= tank0 && i < rc.net.node_count()) EXPECT_LE(nnz, 1 + indeg[i]);
    }
  }
}

TEST(Assembly, UnitCflTransportIsMonotone) {
  // Chain R1 -> P1 -> J1 -> P2 -> J2 with equal travel time per segment, so
  // every pipe runs at CFL = 1.
  WaterNetwork net;
  net.junctions = {{"J1"}, {"J2"}};
  net.reservoirs = {{"R1", 0.0}};
  net.pipes = {{"P1", "R1", "J1", 100.0, 0.3, 0, 0, 0}, {"P2", "J1", "J2", 50.0, 0.3, 0, 0, 0}};
  HydraulicPeriod hp;
  const double q = 0.1 * pipe_area(net.pipes[0]);  // 0.1 m/s
  hp.link_flow = {q, q};
  hp.demand = {0.0, q};
  hp.booster_flow = {0, 0, 0};
  const auto sys = assemble_period(net, hp, {10, 5});
  ASSERT_NEAR(sys.cfl[0], 1.0, 1e-12);
  ASSERT_NEAR(sys.cfl[1], 1.0, 1e-12);
  std::mt19937_64 rng(2);
  Vec x = Vec::Zero(sys.states());
  for (int i = 3; i < sys.states(); ++i) x[i] = double(rng() % 1000) / 500.0;
  double prev = x.cwiseAbs().maxCoeff();
  for (int k = 0; k < 40; ++k) {
    x = step(sys, x, Vec::Zero(sys.inputs()));
    const double m = x.cwiseAbs().maxCoeff();
    EXPECT_LE(m, prev);
    prev = m;
    EXPECT_GE(x.minCoeff(), 0.0);
  }
  EXPECT_EQ(prev, 0.0);  // everything flushed after 15 steps
}

TEST(Assembly, UniformInteriorDecaysByReactionFactor) {
  WaterNetwork net;
  net.junctions = {{"J1"}};
  net.reservoirs = {{"R1", 0.0}};
  net.pipes = {{"P1", "R1", "J1", 100.0, 0.3, -1.2, 0, 0}};
  HydraulicPeriod hp;
  hp.link_flow = {0.05 * pipe_area(net.pipes[0])};
  hp.demand = {hp.link_flow[0]};
  hp.booster_flow = {0, 0};
  const auto sys = assemble_period(net, hp, {10});
  Vec x = Vec::Constant(sys.states(), 2.0);
  x[net.node_index("R1")] = 0.0;
  const Vec next = step(sys, x, Vec::Zero(sys.inputs()));
  const double factor = 1.0 + units::seconds_to_hours(sys.dt) * -1.2;
  for (int k = 1; k < 9; ++k) EXPECT_NEAR(next[sys.map.segment(0, k)], 2.0 * factor, 1e-14);
  EXPECT_LT(next.segment(2, 10).maxCoeff(), 2.0);
}

TEST(Assembly, TanksAndReservoirsStayNonnegative) {
  std::mt19937_64 rng(13);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    wqc::testing::RandomOptions opt;
    opt.reaction = true;
    const auto rc = wqc::testing::random_network(seed, opt);
    if (!has_pipes(rc.net)) continue;
    const auto sys = assemble_period(rc.net, rc.prof.periods[0], random_segments(rc.net, rng));
    Vec x(sys.states());
    for (auto& v : x) v = double(rng() % 1000) / 250.0;
    Vec u(sys.inputs());
    for (auto& v : u) v = double(rng() % 1000) / 250.0;
    const Vec next = step(sys, x, u);
    const int j = int(rc.net.junctions.size());
    for (int i = j; i < rc.net.node_count(); ++i) EXPECT_GE(next[i], 0.0) << "seed " << seed;
  }
}

TEST(Assembly, LiteralReactionFoldOmitsStepLength) {
  const auto net = parse_network(wqc::testing::kThreeNode);
  const auto prof = wqc::testing::three_node_profile(net, 0.03, 0.01, 0.0);
  AssemblyOptions lit;
  lit.paper_literal_reaction = true;
  const auto a = assemble_period(net, prof.periods[0], {3});
  const auto b = assemble_period(net, prof.periods[0], {3}, 3600.0, lit);
  const int s = a.map.segment(0, 1);
  const double kp = pipe_reaction_constant(-0.55, -0.02, 1.0, 0.2032);
  EXPECT_NEAR(b.A.coeff(s, s) - a.A.coeff(s, s), kp - units::seconds_to_hours(a.dt) * kp, 1e-15);
}

TEST(Assembly, ErrorPaths) {
  const auto net = parse_network(wqc::testing::kThreeNode);
  HydraulicPeriod hp;
  hp.link_flow = {0.0, 0.01};  // J2 receives water but nothing leaves
  hp.demand = {0.0};
  hp.tank_volume = {100.0};
  hp.booster_flow = {0, 0, 0};
  const auto inc = orient_by_flow(build_incidence(net), {0.01, 0.01});
  Discretization d = uniform_discretization(net, 3);
  compute_time_step(net, d, {0.01, 0.01}, 3600.0);
  const auto zero_out = orient_by_flow(build_incidence(net), hp.link_flow);
  try {
    assemble_system(net, zero_out, d, hp, build_reaction(net));
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("J2"), std::string::npos);
  }
  EXPECT_THROW(assemble_system(net, build_incidence(net), d, hp, build_reaction(net)), ModelError);
  // A draining tank that empties within one step.
  HydraulicPeriod drain;
  drain.link_flow = {-10.0, 0.01};
  drain.demand = {10.01};
  drain.tank_volume = {1e-3};
  drain.booster_flow = {0, 0, 0};
  const auto inc2 = orient_by_flow(build_incidence(net), drain.link_flow);
  Discretization d2 = uniform_discretization(net, 3);
  compute_time_step(net, d2, drain.link_flow, 3600.0);
  EXPECT_THROW(assemble_system(net, inc2, d2, drain, build_reaction(net)), ModelError);
  EXPECT_THROW(step(assemble_period(net, wqc::testing::three_node_profile(net, 0.03, 0.01, 0).periods[0], {3}),
                    Vec::Zero(2), Vec::Zero(3)),
               ModelError);
}

TEST(Assembly, PumpCycleDetected) {
  const auto net = parse_network("[JUNCTIONS]\nJ1\nJ2\n[RESERVOIRS]\nR1\n[PIPES]\nP1 R1 J1 10 0.3 0 0 0\n"
                                 "[PUMPS]\nM1 J1 J2\nM2 J2 J1\n");
  HydraulicPeriod hp;
  hp.link_flow = {0.01, 0.02, 0.02};
  hp.demand = {0.005, 0.005};
  hp.booster_flow = {0, 0, 0};
  EXPECT_THROW(assemble_period(net, hp, {2}), ModelError);
}

TEST(Assembly, DependenceOrderGroupsFiveNodeComponents) {
  const auto net = parse_network(wqc::testing::kFiveNode);
  const auto prof = wqc::testing::five_node_profile(net);
  const auto d = dependence_order(net, orient_by_flow(build_incidence(net), prof.periods[0].link_flow));
  EXPECT_EQ(d.pipes, (std::vector<std::string>{"P23", "P24", "P52"}));
  EXPECT_EQ(d.short_links, (std::vector<std::string>{"M12", "V34"}));
  EXPECT_EQ(d.downstream_nodes, (std::vector<std::string>{"J2", "J4"}));
  EXPECT_EQ(d.upstream_nodes, (std::vector<std::string>{"J3", "R1", "TK5"}));
}
