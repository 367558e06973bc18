#include <gtest/gtest.h>

#include <random>
#include <set>

#include "support/fixtures.hpp"
#include "support/random_network.hpp"
#include "wqc/quality/discretization.hpp"

using namespace wqc;

namespace {

// One pipe R1 -> J1 with the given length, diameter and flow (m^3/s).
WaterNetwork single_pipe(double length, double diameter) {
  WaterNetwork net;
  net.junctions.push_back({"J1"});
  net.reservoirs.push_back({"R1", 1.0});
  net.pipes.push_back({"P1", "R1", "J1", length, diameter, 0, 0, 0});
  return net;
}

double flow_for_speed(const Pipe& p, double v) { return v * pipe_area(p); }

}  // namespace

TEST(LwCoefficients, ReferenceValues) {
  auto c = lw_coefficients(1.0);
  EXPECT_EQ(c.lower, 1.0);
  EXPECT_EQ(c.center, 0.0);
  EXPECT_EQ(c.upper, 0.0);
  c = lw_coefficients(0.0);
  EXPECT_EQ(c.lower, 0.0);
  EXPECT_EQ(c.center, 1.0);
  EXPECT_EQ(c.upper, 0.0);
  c = lw_coefficients(0.5);
  EXPECT_DOUBLE_EQ(c.lower, 0.375);
  EXPECT_DOUBLE_EQ(c.center, 0.75);
  EXPECT_DOUBLE_EQ(c.upper, -0.125);
}

TEST(LwCoefficients, SumToOneAcrossRange) {
  for (int i = 0; i <= 1000; ++i) {
    const double v = i / 1000.0;
    const auto c = lw_coefficients(v);
    EXPECT_NEAR(c.lower + c.center + c.upper, 1.0, 1e-15) << v;
  }
}

TEST(LwCoefficients, OutsideStabilityRangeRejected) {
  EXPECT_THROW(lw_coefficients(1.01), ModelError);
  EXPECT_THROW(lw_coefficients(-0.01), ModelError);
  EXPECT_NO_THROW(lw_coefficients(1.0 + 0.5 * kCflSlack));
}

TEST(PipeReaction, ReferenceValues) {
  EXPECT_DOUBLE_EQ(pipe_reaction_constant(-0.7, 0.0, 0.0, 0.3), -0.7);
  EXPECT_DOUBLE_EQ(pipe_reaction_constant(-0.7, 0.0, 2.0, 0.3), -0.7);
  EXPECT_NEAR(pipe_reaction_constant(-0.5, -0.1, 0.2, 0.5), -0.9, 1e-12);
  EXPECT_NEAR(pipe_reaction_constant(-0.5, -0.1, 1e9, 1.0), -0.6, 1e-9);
}

TEST(PipeReaction, ZeroDenominatorRejected) {
  EXPECT_THROW(pipe_reaction_constant(-0.5, -0.2, 0.2, 0.5), ModelError);
}

TEST(TimeStep, DirectFormula) {
  auto net = single_pipe(100.0, 0.3);
  Discretization d = uniform_discretization(net, 10);  // dx = 10 m
  EXPECT_DOUBLE_EQ(compute_time_step(net, d, {flow_for_speed(net.pipes[0], 2.0)}, 3600.0), 5.0);
  EXPECT_NEAR(d.cfl[0], 1.0, 1e-12);
}

TEST(TimeStep, MinimumOverPipes) {
  WaterNetwork net;
  net.junctions = {{"J1"}, {"J2"}};
  net.reservoirs = {{"R1", 1.0}};
  net.pipes = {{"P1", "R1", "J1", 50.0, 0.3, 0, 0, 0}, {"P2", "J1", "J2", 20.0, 0.3, 0, 0, 0}};
  Discretization d = uniform_discretization(net, 10);  // dx = 5, 2 m
  const double q = flow_for_speed(net.pipes[0], 1.0);
  EXPECT_DOUBLE_EQ(compute_time_step(net, d, {q, q}, 3600.0), 2.0);
  EXPECT_NEAR(d.cfl[0], 0.4, 1e-12);
  EXPECT_NEAR(d.cfl[1], 1.0, 1e-12);
}

TEST(TimeStep, RoundsDownToDivisorOfPeriod) {
  auto net = single_pipe(70.0, 0.3);
  Discretization d = uniform_discretization(net, 10);  // dx = 7 m, v = 1 m/s -> 7 s
  EXPECT_DOUBLE_EQ(compute_time_step(net, d, {flow_for_speed(net.pipes[0], 1.0)}, 3600.0), 6.0);
}

TEST(TimeStep, MatchesExhaustiveDivisorSearch) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(1.0, 400.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double dt_max = u(rng);
    for (double align : {3600.0, 300.0, 60.0, 7200.0}) {
      double best = 0.0;
      for (int k = 1; k <= int(align); ++k)
        if (int(align) % k == 0 && k <= dt_max) best = k;
      EXPECT_EQ(aligned_step(dt_max, align), std::min(best, align)) << dt_max << " " << align;
    }
  }
}

TEST(TimeStep, SubSecondStepsStillTileThePeriod) {
  const double dt = aligned_step(0.3, 60.0);
  EXPECT_LE(dt, 0.3);
  EXPECT_NEAR(60.0 / dt, std::round(60.0 / dt), 1e-9);
}

TEST(TimeStep, StagnantNetworkRejected) {
  auto net = single_pipe(70.0, 0.3);
  Discretization d = uniform_discretization(net, 10);
  try {
    compute_time_step(net, d, {0.0}, 3600.0);
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("stagnant network"), std::string::npos);
  }
}

TEST(TimeStep, ZeroFlowPipeSkippedWithZeroCfl) {
  WaterNetwork net;
  net.junctions = {{"J1"}, {"J2"}};
  net.reservoirs = {{"R1", 1.0}};
  net.pipes = {{"P1", "R1", "J1", 50.0, 0.3, 0, 0, 0}, {"P2", "J1", "J2", 20.0, 0.3, 0, 0, 0}};
  Discretization d = uniform_discretization(net, 10);
  compute_time_step(net, d, {flow_for_speed(net.pipes[0], 1.0), 0.0}, 3600.0);
  EXPECT_DOUBLE_EQ(d.dt, 5.0);
  EXPECT_EQ(d.cfl[1], 0.0);
}

TEST(TimeStep, CflWithinUnitIntervalOnRandomNetworks) {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto rc = wqc::testing::random_network(seed);
    std::vector<int> seg(rc.net.pipes.size());
    for (auto& s : seg) s = int(rng() % 20) + 1;
    Discretization d = make_discretization(rc.net, seg);
    if (rc.net.pipes.empty()) continue;
    compute_time_step(rc.net, d, rc.prof.periods[0].link_flow, 3600.0);
    for (double c : d.cfl) {
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 1.0);
    }
    EXPECT_NEAR(3600.0 / d.dt, std::round(3600.0 / d.dt), 1e-9);
  }
}

TEST(Discretization, SegmentCountsValidated) {
  auto net = single_pipe(70.0, 0.3);
  EXPECT_THROW(make_discretization(net, {0}), ConfigError);
  EXPECT_THROW(make_discretization(net, {1, 2}), ConfigError);
  const auto d = make_discretization(net, {7});
  EXPECT_DOUBLE_EQ(d.dx[0], 10.0);
  EXPECT_EQ(d.total_segments(), 7);
}

TEST(StateIndexMap, LayoutAndBijection) {
  const auto net = parse_network(wqc::testing::kFiveNode);
  const StateIndexMap map(net, {3, 2, 4});
  EXPECT_EQ(map.size(), 5 + 9 + 1 + 1);
  EXPECT_EQ(map.resolve("J2"), std::vector<int>{0});
  EXPECT_EQ(map.resolve("R1"), std::vector<int>{3});
  EXPECT_EQ(map.resolve("TK5"), std::vector<int>{4});
  EXPECT_EQ(map.resolve("P23"), (std::vector<int>{5, 6, 7}));
  EXPECT_EQ(map.resolve("P24:2"), std::vector<int>{9});
  EXPECT_EQ(map.resolve("M12"), std::vector<int>{14});
  EXPECT_EQ(map.resolve("V34"), std::vector<int>{15});
  std::set<std::string> names;
  for (int i = 0; i < map.size(); ++i) {
    const std::string n = map.name(i);
    EXPECT_TRUE(names.insert(n).second) << n;
    EXPECT_EQ(map.resolve(n), std::vector<int>{i}) << n;
  }
}

TEST(StateIndexMap, BadReferencesRejected) {
  const auto net = parse_network(wqc::testing::kFiveNode);
  const StateIndexMap map(net, {3, 2, 4});
  EXPECT_THROW(map.resolve("J9"), ConfigError);
  EXPECT_THROW(map.resolve("P23:0"), ConfigError);
  EXPECT_THROW(map.resolve("P23:4"), ConfigError);
  EXPECT_THROW(map.resolve("P23:x"), ConfigError);
  EXPECT_THROW(map.resolve("J2:1"), ConfigError);
  EXPECT_THROW(map.resolve("M12:1"), ConfigError);
}
