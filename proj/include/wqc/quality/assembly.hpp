#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/network/hydraulics.hpp"
#include "wqc/network/incidence.hpp"
#include "wqc/quality/discretization.hpp"
#include "wqc/units.hpp"

namespace wqc {

using SparseD = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

struct ReactionModel {
  std::vector<double> pipe;  // k^P per pipe, 1/h
  std::vector<double> tank;  // k^TK per tank, 1/h
};

inline ReactionModel build_reaction(const WaterNetwork& net) {
  ReactionModel r;
  for (const auto& p : net.pipes) r.pipe.push_back(pipe_reaction_constant(p.kb, p.kw, p.kf, p.diameter));
  for (const auto& t : net.tanks) r.tank.push_back(t.kb);
  return r;
}

struct AssemblyOptions {
  // Add k^P to the pipe diagonal without the step-length factor.
  bool paper_literal_reaction = false;
};

// x(t+dt) = A x(t) + B u(t) for one hydraulic period; B has one column per node.
struct StateSpaceSystem {
  SparseD A, B;
  double dt = 0.0;
  int period = 0;
  StateIndexMap map;
  std::vector<double> cfl;          // per pipe
  std::vector<double> tank_volume;  // V(t) per tank, m^3
  std::vector<double> tank_volume_next;
  std::vector<double> booster_flow; // q^B per node, m^3/s

  int states() const { return int(A.rows()); }
  int inputs() const { return int(B.cols()); }
};

namespace detail {

// Row of the one-step map expressed over x(t) and u(t).
struct LinearForm {
  std::map<int, double> x, u;
  void add(const LinearForm& o, double s) {
    for (auto [k, v] : o.x) x[k] += s * v;
    for (auto [k, v] : o.u) u[k] += s * v;
  }
};

}  // namespace detail

// Components are resolved in dependence order: pipes and tanks only read x(t);
// reservoirs are constant; junctions read their inflow links at t+dt, which
// for pumps and valves means the upstream node at t+dt.
inline StateSpaceSystem assemble_system(const WaterNetwork& net, const IncidenceSet& inc,
                                        const Discretization& disc, const HydraulicPeriod& hp,
                                        const ReactionModel& reaction, int period = 0,
                                        const AssemblyOptions& opt = {}) {
  using detail::LinearForm;
  if (!inc.oriented) throw ModelError("assembly needs a flow-oriented incidence");
  if (!(disc.dt > 0.0) || disc.cfl.size() != net.pipes.size())
    throw ModelError("discretization has no time step; call compute_time_step first");

  const ComponentCounts cnt = net.counts();
  const int nj = cnt.junctions, nr = cnt.reservoirs, ntk = cnt.tanks, nn = cnt.nodes();
  const int np = cnt.pipes;
  StateSpaceSystem sys;
  sys.dt = disc.dt;
  sys.period = period;
  sys.map = StateIndexMap(net, disc.segments);
  sys.cfl = disc.cfl;
  sys.booster_flow = hp.booster_flow;
  const StateIndexMap& map = sys.map;
  const int nx = map.size();
  const double dt = disc.dt;
  const double dt_h = units::seconds_to_hours(dt);

  std::vector<LinearForm> rows(nx);
  std::vector<int> state(nx, 0);  // 0 pending, 1 in progress, 2 done

  // Pipe segments, walked in flow direction.
  for (int p = 0; p < np; ++p) {
    const int s = disc.segments[p];
    const LwCoefficients c = lw_coefficients(disc.cfl[p]);
    const double k = opt.paper_literal_reaction ? reaction.pipe[p] : dt_h * reaction.pipe[p];
    auto seg_at = [&](int pos) { return map.segment(p, inc.flipped[p] ? s - 1 - pos : pos); };
    for (int pos = 0; pos < s; ++pos) {
      const int self = seg_at(pos);
      const int prev = pos == 0 ? map.node(inc.up[p]) : seg_at(pos - 1);
      const int next = pos == s - 1 ? map.node(inc.down[p]) : seg_at(pos + 1);
      LinearForm& f = rows[self];
      if (c.lower != 0.0) f.x[prev] += c.lower;
      f.x[self] += c.center + k;
      if (c.upper != 0.0) f.x[next] += c.upper;
      state[self] = 2;
    }
  }

  // Concentration a link delivers to its downstream end at time t.
  auto outlet_now = [&](int l) {
    if (l < np) {
      const int s = disc.segments[l];
      return map.segment(l, inc.flipped[l] ? 0 : s - 1);
    }
    return map.short_link(l);
  };

  for (int r = 0; r < nr; ++r) {
    rows[map.node(nj + r)].x[map.node(nj + r)] = 1.0;
    state[map.node(nj + r)] = 2;
  }

  std::vector<std::vector<int>> in_links(nn), out_links(nn);
  for (int l = 0; l < inc.links(); ++l) {
    if (inc.flow[l] <= 0.0) continue;
    out_links[inc.up[l]].push_back(l);
    in_links[inc.down[l]].push_back(l);
  }

  sys.tank_volume = hp.tank_volume;
  sys.tank_volume_next.resize(ntk);
  for (int t = 0; t < ntk; ++t) {
    const int n = nj + nr + t;
    double q_in = 0.0, q_out = 0.0;
    for (int l : in_links[n]) q_in += inc.flow[l];
    for (int l : out_links[n]) q_out += inc.flow[l];
    const double v = hp.tank_volume[t];
    const double qb = hp.booster_flow[n];
    const double v_next = v + dt * (q_in + qb - q_out);
    if (!(v - dt * q_out > 0.0) || !(v_next > 0.0))
      throw ModelError("tank '" + net.tanks[t].id + "' empties within one water-quality step");
    sys.tank_volume_next[t] = v_next;
    LinearForm& f = rows[map.node(n)];
    f.x[map.node(n)] += (v - dt * q_out) / v_next + dt_h * reaction.tank[t] * v / v_next;
    for (int l : in_links[n]) f.x[outlet_now(l)] += dt * inc.flow[l] / v_next;
    if (qb > 0.0) f.u[n] += dt * qb / v_next;
    state[map.node(n)] = 2;
  }

  // Junctions (and through them pumps/valves) by memoised recursion.
  std::function<const LinearForm&(int)> node_row;
  std::function<const LinearForm&(int)> short_row = [&](int l) -> const LinearForm& {
    const int idx = map.short_link(l);
    if (state[idx] == 2) return rows[idx];
    if (state[idx] == 1)
      throw ModelError("cycle of pumps/valves through '" + net.link_id(l) + "'");
    state[idx] = 1;
    rows[idx] = node_row(inc.up[l]);
    state[idx] = 2;
    return rows[idx];
  };
  node_row = [&](int n) -> const LinearForm& {
    const int idx = map.node(n);
    if (state[idx] == 2) return rows[idx];
    if (state[idx] == 1)
      throw ModelError("cycle of pumps/valves through node '" + net.node_id(n) + "'");
    state[idx] = 1;
    double den = hp.demand[n];
    for (int l : out_links[n]) den += inc.flow[l];
    if (!(den > 0.0))
      throw ModelError("junction '" + net.node_id(n) + "' has no outflow or demand");
    LinearForm f;
    for (int l : in_links[n]) {
      const double w = inc.flow[l] / den;
      if (l < np)
        f.add(rows[outlet_now(l)], w);
      else
        f.add(short_row(l), w);
    }
    if (hp.booster_flow[n] > 0.0) f.u[n] += hp.booster_flow[n] / den;
    rows[idx] = std::move(f);
    state[idx] = 2;
    return rows[idx];
  };
  for (int j = 0; j < nj; ++j) node_row(j);
  for (int l = np; l < inc.links(); ++l) short_row(l);

  std::vector<Eigen::Triplet<double>> ta, tb;
  for (int i = 0; i < nx; ++i) {
    for (auto [k, v] : rows[i].x)
      if (v != 0.0) ta.emplace_back(i, k, v);
    for (auto [k, v] : rows[i].u)
      if (v != 0.0) tb.emplace_back(i, k, v);
  }
  sys.A.resize(nx, nx);
  sys.A.setFromTriplets(ta.begin(), ta.end());
  sys.B.resize(nx, nn);
  sys.B.setFromTriplets(tb.begin(), tb.end());
  return sys;
}

inline Vec step(const StateSpaceSystem& sys, const Vec& x, const Vec& u) {
  if (x.size() != sys.A.cols() || u.size() != sys.B.cols())
    throw ModelError("step: state has " + std::to_string(x.size()) + " entries (expected " +
                     std::to_string(sys.A.cols()) + "), input has " + std::to_string(u.size()) +
                     " (expected " + std::to_string(sys.B.cols()) + ")");
  Vec out = sys.A * x;
  out.noalias() += sys.B * u;
  return out;
}

// Every entry at `value`, reservoirs at their source concentration.
inline Vec initial_state(const WaterNetwork& net, const StateIndexMap& map, double value = 0.0) {
  Vec x = Vec::Constant(map.size(), value);
  for (size_t r = 0; r < net.reservoirs.size(); ++r)
    x[map.node(int(net.junctions.size() + r))] = net.reservoirs[r].source;
  return x;
}

// Groups for the dependence forest: pipes, nodes not fed by a pump or valve,
// pumps and valves, then the nodes they feed.
struct DependenceOrder {
  std::vector<std::string> pipes, upstream_nodes, short_links, downstream_nodes;
};

inline DependenceOrder dependence_order(const WaterNetwork& net, const IncidenceSet& inc) {
  DependenceOrder d;
  const int np = inc.counts.pipes;
  std::vector<bool> fed(net.node_count(), false);
  for (int l = np; l < inc.links(); ++l) fed[inc.down[l]] = true;
  for (int p = 0; p < np; ++p) d.pipes.push_back(net.pipes[p].id);
  for (int n = 0; n < net.node_count(); ++n)
    (fed[n] ? d.downstream_nodes : d.upstream_nodes).push_back(net.node_id(n));
  for (int l = np; l < inc.links(); ++l) d.short_links.push_back(net.link_id(l));
  return d;
}

}  // namespace wqc
