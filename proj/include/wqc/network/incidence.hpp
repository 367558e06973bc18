#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/network/network.hpp"

namespace wqc {

using SparseI = Eigen::SparseMatrix<int>;

// Node-link connectivity. `up[l]`/`down[l]` follow the flow direction once
// oriented; `flipped[l]` records whether that differs from the declaration.
struct IncidenceSet {
  ComponentCounts counts;
  std::vector<int> up, down;
  std::vector<bool> flipped;
  std::vector<double> flow;  // |q| per link after orientation, empty before
  bool oriented = false;

  int nodes() const { return counts.nodes(); }
  int links() const { return counts.links(); }

  // E^G: +1 at the upstream node, -1 at the downstream node.
  SparseI matrix() const {
    std::vector<Eigen::Triplet<int>> t;
    t.reserve(2 * up.size());
    for (int l = 0; l < links(); ++l) {
      t.emplace_back(up[l], l, 1);
      t.emplace_back(down[l], l, -1);
    }
    SparseI e(nodes(), links());
    e.setFromTriplets(t.begin(), t.end());
    return e;
  }

  std::pair<int, int> node_range(NodeKind k) const {
    const int j = counts.junctions, r = counts.reservoirs, tk = counts.tanks;
    switch (k) {
      case NodeKind::Junction: return {0, j};
      case NodeKind::Reservoir: return {j, r};
      case NodeKind::Tank: return {j + r, tk};
    }
    return {0, 0};
  }
  std::pair<int, int> link_range(LinkKind k) const {
    const int p = counts.pipes, m = counts.pumps, v = counts.valves;
    switch (k) {
      case LinkKind::Pipe: return {0, p};
      case LinkKind::Pump: return {p, m};
      case LinkKind::Valve: return {p + m, v};
    }
    return {0, 0};
  }

  // Named block such as E^P_J (rows of one node kind, columns of one link kind).
  SparseI block(NodeKind nk, LinkKind lk) const {
    auto [r0, nr] = node_range(nk);
    auto [c0, nc] = link_range(lk);
    SparseI e = matrix();
    return SparseI(e.block(r0, c0, nr, nc));
  }
  // E^L_kind: rows of one node kind, all link columns.
  SparseI node_block(NodeKind nk) const {
    auto [r0, nr] = node_range(nk);
    SparseI e = matrix();
    return SparseI(e.middleRows(r0, nr));
  }
};

inline IncidenceSet build_incidence(const WaterNetwork& net) {
  net.validate();
  IncidenceSet inc;
  inc.counts = net.counts();
  const int nl = net.link_count();
  inc.up.resize(nl);
  inc.down.resize(nl);
  inc.flipped.assign(nl, false);
  for (int l = 0; l < nl; ++l) {
    inc.up[l] = net.node_index(net.link_from(l));
    inc.down[l] = net.node_index(net.link_to(l));
  }
  return inc;
}

// Orientation is always relative to the declared direction, so orienting an
// already oriented set with the same flows gives the same result.
inline IncidenceSet orient_by_flow(const IncidenceSet& inc, const std::vector<double>& flows) {
  if (int(flows.size()) != inc.links())
    throw ConfigError("flow vector has " + std::to_string(flows.size()) + " entries, expected " +
                      std::to_string(inc.links()));
  IncidenceSet out = inc;
  out.flow.resize(flows.size());
  for (int l = 0; l < inc.links(); ++l) {
    int du = inc.flipped[l] ? inc.down[l] : inc.up[l];
    int dd = inc.flipped[l] ? inc.up[l] : inc.down[l];
    const bool flip = flows[l] < 0.0;
    out.up[l] = flip ? dd : du;
    out.down[l] = flip ? du : dd;
    out.flipped[l] = flip;
    out.flow[l] = std::abs(flows[l]);
  }
  out.oriented = true;
  return out;
}

struct BoosterLayout {
  std::vector<int> nodes;  // ascending node indices
  SparseI matrix;          // E^B_N, n_N x n_N

  int count() const { return int(nodes.size()); }
  bool has(int node) const { return std::binary_search(nodes.begin(), nodes.end(), node); }
};

inline BoosterLayout build_booster_matrix(const WaterNetwork& net,
                                          const std::vector<std::string>& booster_nodes) {
  BoosterLayout b;
  for (const auto& id : booster_nodes) {
    auto n = net.find_node(id);
    if (!n) throw ConfigError("booster at unknown node '" + id + "'");
    if (std::find(b.nodes.begin(), b.nodes.end(), *n) != b.nodes.end())
      throw ConfigError("node '" + id + "' has more than one booster");
    b.nodes.push_back(*n);
  }
  std::sort(b.nodes.begin(), b.nodes.end());
  std::vector<Eigen::Triplet<int>> t;
  for (int n : b.nodes) t.emplace_back(n, n, 1);
  b.matrix.resize(net.node_count(), net.node_count());
  b.matrix.setFromTriplets(t.begin(), t.end());
  return b;
}

struct SelectionSet {
  SparseI junction_in, junction_out;  // n_J x n_L
  SparseI tank_in, tank_out;          // n_TK x n_L
  SparseI pump_upstream;              // n_M x n_N
  SparseI valve_upstream;             // n_V x n_N
  // Over the stacked pipe-segment vector (n_P x n_S); only filled when
  // segment counts are supplied. "first" is the segment fed by the upstream node.
  SparseI pipe_first, pipe_last;
};

inline SelectionSet selection_matrices(const IncidenceSet& inc,
                                       const std::vector<int>& segments = {}) {
  if (!inc.oriented) throw ModelError("selection matrices need a flow-oriented incidence");
  SelectionSet s;
  auto positive_part = [](const SparseI& m, int sign) {
    std::vector<Eigen::Triplet<int>> t;
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseI::InnerIterator it(m, k); it; ++it)
        if (sign * it.value() > 0) t.emplace_back(int(it.row()), int(it.col()), 1);
    SparseI out(m.rows(), m.cols());
    out.setFromTriplets(t.begin(), t.end());
    return out;
  };
  const SparseI ej = inc.node_block(NodeKind::Junction);
  const SparseI et = inc.node_block(NodeKind::Tank);
  s.junction_out = positive_part(ej, +1);
  s.junction_in = positive_part(ej, -1);
  s.tank_out = positive_part(et, +1);
  s.tank_in = positive_part(et, -1);

  auto upstream_selector = [&](LinkKind k) {
    auto [c0, nc] = inc.link_range(k);
    std::vector<Eigen::Triplet<int>> t;
    for (int i = 0; i < nc; ++i) t.emplace_back(i, inc.up[c0 + i], 1);
    SparseI out(nc, inc.nodes());
    out.setFromTriplets(t.begin(), t.end());
    return out;
  };
  s.pump_upstream = upstream_selector(LinkKind::Pump);
  s.valve_upstream = upstream_selector(LinkKind::Valve);

  if (!segments.empty()) {
    const int np = inc.counts.pipes;
    if (int(segments.size()) != np) throw ConfigError("segment counts do not match pipe count");
    std::vector<Eigen::Triplet<int>> tf, tl;
    int off = 0;
    for (int p = 0; p < np; ++p) {
      const int first = inc.flipped[p] ? off + segments[p] - 1 : off;
      const int last = inc.flipped[p] ? off : off + segments[p] - 1;
      tf.emplace_back(p, first, 1);
      tl.emplace_back(p, last, 1);
      off += segments[p];
    }
    s.pipe_first.resize(np, off);
    s.pipe_last.resize(np, off);
    s.pipe_first.setFromTriplets(tf.begin(), tf.end());
    s.pipe_last.setFromTriplets(tl.begin(), tl.end());
  }
  return s;
}

}  // namespace wqc
