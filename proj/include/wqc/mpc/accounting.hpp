#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/network/network.hpp"

namespace wqc {

enum class Formulation { FullLp, ReducedQp };

struct VariableCount {
  std::int64_t lp = 0;
  std::int64_t qp = 0;
  double reduction = 0.0;  // fraction of variables removed by the reduced form
  int reduction_percent() const { return int(std::floor(100.0 * reduction + 0.5)); }
};

// Worst case: a booster at every node. n_L counts pipe segments plus pumps
// and valves, the link states of the model.
inline VariableCount count_variables(const ComponentCounts& c, std::int64_t segments_total, std::int64_t horizon) {
  const std::int64_t nn = c.nodes();
  const std::int64_t nl = segments_total + c.pumps + c.valves;
  VariableCount v;
  v.lp = horizon * (2 * nn + nl);
  v.qp = horizon * nn;
  v.reduction = double(nn + nl) / double(2 * nn + nl);
  return v;
}

inline std::int64_t count_variables(const ComponentCounts& c, std::int64_t segments_total, std::int64_t horizon,
                                    Formulation f) {
  const auto v = count_variables(c, segments_total, horizon);
  return f == Formulation::FullLp ? v.lp : v.qp;
}

// Averages the input series over blocks of `steps_per_block` samples,
// weighted by `flow` when given, so that sum(flow * u) per block is unchanged.
inline std::vector<double> lump_schedule(const std::vector<double>& u, int steps_per_block,
                                         const std::vector<double>& flow = {}) {
  if (steps_per_block < 1 || u.size() % size_t(steps_per_block) != 0)
    throw ConfigError("booster period is not a multiple of the control step");
  if (!flow.empty() && flow.size() != u.size()) throw ConfigError("flow series length mismatch");
  std::vector<double> out;
  for (size_t b = 0; b < u.size(); b += steps_per_block) {
    double mass = 0.0, vol = 0.0;
    for (size_t k = b; k < b + steps_per_block; ++k) {
      const double q = flow.empty() ? 1.0 : flow[k];
      mass += q * u[k];
      vol += q;
    }
    double avg = 0.0;
    if (vol > 0.0) {
      avg = mass / vol;
    } else {
      for (size_t k = b; k < b + steps_per_block; ++k) avg += u[k];
      avg /= steps_per_block;
    }
    out.push_back(avg);
  }
  return out;
}

}  // namespace wqc
