#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "wqc/harness/scenario.hpp"
#include "wqc/network/hydraulics.hpp"
#include "wqc/network/network.hpp"

namespace wqc {

// Plant-side perturbations. Reaction multipliers are drawn once per scenario;
// demand multipliers once per demand period. Each stream has its own seed
// sequence so the draws do not depend on call order.
class UncertaintySource {
 public:
  UncertaintySource(UncertaintySpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {}

  const UncertaintySpec& spec() const { return spec_; }

  WaterNetwork perturb_reaction(const WaterNetwork& nominal) const {
    WaterNetwork net = nominal;
    if (spec_.reaction_band == 0.0) return net;
    std::seed_seq ss{std::uint32_t(seed_), std::uint32_t(seed_ >> 32), 0x7265u};
    std::mt19937_64 rng(ss);
    std::uniform_real_distribution<double> d(-spec_.reaction_band, spec_.reaction_band);
    for (auto& p : net.pipes) {
      p.kb *= 1.0 + d(rng);
      p.kw *= 1.0 + d(rng);
    }
    for (auto& t : net.tanks) t.kb *= 1.0 + d(rng);
    return net;
  }

  std::vector<double> demand_multipliers(int window, int junctions) const {
    std::vector<double> m(junctions, 1.0);
    if (spec_.demand_band == 0.0) return m;
    std::seed_seq ss{std::uint32_t(seed_), std::uint32_t(seed_ >> 32), 0x6465u, std::uint32_t(window)};
    std::mt19937_64 rng(ss);
    std::uniform_real_distribution<double> d(-spec_.demand_band, spec_.demand_band);
    for (auto& v : m) v = 1.0 + d(rng);
    return m;
  }

  // Link flows stay nominal; only the demand seen by the plant changes.
  HydraulicPeriod perturb_demand(const HydraulicPeriod& hp, int window) const {
    HydraulicPeriod out = hp;
    const auto m = demand_multipliers(window, int(hp.demand.size()));
    for (size_t j = 0; j < out.demand.size(); ++j) out.demand[j] *= m[j];
    return out;
  }

 private:
  UncertaintySpec spec_;
  std::uint64_t seed_;
};

}  // namespace wqc
