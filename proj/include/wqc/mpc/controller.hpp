#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/mpc/law.hpp"
#include "wqc/mpc/prediction.hpp"
#include "wqc/mpc/qp.hpp"
#include "wqc/network/network.hpp"
#include "wqc/units.hpp"

namespace wqc {

struct ControllerConfig {
  int horizon_steps = 0;              // 0: prediction period / dt
  double prediction_period_s = 300.0;
  double y_ref = 2.0;                 // mg/L
  double lambda = 0.001;              // $/mg
  double q_weight = 1.0, r_weight = 1.0;
  double y_min = 0.2, y_max = 4.0;    // mg/L
  double u_min = 0.0;
  double u_max = std::numeric_limits<double>::infinity();
  std::vector<std::string> sensors;
  std::vector<std::string> boosters;
  bool constrained = true;            // false: analytical law + clipping
  double lumping_period_s = 0.0;      // 0: no lumping of the exported schedule
};

// Receding-horizon booster controller. Holds the previous input and the
// prediction/factorisation for the current hydraulic period.
class MpcController {
 public:
  MpcController(const WaterNetwork& net, ControllerConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.boosters.empty()) throw ConfigError("controller needs at least one booster");
    if (cfg_.sensors.empty()) throw ConfigError("controller needs at least one sensor");
    for (const auto& b : cfg_.boosters) {
      const int n = net.node_index(b);
      for (int seen : booster_nodes_)
        if (seen == n) throw ConfigError("node '" + b + "' has more than one booster");
      booster_nodes_.push_back(n);
    }
    u_prev_ = Vec::Zero(int(booster_nodes_.size()));
  }

  const ControllerConfig& config() const { return cfg_; }
  const std::vector<int>& booster_nodes() const { return booster_nodes_; }
  int inputs() const { return int(booster_nodes_.size()); }
  const Vec& last_input() const { return u_prev_; }
  int fallback_count() const { return fallbacks_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  int horizon() const { return cache_ ? cache_->pred.horizon : 0; }

  // Expand booster inputs to the node-indexed input vector of the LDE.
  Vec expand(const Vec& u, int node_count) const {
    Vec full = Vec::Zero(node_count);
    for (int i = 0; i < inputs(); ++i) full[booster_nodes_[i]] = u[i];
    return full;
  }

  // One receding-horizon step: x_a = [dx_model; y_meas] -> u(t) = u(t-1) + du.
  // du sums the first `block_steps` planned moves, the part of the plan that
  // falls inside one control interval.
  Vec step(const StateSpaceSystem& sys, const Vec& dx_model, const Vec& y_meas, double t = 0.0,
           int block_steps = 1) {
    prepare(sys);
    const auto& c = *cache_;
    if (y_meas.size() != c.pred.aug.ny())
      throw ConfigError("measurement vector has " + std::to_string(y_meas.size()) + " entries, expected " +
                        std::to_string(c.pred.aug.ny()));
    if (dx_model.size() != c.pred.aug.nx()) throw ModelError("model increment has the wrong size");
    Vec xa(c.pred.aug.na());
    xa << dx_model, y_meas;
    const Vec f = linear_term(c.pred, c.weights, xa);
    Vec du;
    if (cfg_.constrained) {
      BoundSet bounds{cfg_.y_min, cfg_.y_max, Vec::Constant(inputs(), cfg_.u_min),
                      Vec::Constant(inputs(), cfg_.u_max)};
      const Inequalities ineq = bound_constraints(c.pred, xa, u_prev_, bounds);
      QpResult r = c.qp->solve(f, ineq.G, ineq.h);
      if (r.ok()) {
        du = r.x;
      } else {
        ++fallbacks_;
        warnings_.push_back("t=" + detail::fmt_double(t) + " s: QP " +
                            (r.status == QpStatus::Infeasible ? "infeasible" : "hit iteration limit") +
                            ", using the analytical law with clipping");
        du = c.law.solve(f);
      }
    } else {
      du = c.law.solve(f);
    }
    const int nb = std::clamp(block_steps, 1, c.pred.horizon);
    Vec u = u_prev_;
    for (int k = 0; k < nb; ++k) u += du.segment(k * inputs(), inputs());
    for (int i = 0; i < inputs(); ++i) u[i] = std::clamp(u[i], cfg_.u_min, cfg_.u_max);
    u_prev_ = u;
    return u;
  }

  int horizon_for(const StateSpaceSystem& sys) const {
    if (cfg_.horizon_steps > 0) return cfg_.horizon_steps;
    const double n = cfg_.prediction_period_s / sys.dt;
    const long k = std::lround(n);
    if (k < 1 || std::abs(n - double(k)) > 1e-9 * n)
      throw ConfigError("prediction period is not a whole number of water-quality steps");
    return int(k);
  }

  // Builds (or reuses) prediction and factorisations for this period.
  void prepare(const StateSpaceSystem& sys) {
    if (cache_ && cache_->key == &sys && cache_->period == sys.period && cache_->dt == sys.dt) return;
    const AugmentedSystem aug = build_augmented(sys, cfg_.sensors, booster_nodes_);
    PredictionOperator pred = build_prediction(aug, horizon_for(sys));
    CostWeights w = CostWeights::uniform(aug.ny(), aug.nu(), cfg_.q_weight, cfg_.r_weight, cfg_.y_ref);
    for (int i = 0; i < inputs(); ++i)
      w.b[i] = cfg_.lambda * units::cms_to_gpm(sys.booster_flow[booster_nodes_[i]]);
    Mat h = hessian(pred, w);
    std::unique_ptr<DualActiveSetQp> qp;
    if (cfg_.constrained) qp = std::make_unique<DualActiveSetQp>(h);
    cache_.emplace(Cache{&sys, sys.period, sys.dt, std::move(pred), w, AnalyticalLaw(std::move(h)), std::move(qp)});
  }

 private:
  struct Cache {
    const StateSpaceSystem* key;
    int period;
    double dt;
    PredictionOperator pred;
    CostWeights weights;
    AnalyticalLaw law;
    std::unique_ptr<DualActiveSetQp> qp;
  };

  ControllerConfig cfg_;
  std::vector<int> booster_nodes_;
  Vec u_prev_;
  std::optional<Cache> cache_;
  int fallbacks_ = 0;
  std::vector<std::string> warnings_;
};

}  // namespace wqc
