#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/mpc/prediction.hpp"

namespace wqc {

// Diagonal weights held constant over the horizon. `b` is the per-input
// price term (lambda * q^B); it is repeated for every horizon step.
struct CostWeights {
  Vec q;      // per output
  Vec r;      // per input
  Vec b;      // per input
  Vec y_ref;  // per output

  static CostWeights uniform(int ny, int nu, double q_scale, double r_scale, double y_ref) {
    return {Vec::Constant(ny, q_scale), Vec::Constant(nu, r_scale), Vec::Zero(nu), Vec::Constant(ny, y_ref)};
  }
  void check(int ny, int nu) const {
    if (q.size() != ny || y_ref.size() != ny || r.size() != nu || b.size() != nu)
      throw ConfigError("cost weights do not match sensor/input counts");
    if ((q.array() <= 0.0).any() || (r.array() <= 0.0).any())
      throw SolverError("Q and R must be positive definite");
  }
};

inline Vec stack(const Vec& v, int horizon) { return v.replicate(horizon, 1); }

// H = Z^T Q Z + R assembled blockwise from the Markov blocks:
// S(j,k) = S(j+1,k+1) + G_{N-1-j}^T Q G_{N-1-k}.
inline Mat hessian(const PredictionOperator& pred, const CostWeights& w) {
  const int n = pred.horizon, nu = pred.aug.nu();
  w.check(pred.aug.ny(), nu);
  std::vector<Mat> qg(n);
  for (int m = 0; m < n; ++m) qg[m] = w.q.asDiagonal() * pred.markov[m];
  Mat h = Mat::Zero(n * nu, n * nu);
  for (int j = n - 1; j >= 0; --j) {
    for (int k = j; k < n; ++k) {
      Mat blk = pred.markov[n - 1 - j].transpose() * qg[n - 1 - k];
      if (j + 1 < n && k + 1 < n) blk += h.block((j + 1) * nu, (k + 1) * nu, nu, nu);
      h.block(j * nu, k * nu, nu, nu) = blk;
      if (k != j) h.block(k * nu, j * nu, nu, nu) = blk.transpose();
    }
  }
  for (int j = 0; j < n; ++j) h.block(j * nu, j * nu, nu, nu).diagonal() += w.r;
  return h;
}

// f = b + Z^T Q (W x_a - y_ref); the unconstrained minimiser is -H^{-1} f.
inline Vec linear_term(const PredictionOperator& pred, const CostWeights& w, const Vec& xa) {
  const int n = pred.horizon;
  Vec e = pred.free_response(xa) - stack(w.y_ref, n);
  e.array() *= stack(w.q, n).array();
  return stack(w.b, n) + pred.apply_zt(e);
}

// Factorisation of H, reusable while A and B stay fixed.
struct AnalyticalLaw {
  Mat H;
  Eigen::LLT<Mat> llt;

  explicit AnalyticalLaw(Mat h) : H(std::move(h)), llt(H) {
    if (llt.info() != Eigen::Success) throw SolverError("Hessian factorisation failed (weights not positive definite)");
  }
  Vec solve(const Vec& f) const { return -llt.solve(f); }
};

inline Vec analytical_control(const PredictionOperator& pred, const CostWeights& w, const Vec& xa) {
  AnalyticalLaw law(hessian(pred, w));
  return law.solve(linear_term(pred, w, xa));
}

// Value of the horizon objective for a candidate du_p.
inline double horizon_cost(const PredictionOperator& pred, const CostWeights& w, const Vec& xa, const Vec& du) {
  const int n = pred.horizon;
  Vec e = stack(w.y_ref, n) - pred.free_response(xa) - pred.apply_z(du);
  const double track = 0.5 * e.dot(stack(w.q, n).asDiagonal() * e);
  const double smooth = 0.5 * du.dot(stack(w.r, n).asDiagonal() * du);
  return track + smooth + stack(w.b, n).dot(du);
}

struct BoundSet {
  double y_min = -std::numeric_limits<double>::infinity();
  double y_max = std::numeric_limits<double>::infinity();
  Vec u_min, u_max;  // per input
};

// G du <= h, rows with an infinite right side dropped.
struct Inequalities {
  Mat G;
  Vec h;
  int rows() const { return int(h.size()); }
};

// Rows [-Z; Z; -H2; H2] with sides [-y_min + W x_a; y_max - W x_a;
// -u_min + H1 u_prev; u_max - H1 u_prev]. H2 du gives cumulative input moves.
inline Inequalities bound_constraints(const PredictionOperator& pred, const Vec& xa, const Vec& u_prev,
                                      const BoundSet& bounds) {
  const int n = pred.horizon, ny = pred.aug.ny(), nu = pred.aug.nu();
  if (bounds.u_min.size() != nu || bounds.u_max.size() != nu || u_prev.size() != nu)
    throw ConfigError("input bounds do not match input count");
  if (bounds.y_min > bounds.y_max || (bounds.u_min.array() > bounds.u_max.array()).any())
    throw ConfigError("bounds are not ordered (min > max)");
  const bool out_bounds = std::isfinite(bounds.y_min) || std::isfinite(bounds.y_max);
  Mat z;
  Vec wx;
  if (out_bounds) {
    z = pred.Z();
    wx = pred.free_response(xa);
  }
  const int nv = n * nu;
  std::vector<Vec> grow;
  std::vector<double> hrow;
  auto push = [&](Vec g, double h) {
    if (!std::isfinite(h)) return;
    grow.push_back(std::move(g));
    hrow.push_back(h);
  };
  if (std::isfinite(bounds.y_min))
    for (int i = 0; i < n * ny; ++i) push(-z.row(i).transpose(), -bounds.y_min + wx[i]);
  if (std::isfinite(bounds.y_max))
    for (int i = 0; i < n * ny; ++i) push(z.row(i).transpose(), bounds.y_max - wx[i]);
  for (int sign : {-1, 1}) {
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < nu; ++c) {
        Vec g = Vec::Zero(nv);
        for (int j = 0; j <= i; ++j) g[j * nu + c] = sign;
        const double h = sign < 0 ? -bounds.u_min[c] + u_prev[c] : bounds.u_max[c] - u_prev[c];
        push(std::move(g), h);
      }
    }
  }
  Inequalities out;
  out.G.resize(grow.size(), nv);
  out.h.resize(hrow.size());
  for (size_t i = 0; i < grow.size(); ++i) {
    out.G.row(i) = grow[i].transpose();
    out.h[i] = hrow[i];
  }
  return out;
}

}  // namespace wqc
