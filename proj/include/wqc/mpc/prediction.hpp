#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/quality/assembly.hpp"

namespace wqc {

using Mat = Eigen::MatrixXd;

// Augmented system over x_a = [dx; y]:
//   Phi_a = [[A, 0], [CA, I]],  Gamma_a = [B; CB],  C_a = [0, I].
// C selects sensor states, so it is kept as an index list.
struct AugmentedSystem {
  SparseD A;
  Mat B;                     // n_x x n_u, booster columns only
  std::vector<int> sensors;  // state index per output

  int nx() const { return int(A.rows()); }
  int ny() const { return int(sensors.size()); }
  int nu() const { return int(B.cols()); }
  int na() const { return nx() + ny(); }

  Vec select(const Vec& x) const {
    Vec y(ny());
    for (int i = 0; i < ny(); ++i) y[i] = x[sensors[i]];
    return y;
  }
  Mat select_rows(const Mat& m) const {
    Mat out(ny(), m.cols());
    for (int i = 0; i < ny(); ++i) out.row(i) = m.row(sensors[i]);
    return out;
  }

  // One application of Phi_a x_a + Gamma_a du.
  Vec advance(const Vec& xa, const Vec& du) const {
    Vec dx = A * xa.head(nx());
    dx.noalias() += B * du;
    Vec out(na());
    out.head(nx()) = dx;
    out.tail(ny()) = xa.tail(ny()) + select(dx);
    return out;
  }

  Mat C() const {
    Mat c = Mat::Zero(ny(), nx());
    for (int i = 0; i < ny(); ++i) c(i, sensors[i]) = 1.0;
    return c;
  }
  Mat phi() const {
    Mat ad = Mat(A);
    Mat p = Mat::Zero(na(), na());
    p.topLeftCorner(nx(), nx()) = ad;
    p.bottomLeftCorner(ny(), nx()) = select_rows(ad);
    p.bottomRightCorner(ny(), ny()).setIdentity();
    return p;
  }
  Mat gamma() const {
    Mat g(na(), nu());
    g.topRows(nx()) = B;
    g.bottomRows(ny()) = select_rows(B);
    return g;
  }
  Mat c_a() const {
    Mat c = Mat::Zero(ny(), na());
    c.rightCols(ny()).setIdentity();
    return c;
  }
};

inline AugmentedSystem build_augmented(const SparseD& A, const Mat& B, const std::vector<int>& sensors) {
  if (sensors.empty()) throw ConfigError("at least one sensor is required");
  if (A.rows() != A.cols() || B.rows() != A.rows())
    throw ModelError("augmented system: inconsistent A/B dimensions");
  for (int s : sensors)
    if (s < 0 || s >= A.rows()) throw ConfigError("sensor index out of range");
  return {A, B, sensors};
}

// Sensors are entity names resolving to exactly one state (node, pump/valve,
// or "pipe:k"); inputs are the B columns of the booster nodes.
inline AugmentedSystem build_augmented(const StateSpaceSystem& sys, const std::vector<std::string>& sensors,
                                       const std::vector<int>& booster_nodes) {
  std::vector<int> idx;
  for (const auto& s : sensors) {
    auto r = sys.map.resolve(s);
    if (r.size() != 1)
      throw ConfigError("sensor '" + s + "' must name a single state (use pipe:k for a pipe segment)");
    idx.push_back(r[0]);
  }
  Mat b(sys.states(), booster_nodes.size());
  for (size_t i = 0; i < booster_nodes.size(); ++i) b.col(i) = Vec(sys.B.col(booster_nodes[i]));
  return build_augmented(sys.A, b, idx);
}

// Horizon prediction y_p = W x_a + Z du_p with y_p = [y(t+1); ...; y(t+N)] and
// du_p = [du(t); ...; du(t+N-1)]. Z is block lower-triangular Toeplitz with
// blocks G_k = C_a Phi_a^k Gamma_a, which are all that is stored.
struct PredictionOperator {
  AugmentedSystem aug;
  int horizon = 0;
  std::vector<Mat> markov;  // G_0 .. G_{N-1}, each n_y x n_u

  int rows() const { return horizon * aug.ny(); }
  int cols() const { return horizon * aug.nu(); }

  // W x_a by free-response rollout.
  Vec free_response(const Vec& xa) const {
    const int ny = aug.ny();
    Vec out(rows());
    Vec dx = xa.head(aug.nx());
    Vec y = xa.tail(ny);
    for (int i = 0; i < horizon; ++i) {
      dx = aug.A * dx;
      y += aug.select(dx);
      out.segment(i * ny, ny) = y;
    }
    return out;
  }

  Vec apply_z(const Vec& du) const {
    const int ny = aug.ny(), nu = aug.nu();
    Vec out = Vec::Zero(rows());
    for (int i = 0; i < horizon; ++i)
      for (int j = 0; j <= i; ++j) out.segment(i * ny, ny).noalias() += markov[i - j] * du.segment(j * nu, nu);
    return out;
  }

  Vec apply_zt(const Vec& v) const {
    const int ny = aug.ny(), nu = aug.nu();
    Vec out = Vec::Zero(cols());
    for (int j = 0; j < horizon; ++j)
      for (int i = j; i < horizon; ++i)
        out.segment(j * nu, nu).noalias() += markov[i - j].transpose() * v.segment(i * ny, ny);
    return out;
  }

  Mat Z() const {
    const int ny = aug.ny(), nu = aug.nu();
    Mat z = Mat::Zero(rows(), cols());
    for (int i = 0; i < horizon; ++i)
      for (int j = 0; j <= i; ++j) z.block(i * ny, j * nu, ny, nu) = markov[i - j];
    return z;
  }

  Mat W() const {
    const int ny = aug.ny(), nx = aug.nx();
    Mat w(rows(), aug.na());
    Mat acc = Mat::Zero(ny, nx);
    Mat pw = Mat::Identity(nx, nx);
    Mat ad = Mat(aug.A);
    for (int i = 0; i < horizon; ++i) {
      pw = ad * pw;
      acc += aug.select_rows(pw);
      w.block(i * ny, 0, ny, nx) = acc;
      w.block(i * ny, nx, ny, ny).setIdentity();
    }
    return w;
  }
};

inline PredictionOperator build_prediction(const AugmentedSystem& aug, int horizon) {
  if (horizon < 1) throw ConfigError("prediction horizon must be at least one step");
  PredictionOperator p{aug, horizon, {}};
  p.markov.reserve(horizon);
  Mat m = aug.B;
  Mat g = aug.select_rows(m);
  p.markov.push_back(g);
  for (int k = 1; k < horizon; ++k) {
    m = aug.A * m;
    g += aug.select_rows(m);
    p.markov.push_back(g);
  }
  return p;
}

}  // namespace wqc
