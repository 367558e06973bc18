#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/mpc/law.hpp"

namespace wqc {

enum class QpStatus { Optimal, Infeasible, IterationLimit };

struct QpResult {
  QpStatus status = QpStatus::Optimal;
  Vec x;
  Vec multipliers;         // one per inequality row, zero when inactive
  std::vector<int> active;
  int iterations = 0;
  bool ok() const { return status == QpStatus::Optimal; }
};

// Dual active-set method of Goldfarb and Idnani for
//   min 1/2 x^T H x + f^T x  subject to  G x <= h.
// Starts from the unconstrained minimiser and adds the most violated
// constraint each outer iteration; infeasibility shows up as an unbounded
// dual step. The inverse Cholesky factor of H is computed once per instance.
class DualActiveSetQp {
 public:
  explicit DualActiveSetQp(const Mat& H) : n_(int(H.rows())) {
    Eigen::LLT<Mat> llt(H);
    if (llt.info() != Eigen::Success) throw SolverError("QP Hessian is not positive definite");
    // J0 = L^{-T}, so that J0 J0^T = H^{-1}.
    Mat lt = llt.matrixU();
    j0_ = lt.triangularView<Eigen::Upper>().solve(Mat::Identity(n_, n_));
  }

  QpResult solve(const Vec& f, const Mat& G, const Vec& h, int max_iter = 0) const {
    const int m = int(h.size());
    if (f.size() != n_ || G.rows() != m || (m > 0 && G.cols() != n_))
      throw SolverError("QP dimension mismatch");
    if (max_iter <= 0) max_iter = 50 * (n_ + m) + 100;
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr double eps = 1e-12;

    Mat J = j0_;
    Mat R = Mat::Zero(n_, n_);
    double r_norm = 1.0;
    QpResult res;
    res.x = -(J * (J.transpose() * f));
    std::vector<int> act;   // active constraint indices
    std::vector<double> u;  // their multipliers
    std::vector<char> is_active(m, 0);
    Vec row_norm(m);
    for (int i = 0; i < m; ++i) row_norm[i] = G.row(i).norm();

    auto slack = [&](int i) { return h[i] - G.row(i).dot(res.x); };  // >= 0 when satisfied

    auto add = [&](Vec d) -> bool {
      const int q = int(act.size());
      for (int j = n_ - 1; j > q; --j) {
        double cc = d[j - 1], ss = d[j];
        const double hh = std::hypot(cc, ss);
        if (hh == 0.0) continue;
        d[j] = 0.0;
        ss /= hh;
        cc /= hh;
        if (cc < 0.0) {
          cc = -cc;
          ss = -ss;
          d[j - 1] = -hh;
        } else {
          d[j - 1] = hh;
        }
        const double xny = ss / (1.0 + cc);
        for (int k = 0; k < n_; ++k) {
          const double t1 = J(k, j - 1), t2 = J(k, j);
          J(k, j - 1) = t1 * cc + t2 * ss;
          J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
        }
      }
      R.col(q).head(q + 1) = d.head(q + 1);
      if (std::abs(d[q]) <= eps * r_norm) return false;
      r_norm = std::max(r_norm, std::abs(d[q]));
      return true;
    };

    auto drop = [&](int pos) {
      const int q = int(act.size());
      is_active[act[pos]] = 0;
      for (int i = pos; i < q - 1; ++i) R.col(i) = R.col(i + 1);
      R.col(q - 1).setZero();
      act.erase(act.begin() + pos);
      u.erase(u.begin() + pos);
      const int nq = q - 1;
      for (int j = pos; j < nq; ++j) {
        double cc = R(j, j), ss = R(j + 1, j);
        const double hh = std::hypot(cc, ss);
        if (hh == 0.0) continue;
        cc /= hh;
        ss /= hh;
        R(j + 1, j) = 0.0;
        if (cc < 0.0) {
          R(j, j) = -hh;
          cc = -cc;
          ss = -ss;
        } else {
          R(j, j) = hh;
        }
        const double xny = ss / (1.0 + cc);
        for (int k = j + 1; k < nq; ++k) {
          const double t1 = R(j, k), t2 = R(j + 1, k);
          R(j, k) = t1 * cc + t2 * ss;
          R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
        }
        for (int k = 0; k < n_; ++k) {
          const double t1 = J(k, j), t2 = J(k, j + 1);
          J(k, j) = t1 * cc + t2 * ss;
          J(k, j + 1) = xny * (J(k, j) + t1) - t2;
        }
      }
    };

    int iter = 0;
    while (true) {
      // Most violated inactive constraint, scaled by row norm.
      int p = -1;
      double worst = 0.0;
      for (int i = 0; i < m; ++i) {
        if (is_active[i] || row_norm[i] == 0.0) continue;
        const double s = slack(i) / row_norm[i];
        if (s < worst - 1e-10 * (1.0 + std::abs(h[i]) / row_norm[i])) {
          worst = s;
          p = i;
        }
      }
      if (p < 0) break;
      Vec np = -G.row(p).transpose();  // constraint as np^T x + h_p >= 0
      double u_plus = 0.0;
      while (true) {
        if (++iter > max_iter) {
          res.status = QpStatus::IterationLimit;
          finish(res, act, u, m, iter);
          return res;
        }
        const int q = int(act.size());
        Vec d = J.transpose() * np;
        Vec z = J.rightCols(n_ - q) * d.tail(n_ - q);
        Vec r(q);
        for (int i = q - 1; i >= 0; --i) {
          double s = d[i];
          for (int k = i + 1; k < q; ++k) s -= R(i, k) * r[k];
          r[i] = s / R(i, i);
        }
        double t1 = inf;
        int drop_pos = -1;
        for (int k = 0; k < q; ++k) {
          if (r[k] > 0.0 && u[k] / r[k] < t1) {
            t1 = u[k] / r[k];
            drop_pos = k;
          }
        }
        const double sp = slack(p);
        const double zn = z.dot(np);
        const bool primal_step = z.norm() > eps * (1.0 + np.norm()) && zn > 0.0;
        const double t2 = primal_step ? -sp / zn : inf;
        if (!primal_step) {
          if (!std::isfinite(t1)) {
            res.status = QpStatus::Infeasible;
            finish(res, act, u, m, iter);
            return res;
          }
          for (int k = 0; k < q; ++k) u[k] -= t1 * r[k];
          u_plus += t1;
          drop(drop_pos);
          continue;
        }
        const double t = std::min(t1, t2);
        res.x += t * z;
        for (int k = 0; k < q; ++k) u[k] -= t * r[k];
        u_plus += t;
        if (t2 <= t1) {
          // A dependent row is left inactive; the step made it tight anyway.
          if (add(d)) {
            act.push_back(p);
            u.push_back(u_plus);
          }
          is_active[p] = 1;
          break;
        }
        drop(drop_pos);
      }
    }
    res.status = QpStatus::Optimal;
    finish(res, act, u, m, iter);
    return res;
  }

 private:
  static void finish(QpResult& res, const std::vector<int>& act, const std::vector<double>& u, int m, int iter) {
    res.multipliers = Vec::Zero(m);
    for (size_t k = 0; k < act.size(); ++k) res.multipliers[act[k]] = u[k];
    res.active = act;
    res.iterations = iter;
  }

  int n_;
  Mat j0_;
};

inline QpResult solve_constrained(const Mat& H, const Vec& f, const Inequalities& ineq) {
  return DualActiveSetQp(H).solve(f, ineq.G, ineq.h);
}

}  // namespace wqc
