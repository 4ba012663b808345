#include "swarmopt/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Jacobi>
#include <Eigen/QR>

#include "swarmopt/errors.hpp"

namespace swarmopt::qp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTiny = 1e-13;

void drop_column(Eigen::MatrixXd& R, Eigen::MatrixXd& J, int l, int q) {
  for (int k = l; k < q - 1; ++k) R.col(k) = R.col(k + 1);
  R.col(q - 1).setZero();
  for (int k = l; k < q - 1; ++k) {
    Eigen::JacobiRotation<double> rot;
    rot.makeGivens(R(k, k), R(k + 1, k));
    R.applyOnTheLeft(k, k + 1, rot.adjoint());
    J.applyOnTheRight(k, k + 1, rot);
    R(k + 1, k) = 0.0;
  }
}

}  // namespace

bool dual_active_set(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& G,
                     const Eigen::VectorXd& h, Eigen::VectorXd& y, std::vector<int>& active, int& iterations) {
  const int n = static_cast<int>(H.rows());
  const int rows = static_cast<int>(G.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) throw ConditioningError("QP Hessian is not positive definite");

  Eigen::MatrixXd Linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd J = Linv.transpose();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  y = llt.solve(-g);
  active.clear();
  Eigen::VectorXd u(0);
  std::vector<char> is_active(rows, 0);

  Eigen::VectorXd tol(rows);
  for (int j = 0; j < rows; ++j) tol(j) = 1e-10 * (1.0 + std::abs(h(j)));

  const int max_iter = 20 * (n + rows) + 100;
  iterations = 0;
  while (true) {
    if (++iterations > max_iter) throw ConditioningError("dual active-set iteration limit reached");
    int p = -1;
    double worst = 0.0;
    for (int j = 0; j < rows; ++j) {
      if (is_active[j]) continue;
      const double s = h(j) - G.row(j).dot(y);
      if (s < -tol(j) && s < worst) {
        worst = s;
        p = j;
      }
    }
    if (p < 0) return true;

    const Eigen::VectorXd np = -G.row(p).transpose();
    int q = static_cast<int>(active.size());
    Eigen::VectorXd u_plus(q + 1);
    u_plus.head(q) = u;
    u_plus(q) = 0.0;

    while (true) {
      if (++iterations > max_iter) throw ConditioningError("dual active-set iteration limit reached");
      q = static_cast<int>(active.size());
      const Eigen::VectorXd d = J.transpose() * np;
      const Eigen::VectorXd z = J.rightCols(n - q) * d.tail(n - q);
      Eigen::VectorXd r(q);
      if (q > 0) r = R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));

      double t1 = kInf;
      int l = -1;
      for (int k = 0; k < q; ++k) {
        if (r(k) > kTiny) {
          const double ratio = u_plus(k) / r(k);
          if (ratio < t1) {
            t1 = ratio;
            l = k;
          }
        }
      }
      double t2 = kInf;
      const double znp = z.dot(np);
      if (z.norm() > 1e-12 && znp > kTiny) {
        const double sp = h(p) - G.row(p).dot(y);
        t2 = std::max(0.0, -sp / znp);
      }
      const double t = std::min(t1, t2);
      if (t == kInf) return false;

      if (t2 < kInf) y += t * z;
      if (q > 0) u_plus.head(q) -= t * r;
      u_plus(q) += t;

      if (t2 <= t1) {
        // Full step: p joins the active set.
        Eigen::VectorXd dd = d;
        for (int j = n - 1; j > q; --j) {
          Eigen::JacobiRotation<double> rot;
          rot.makeGivens(dd(j - 1), dd(j));
          dd.applyOnTheLeft(j - 1, j, rot.adjoint());
          J.applyOnTheRight(j - 1, j, rot);
          dd(j) = 0.0;
        }
        R.col(q).setZero();
        R.col(q).head(q + 1) = dd.head(q + 1);
        active.push_back(p);
        is_active[p] = 1;
        u = u_plus;
        break;
      }

      // Partial step: drop constraint l and retry.
      is_active[active[l]] = 0;
      active.erase(active.begin() + l);
      Eigen::VectorXd shrunk(q);
      shrunk << u_plus.head(l), u_plus.segment(l + 1, q - l);
      u_plus = shrunk;
      drop_column(R, J, l, q);
    }
  }
}

Result solve(const Problem& problem, double regularization) {
  const int n = static_cast<int>(problem.H.rows());
  if (problem.H.cols() != n || problem.g.size() != n) throw DimensionError("QP: Hessian/gradient size mismatch");
  if (problem.E.rows() > 0 && problem.E.cols() != n) throw DimensionError("QP: equality matrix width mismatch");
  if (problem.C.rows() > 0 && problem.C.cols() != n) throw DimensionError("QP: inequality matrix width mismatch");

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd Z;
  if (problem.E.rows() > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(problem.E.transpose());
    qr.setThreshold(1e-11);
    const int rank = static_cast<int>(qr.rank());
    Eigen::MatrixXd Q = qr.householderQ();
    Z = Q.rightCols(n - rank);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(problem.E);
    cod.setThreshold(1e-11);
    x0 = cod.solve(problem.e);
    const double residual = (problem.E * x0 - problem.e).norm();
    if (residual > 1e-7 * (1.0 + problem.e.norm())) {
      throw InfeasibleError("QP equality constraints are inconsistent");
    }
  } else {
    Z = Eigen::MatrixXd::Identity(n, n);
  }

  const int k = static_cast<int>(Z.cols());
  Result result;
  Eigen::VectorXd yv = Eigen::VectorXd::Zero(k);
  if (k > 0) {
    Eigen::MatrixXd Hr = Z.transpose() * problem.H * Z;
    Hr = 0.5 * (Hr + Hr.transpose());
    const double scale = std::max(Hr.diagonal().cwiseAbs().mean(), 1e-300);
    Hr.diagonal().array() += regularization * scale;
    const Eigen::VectorXd gr = Z.transpose() * (problem.H * x0 + problem.g);

    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    std::vector<int> row_map;
    if (problem.C.rows() > 0) {
      const Eigen::MatrixXd CZ = problem.C * Z;
      const Eigen::VectorXd slack = problem.d - problem.C * x0;
      for (int i = 0; i < CZ.rows(); ++i) {
        const double norm = CZ.row(i).norm();
        if (norm < 1e-12) {
          if (slack(i) < -1e-9 * (1.0 + std::abs(problem.d(i)))) {
            throw InfeasibleError("QP inequality is violated by the equality-determined solution");
          }
          continue;
        }
        row_map.push_back(i);
      }
      G.resize(static_cast<Eigen::Index>(row_map.size()), k);
      h.resize(static_cast<Eigen::Index>(row_map.size()));
      for (std::size_t r = 0; r < row_map.size(); ++r) {
        const double norm = CZ.row(row_map[r]).norm();
        G.row(r) = CZ.row(row_map[r]) / norm;
        h(r) = slack(row_map[r]) / norm;
      }
    } else {
      G.resize(0, k);
      h.resize(0);
    }
    std::vector<int> active;
    if (!dual_active_set(Hr, gr, G, h, yv, active, result.iterations)) {
      throw InfeasibleError("QP inequality constraints are infeasible");
    }
    for (int a : active) result.active.push_back(row_map[a]);
  } else if (problem.C.rows() > 0) {
    const Eigen::VectorXd slack = problem.d - problem.C * x0;
    for (int i = 0; i < slack.size(); ++i) {
      if (slack(i) < -1e-9 * (1.0 + std::abs(problem.d(i)))) {
        throw InfeasibleError("QP inequality is violated by the equality-determined solution");
      }
    }
  }

  result.x = x0 + Z * yv;
  result.objective = 0.5 * result.x.dot(problem.H * result.x) + problem.g.dot(result.x);
  return result;
}

}  // namespace swarmopt::qp
