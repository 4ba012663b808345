#include "swarmopt/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "swarmopt/errors.hpp"

namespace swarmopt::lp {
namespace {

constexpr double kPivotEps = 1e-11;
constexpr int kMaxPivots = 20000;

void pivot(Eigen::MatrixXd& T, int row, int col) {
  T.row(row) /= T(row, col);
  for (int i = 0; i < T.rows(); ++i) {
    if (i != row) {
      const double factor = T(i, col);
      if (factor != 0.0) T.row(i) -= factor * T.row(row);
    }
  }
}

// Runs the simplex on tableau T (objective in the last row, rhs in the last
// column). Only columns < enter_limit may enter. Returns false if unbounded.
bool run_simplex(Eigen::MatrixXd& T, std::vector<int>& basis, int enter_limit) {
  const int rows = static_cast<int>(T.rows()) - 1;
  const int rhs = static_cast<int>(T.cols()) - 1;
  for (int iter = 0; iter < kMaxPivots; ++iter) {
    int enter = -1;
    for (int j = 0; j < enter_limit; ++j) {
      if (T(rows, j) < -kPivotEps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;

    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rows; ++i) {
      if (T(i, enter) > kPivotEps) {
        const double ratio = T(i, rhs) / T(i, enter);
        if (ratio < best - kPivotEps ||
            (std::abs(ratio - best) <= kPivotEps && leave >= 0 && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) return false;
    pivot(T, leave, enter);
    basis[leave] = enter;
  }
  throw ConditioningError("simplex exceeded its pivot limit");
}

}  // namespace

Result maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  if (c.size() != n || b.size() != m) throw DimensionError("lp::maximize: dimension mismatch");

  int num_artificial = 0;
  for (int i = 0; i < m; ++i) num_artificial += b(i) < 0.0 ? 1 : 0;

  // Columns: u (n), v (n), slack (m), artificial, rhs.
  const int art0 = 2 * n + m;
  const int cols = art0 + num_artificial;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, cols + 1);
  std::vector<int> basis(m);

  int next_art = art0;
  for (int i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    T.block(i, 0, 1, n) = sign * A.row(i);
    T.block(i, n, 1, n) = -sign * A.row(i);
    T(i, 2 * n + i) = sign;
    T(i, cols) = sign * b(i);
    if (sign < 0.0) {
      T(i, next_art) = 1.0;
      basis[i] = next_art++;
    } else {
      basis[i] = 2 * n + i;
    }
  }

  // Phase 1: maximize -(sum of artificials).
  if (num_artificial > 0) {
    T.row(m).setZero();
    T.block(m, art0, 1, num_artificial).setOnes();
    for (int i = 0; i < m; ++i) {
      if (basis[i] >= art0) T.row(m) -= T.row(i);
    }
    if (!run_simplex(T, basis, cols)) {
      throw ConditioningError("phase-1 simplex reported an unbounded auxiliary problem");
    }
    const double scale = 1.0 + b.cwiseAbs().sum();
    if (T(m, cols) < -1e-9 * scale) return Result{Status::Infeasible, {}, 0.0};

    // Drive zero-valued artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (basis[i] < art0) continue;
      for (int j = 0; j < art0; ++j) {
        if (std::abs(T(i, j)) > 1e-9) {
          pivot(T, i, j);
          basis[i] = j;
          break;
        }
      }
    }
  }

  // Phase 2.
  T.row(m).setZero();
  T.block(m, 0, 1, n) = -c.transpose();
  T.block(m, n, 1, n) = c.transpose();
  for (int i = 0; i < m; ++i) {
    const double coef = T(m, basis[i]);
    if (coef != 0.0) T.row(m) -= coef * T.row(i);
  }
  if (!run_simplex(T, basis, art0)) return Result{Status::Unbounded, {}, 0.0};

  Eigen::VectorXd primal = Eigen::VectorXd::Zero(cols);
  for (int i = 0; i < m; ++i) primal(basis[i]) = T(i, cols);
  Result out;
  out.status = Status::Optimal;
  out.x = primal.head(n) - primal.segment(n, n);
  out.objective = c.dot(out.x);
  return out;
}

}  // namespace swarmopt::lp
