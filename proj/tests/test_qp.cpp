#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "support.hpp"
#include "swarmopt/errors.hpp"
#include "swarmopt/lp.hpp"
#include "swarmopt/qp.hpp"

using namespace swarmopt;

namespace {

// KKT optimality check for min 1/2 x'Hx + g'x, Ex = e, Cx <= d: there exist
// multipliers with lambda >= 0 on the active set that zero the gradient.
double kkt_residual(const qp::Problem& p, const qp::Result& r) {
  const Eigen::VectorXd grad = p.H * r.x + p.g;
  const int na = static_cast<int>(r.active.size());
  Eigen::MatrixXd N(p.H.rows(), p.E.rows() + na);
  if (p.E.rows() > 0) N.leftCols(p.E.rows()) = p.E.transpose();
  for (int k = 0; k < na; ++k) N.col(p.E.rows() + k) = p.C.row(r.active[k]).transpose();
  if (N.cols() == 0) return grad.norm();
  const Eigen::VectorXd mult = N.colPivHouseholderQr().solve(-grad);
  double neg = 0.0;
  for (int k = 0; k < na; ++k) neg = std::max(neg, -mult(p.E.rows() + k));
  return (N * mult + grad).norm() + neg;
}

}  // namespace

TEST_CASE("lp: bounded box optimum at a vertex") {
  Eigen::MatrixXd A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  Eigen::VectorXd b(4);
  b << 2, 1, 3, 0.5;
  Eigen::VectorXd c(2);
  c << 1, 1;
  const lp::Result r = lp::maximize(c, A, b);
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.x(0) == doctest::Approx(2.0));
  CHECK(r.x(1) == doctest::Approx(3.0));
}

TEST_CASE("lp: unbounded and infeasible detection") {
  Eigen::MatrixXd A(1, 2);
  A << 1, 0;
  Eigen::VectorXd b(1);
  b << 1;
  Eigen::VectorXd c(2);
  c << 0, 1;
  CHECK(lp::maximize(c, A, b).status == lp::Status::Unbounded);

  Eigen::MatrixXd A2(2, 1);
  A2 << 1, -1;
  Eigen::VectorXd b2(2);
  b2 << -1, -1;  // x <= -1 and x >= 1
  CHECK(lp::maximize(Eigen::VectorXd::Ones(1), A2, b2).status == lp::Status::Infeasible);
}

TEST_CASE("qp: unconstrained and equality-constrained closed forms") {
  Eigen::MatrixXd H(2, 2);
  H << 2, 0, 0, 4;
  qp::Problem p{H, Eigen::Vector2d(-2, -4), {}, {}, {}, {}};
  qp::Result r = qp::solve(p, 0.0);
  CHECK(r.x(0) == doctest::Approx(1.0));
  CHECK(r.x(1) == doctest::Approx(1.0));

  // x0 + x1 = 1 with H = I, g = 0 -> (1/2, 1/2).
  p.H = Eigen::Matrix2d::Identity();
  p.g = Eigen::Vector2d::Zero();
  p.E = Eigen::RowVector2d(1, 1);
  p.e = Eigen::VectorXd::Ones(1);
  r = qp::solve(p, 0.0);
  CHECK(r.x(0) == doctest::Approx(0.5));
  CHECK(r.x(1) == doctest::Approx(0.5));
}

TEST_CASE("qp: inconsistent equalities and empty inequality set are reported") {
  qp::Problem p;
  p.H = Eigen::Matrix2d::Identity();
  p.g = Eigen::Vector2d::Zero();
  p.E.resize(2, 2);
  p.E << 1, 0, 1, 0;
  p.e = Eigen::Vector2d(0, 1);
  CHECK_THROWS_AS(qp::solve(p), InfeasibleError);

  qp::Problem q;
  q.H = Eigen::Matrix2d::Identity();
  q.g = Eigen::Vector2d::Zero();
  q.C.resize(2, 2);
  q.C << 1, 0, -1, 0;
  q.d = Eigen::Vector2d(-1, -1);
  CHECK_THROWS_AS(qp::solve(q), InfeasibleError);
}

TEST_CASE("qp: random strictly convex problems satisfy KKT conditions") {
  testing::Gen gen(7);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = gen.integer(2, 12);
    const int ne = gen.integer(0, n / 2);
    const int ni = gen.integer(0, 3 * n);
    Eigen::MatrixXd M = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return gen.normal(); });
    qp::Problem p;
    p.H = M * M.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    p.g = gen.vector(n, -3, 3);
    p.E = Eigen::MatrixXd::NullaryExpr(ne, n, [&] { return gen.normal(); });
    // Inequalities built around a known feasible point.
    const Eigen::VectorXd x_feas = gen.vector(n, -1, 1);
    p.e = p.E * x_feas;
    p.C = Eigen::MatrixXd::NullaryExpr(ni, n, [&] { return gen.normal(); });
    p.d = p.C * x_feas + gen.vector(ni, 0.0, 1.0);
    const qp::Result r = qp::solve(p, 0.0);
    if (ne > 0) CHECK((p.E * r.x - p.e).norm() < 1e-8);
    if (ni > 0) CHECK((p.C * r.x - p.d).maxCoeff() < 1e-8);
    CHECK(kkt_residual(p, r) < 1e-6);
  }
}
