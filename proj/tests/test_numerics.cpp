#include <doctest.h>

#include <random>

#include "linecal/numerics.hpp"
#include "linecal/types.hpp"

using namespace linecal;
using C = std::complex<double>;

namespace {

BoxQpProblem scalar_problem(double target, double lo, double hi) {
  BoxQpProblem p;
  p.g = Eigen::MatrixXd::Identity(1, 1);
  p.h = Eigen::VectorXd::Constant(1, target);
  p.lower = Eigen::VectorXd::Constant(1, lo);
  p.upper = Eigen::VectorXd::Constant(1, hi);
  return p;
}

}  // namespace

TEST_CASE("complex_lse examples") {
  SUBCASE("identity") {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd b(2, 2);
    b << C(1, 2), C(3, -1), C(0, 1), C(-2, 0);
    CHECK((complex_lse(a, b).x - b).norm() < 1e-14);
  }
  SUBCASE("mean of two points") {
    Eigen::MatrixXcd a(2, 1), b(2, 1);
    a << 1.0, 1.0;
    b << 2.0, 4.0;
    CHECK(std::abs(complex_lse(a, b).x(0, 0) - C(3.0, 0.0)) < 1e-14);
  }
  SUBCASE("orthogonal right-hand side") {
    Eigen::MatrixXcd a(2, 1), b(2, 1);
    a << C(1, 0), C(0, 1);
    b << C(0, 1), C(1, 0);
    CHECK(std::abs(complex_lse(a, b).x(0, 0)) < 1e-14);
  }
  SUBCASE("rank deficient") {
    Eigen::MatrixXcd a(3, 2), b(3, 1);
    a << 1.0, 2.0, C(0, 1), C(0, 2), 3.0, 6.0;
    b << 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(complex_lse(a, b), IllConditionedError);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS(complex_lse(Eigen::MatrixXcd::Identity(3, 2), Eigen::MatrixXcd::Ones(2, 1)));
  }
  SUBCASE("condition number reported") {
    Eigen::MatrixXcd a(2, 2);
    a << 2.0, 0.0, 0.0, 0.5;
    CHECK(complex_lse(a, Eigen::MatrixXcd::Ones(2, 1)).condition == doctest::Approx(4.0));
  }
}

TEST_CASE("box_qp examples") {
  CHECK(box_qp(scalar_problem(2.0, 0.0, 1.0)).k(0) == doctest::Approx(1.0));
  CHECK(box_qp(scalar_problem(2.0, 0.0, 3.0)).k(0) == doctest::Approx(2.0));

  BoxQpProblem p;
  p.g.resize(2, 2);
  p.g << 1, 1, 1, -1;
  p.h = Eigen::Vector2d(2, 0);
  p.lower = Eigen::Vector2d(0, 0);
  p.upper = Eigen::Vector2d(0.8, 0.8);
  const auto s = box_qp(p);
  CHECK(s.converged);
  CHECK(s.k(0) == doctest::Approx(0.8));
  CHECK(s.k(1) == doctest::Approx(0.8));
}

TEST_CASE("box_qp validation") {
  auto p = scalar_problem(1.0, 2.0, 1.0);
  CHECK_THROWS_AS(box_qp(p), ValidationError);
  p = scalar_problem(1.0, 0.0, 1.0);
  p.h = Eigen::VectorXd::Constant(2, 1.0);
  CHECK_THROWS_AS(box_qp(p), ValidationError);
  p = scalar_problem(std::nan(""), 0.0, 1.0);
  CHECK_THROWS_AS(box_qp(p), ValidationError);
}

TEST_CASE("box_qp properties") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 7;
    BoxQpProblem p;
    p.g = Eigen::MatrixXd::NullaryExpr(3 * d, d, [&] { return n(rng); });
    p.h = Eigen::VectorXd::NullaryExpr(3 * d, [&] { return 3.0 * n(rng); });
    p.lower = Eigen::VectorXd::Constant(d, -0.5);
    p.upper = Eigen::VectorXd::Constant(d, 0.5);
    const auto s = box_qp(p);
    CHECK(s.converged);
    // Feasible.
    CHECK((s.k.array() >= p.lower.array()).all());
    CHECK((s.k.array() <= p.upper.array()).all());
    // KKT sign conditions on the gradient.
    const Eigen::VectorXd grad = 2.0 * p.g.transpose() * (p.g * s.k - p.h);
    for (int i = 0; i < d; ++i) {
      if (s.k(i) > p.lower(i) + 1e-9 && s.k(i) < p.upper(i) - 1e-9) CHECK(std::abs(grad(i)) < 1e-6);
      if (s.k(i) <= p.lower(i) + 1e-9) CHECK(grad(i) > -1e-6);
      if (s.k(i) >= p.upper(i) - 1e-9) CHECK(grad(i) < 1e-6);
    }
    // Objective never beaten by random feasible points.
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int probe = 0; probe < 20; ++probe) {
      const Eigen::VectorXd k = Eigen::VectorXd::NullaryExpr(d, [&] { return u(rng); });
      CHECK((p.g * k - p.h).squaredNorm() >= s.objective - 1e-9);
    }
  }
}

TEST_CASE("box_qp singular Hessian stays feasible") {
  BoxQpProblem p;
  p.g.resize(3, 2);
  p.g << 1, 1, 2, 2, 3, 3;
  p.h = Eigen::Vector3d(2, 4, 6);
  p.lower = Eigen::Vector2d(0.9, 0.9);
  p.upper = Eigen::Vector2d(1.05, 1.05);
  const auto s = box_qp(p);
  CHECK(s.objective < 1e-12);
  CHECK(s.k.sum() == doctest::Approx(2.0));
}
