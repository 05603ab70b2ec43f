#include <doctest.h>

#include <limits>
#include <random>

#include "dstofw/constraint.hpp"

using namespace dstofw;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

// Brute force over the 2 * dim signed axis vertices.
double vertex_minimum(const Eigen::VectorXd& g, double radius) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    best = std::min(best, radius * g(j));
    best = std::min(best, -radius * g(j));
  }
  return best;
}

}  // namespace

TEST_CASE("lmo_l1 worked examples") {
  CHECK(Eigen::VectorXd(lmo_l1(vec({3, -5, 1}), 20.0)) == vec({0, 20, 0}));
  CHECK(Eigen::VectorXd(lmo_l1(vec({0, 0}), 5.0)) == vec({0, 0}));
  CHECK(Eigen::VectorXd(lmo_l1(vec({2, 2}), 1.0)) == vec({-1, 0}));
  CHECK(lmo_l1(vec({3, -5, 1}), 20.0).nonZeros() == 1);
  CHECK(lmo_l1(vec({0, 0}), 5.0).nonZeros() == 0);
}

TEST_CASE("lmo_l1 rejects non-finite directions") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(lmo_l1(vec({1, nan}), 1.0), NumericError);
  CHECK_THROWS_AS(lmo_l1(vec({inf, 0}), 1.0), NumericError);
}

TEST_CASE("diameter and membership") {
  CHECK(diameter_l1(20.0) == 40.0);
  CHECK(diameter_l1(1.0) == 2.0);
  CHECK(diameter_l1(0.5) == 1.0);
  CHECK(contains_l1(vec({10, -10}), 20.0, 0.0));
  CHECK_FALSE(contains_l1(vec({10.1, -10}), 20.0, 0.0));
  CHECK(contains_l1(Eigen::VectorXd::Zero(4), 0.1, 0.0));

  const L1Ball ball(20.0, 3);
  CHECK(ball.diameter() == 40.0);
  CHECK(ball.contains(vec({10, -10, 0}), 0.0));
  CHECK_THROWS_AS(L1Ball(0.0, 3), NumericError);
  CHECK_THROWS_AS(L1Ball(-1.0, 3), NumericError);
}

TEST_CASE("lmo matches vertex enumeration on random directions") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> dims(1, 10);
  std::uniform_real_distribution<double> radii(0.1, 50.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = dims(rng);
    const double radius = radii(rng);
    Eigen::VectorXd g(d);
    for (int j = 0; j < d; ++j) g(j) = normal(rng);
    const auto u = lmo_l1(g, radius);
    CHECK(std::abs(u.dot(g) - vertex_minimum(g, radius)) <= 1e-12);
    CHECK(contains_l1(Eigen::VectorXd(u), radius, 1e-12));
  }
}

TEST_CASE("lmo output is globally minimal against random feasible points") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  const L1Ball ball(3.0, 6);
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::VectorXd g(6), x(6);
    for (int j = 0; j < 6; ++j) {
      g(j) = normal(rng);
      x(j) = normal(rng);
    }
    x *= 3.0 / x.lpNorm<1>() * std::abs(normal(rng)) / (1.0 + std::abs(normal(rng)));
    if (!ball.contains(x, 0.0)) continue;
    CHECK(ball.lmo(g).dot(g) <= x.dot(g) + 1e-12);
  }
}

TEST_CASE("convex combinations with vertices stay feasible") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = 20.0;
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::VectorXd x(8), g(8);
    for (int j = 0; j < 8; ++j) {
      x(j) = normal(rng);
      g(j) = normal(rng);
    }
    x *= radius * unit(rng) / x.lpNorm<1>();
    const double gamma = unit(rng);
    Eigen::VectorXd next = (1.0 - gamma) * x;
    next += gamma * lmo_l1(g, radius);
    CHECK(contains_l1(next, radius, 1e-9));
  }
}

TEST_CASE("lmo is invariant under positive scaling of the direction") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> scales(1e-3, 1e3);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::VectorXd g(7);
    for (int j = 0; j < 7; ++j) g(j) = normal(rng);
    const double c = scales(rng);
    CHECK(Eigen::VectorXd(lmo_l1(g, 2.0)) == Eigen::VectorXd(lmo_l1((c * g).eval(), 2.0)));
  }
}

TEST_CASE("lmo templates work for float") {
  Eigen::VectorXf g(3);
  g << 1.0f, -4.0f, 2.0f;
  const auto u = lmo_l1(g, 2.0f);
  CHECK(u.coeff(1) == 2.0f);
}
