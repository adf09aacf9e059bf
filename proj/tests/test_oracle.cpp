#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bilev/oracle.hpp"

using bilev::ConvexFunction;
using bilev::ConvexSet;
using bilev::GridSpec;
using bilev::Matrix;
using bilev::Vector;

namespace {

Vector vec1(double a) {
  Vector v(1);
  v << a;
  return v;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

GridSpec grid2d(double lo, double hi, double spacing) {
  GridSpec g;
  g.lo = vec2(lo, lo);
  g.hi = vec2(hi, hi);
  g.spacing = spacing;
  return g;
}

}  // namespace

TEST_CASE("grid shape and enumeration") {
  GridSpec g;
  g.lo = vec2(0.0, 0.0);
  g.hi = vec2(1.0, 0.5);
  g.spacing = 0.5;
  const auto shape = g.shape();
  REQUIRE(shape.size() == 2);
  CHECK(shape[0] == 3);
  CHECK(shape[1] == 2);
  CHECK(g.size() == 6);

  long count = 0;
  Vector first, last;
  bilev::for_each_grid_point(g, [&](const Vector& p) {
    if (count == 0) first = p;
    last = p;
    ++count;
  });
  CHECK(count == 6);
  CHECK((first - vec2(0.0, 0.0)).norm() < 1e-12);
  CHECK((last - vec2(1.0, 0.5)).norm() < 1e-12);

  GridSpec huge;
  huge.lo = vec2(0.0, 0.0);
  huge.hi = vec2(100.0, 100.0);
  huge.spacing = 0.001;
  CHECK_THROWS(huge.size());
}

TEST_CASE("grid argmin finds the flat valley of (x1-1)^2") {
  Matrix Q(2, 2);
  Q << 2.0, 0.0, 0.0, 0.0;
  const auto g = ConvexFunction::quadratic(Q, vec2(-2.0, 0.0), 1.0);
  const auto C = ConvexSet::box(vec2(-2.0, -2.0), vec2(2.0, 2.0));
  const auto pts = bilev::grid_argmin(g, C, grid2d(-2.0, 2.0, 0.01), 1e-4);
  REQUIRE_FALSE(pts.empty());
  // Only x1 in {0.99, 1.0, 1.01} clears the band, for every x2 column.
  CHECK(pts.size() == 3 * 401);
  for (const auto& p : pts) CHECK(std::abs(p[0] - 1.0) <= 0.01 + 1e-12);
}

TEST_CASE("grid argmin with zero band and a strict minimizer is a singleton") {
  const auto f = ConvexFunction::quadratic(Matrix::Identity(2, 2),
                                           vec2(-0.5, -0.5), 0.0);
  const auto C = ConvexSet::box(vec2(-1.0, -1.0), vec2(1.0, 1.0));
  const auto pts = bilev::grid_argmin(f, C, grid2d(-1.0, 1.0, 0.1), 0.0);
  REQUIRE(pts.size() == 1);
  CHECK((pts[0] - vec2(0.5, 0.5)).norm() < 1e-12);
}

TEST_CASE("grid argmin of a constant keeps every feasible point") {
  const auto f = ConvexFunction::affine(vec2(0.0, 0.0), 3.0);
  const auto C = ConvexSet::ball(vec2(0.0, 0.0), 0.5);
  const auto pts = bilev::grid_argmin(f, C, grid2d(-1.0, 1.0, 0.25), 0.0);
  for (const auto& p : pts) CHECK(C.contains(p));
  CHECK(pts.size() == 13);  // lattice points of the 0.5-ball at 0.25 pitch
}

TEST_CASE("grid VI solutions for F(x) = x on a segment cluster at zero") {
  GridSpec g;
  g.lo = vec1(-1.0);
  g.hi = vec1(1.0);
  g.spacing = 0.01;
  const auto C = ConvexSet::box(vec1(-1.0), vec1(1.0));
  const auto sols = bilev::grid_sol_vi(
      [](const Vector& x) { return x; }, C, g, 1e-3);
  REQUIRE_FALSE(sols.empty());
  for (const auto& p : sols) CHECK(std::abs(p[0]) <= 0.011);
}

TEST_CASE("grid VI solutions of the rank-one operator trace the diagonal") {
  Matrix M(2, 2);
  M << 1.0, -1.0, -1.0, 1.0;
  const auto C = ConvexSet::box(vec2(0.0, 0.0), vec2(1.0, 1.0));
  const auto sols = bilev::grid_sol_vi(
      [&](const Vector& x) { return Vector(M * x); }, C,
      grid2d(0.0, 1.0, 0.05), 1e-3);
  REQUIRE_FALSE(sols.empty());
  for (const auto& p : sols) CHECK(std::abs(p[0] - p[1]) <= 0.051);
}

TEST_CASE("zero operator solves the VI everywhere") {
  const auto C = ConvexSet::box(vec2(0.0, 0.0), vec2(1.0, 1.0));
  const auto g = grid2d(0.0, 1.0, 0.5);
  const auto sols = bilev::grid_sol_vi(
      [](const Vector& x) { return Vector(Vector::Zero(x.size())); }, C, g,
      1e-9);
  CHECK(long(sols.size()) == g.size());
}

TEST_CASE("raw eps-subgradient check matches hand computations") {
  const auto half_sq =
      ConvexFunction::quadratic(Matrix::Identity(1, 1), Vector::Zero(1), 0.0);
  GridSpec g;
  g.lo = vec1(-2.0);
  g.hi = vec1(2.0);
  g.spacing = 0.001;

  // True subgradient passes with a tiny budget.
  CHECK(bilev::raw_eps_check(half_sq, vec1(1.0), vec1(1.0), 1e-9, g));
  // v = 0.2 at x = 0 is exactly a 0.02-subgradient.
  CHECK(bilev::raw_eps_check(half_sq, vec1(0.0), vec1(0.2), 0.02, g));
  CHECK_FALSE(bilev::raw_eps_check(half_sq, vec1(0.0), vec1(0.2), 0.005, g));
  // Far-off slope fails even with a loose budget.
  CHECK_FALSE(bilev::raw_eps_check(half_sq, vec1(0.0), vec1(5.0), 0.1, g));
}

TEST_CASE("raw check agrees with the conjugate residual up to grid error") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  const auto f = ConvexFunction::max_affine(
      {vec2(1.0, 0.0), vec2(-1.0, 1.0), vec2(0.0, -1.0)}, Vector::Zero(3));
  GridSpec g = grid2d(-2.0, 2.0, 0.02);
  // Grid discretization slack: spacing times a Lipschitz bound of the
  // linearization error.
  const double slack = 0.02 * 4.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = vec2(sym(rng), sym(rng));
    const Vector v = vec2(sym(rng), sym(rng));
    const double resid = bilev::eps_subgrad_residual(f, x, v);
    if (!std::isfinite(resid)) continue;
    CHECK(bilev::raw_eps_check(f, x, v, resid + 1e-9, g));
    if (resid > slack)
      CHECK_FALSE(bilev::raw_eps_check(f, x, v, resid - slack, g));
  }
}
