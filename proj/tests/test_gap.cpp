#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

#include "bilev/gap.hpp"

using bilev::ConvexFunction;
using bilev::ConvexSet;
using bilev::GapOptions;
using bilev::Matrix;
using bilev::MonotoneOperator;
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

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

MonotoneOperator identity1d() {
  return MonotoneOperator::affine(Matrix::Identity(1, 1), Vector::Zero(1));
}

}  // namespace

TEST_CASE("dual gap of the identity on a segment") {
  const auto C = ConvexSet::box(vec1(-1.0), vec1(1.0));
  const auto at0 = bilev::dual_gap(identity1d(), C, vec1(0.0));
  CHECK(at0.value == Catch::Approx(0.0).margin(1e-9));

  // g_D(1) = sup_y y(1-y) = 1/4 at y = 1/2.
  const auto at1 = bilev::dual_gap(identity1d(), C, vec1(1.0));
  CHECK(at1.value == Catch::Approx(0.25).margin(1e-7));
  CHECK(at1.maximizer[0] == Catch::Approx(0.5).margin(1e-3));

  CHECK(bilev::gap_subgradient(identity1d(), C, vec1(1.0))[0] ==
        Catch::Approx(0.5).margin(1e-3));
}

TEST_CASE("skew operators reduce to a single support evaluation") {
  // F(x) = (-x2, x1): <F(y), x - y> = y1 x2 - y2 x1, so the gap on the unit
  // box is |x1| + |x2|, computed exactly.
  const auto F = MonotoneOperator::affine(mat2(0.0, -1.0, 1.0, 0.0),
                                          Vector::Zero(2));
  const auto C = ConvexSet::box(vec2(-1.0, -1.0), vec2(1.0, 1.0));
  const auto r = bilev::dual_gap(F, C, vec2(0.3, -0.4));
  CHECK(r.value == Catch::Approx(0.7).margin(1e-12));
  CHECK(r.tol == 0.0);

  std::mt19937 rng(29);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = vec2(sym(rng), sym(rng));
    const double g = bilev::dual_gap(F, C, x).value;
    CHECK(g == Catch::Approx(std::abs(x[0]) + std::abs(x[1])).margin(1e-9));
  }
}

TEST_CASE("gap properties: nonnegative, convex, Danskin directions") {
  Matrix M = mat2(1.0, -1.0, -1.0, 1.0);
  const auto F = MonotoneOperator::affine(M, vec2(0.2, 0.0));
  const auto C = ConvexSet::box(vec2(0.0, 0.0), vec2(1.0, 1.0));
  GapOptions opt;
  opt.tol = 1e-8;

  std::mt19937 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const Vector x = vec2(unit(rng), unit(rng));
    const Vector z = vec2(unit(rng), unit(rng));
    const double gx = bilev::dual_gap(F, C, x, opt).value;
    const double gz = bilev::dual_gap(F, C, z, opt).value;
    CHECK(gx >= -1e-12);

    // Midpoint convexity with tolerance spill.
    const Vector mid = (x + z) / 2.0;
    const double gm = bilev::dual_gap(F, C, mid, opt).value;
    CHECK(gm <= gx / 2.0 + gz / 2.0 + 2e-8);

    // Danskin: F at the maximizer is an approximate subgradient at x.
    const Vector w = bilev::gap_subgradient(F, C, x, opt);
    CHECK(gz >= gx + w.dot(z - x) - 3e-8);
  }
}

TEST_CASE("gap rejects non-affine operators and unbounded directions") {
  const auto C = ConvexSet::halfspace(vec1(1.0), 1.0);
  // The ascent direction at the boundary has infinite support.
  CHECK_THROWS_AS(bilev::dual_gap(identity1d(), C, vec1(1.0)),
                  std::invalid_argument);

  const auto grad_op = MonotoneOperator::gradient(ConvexFunction::quadratic(
      Matrix::Identity(1, 1), Vector::Zero(1), 0.0));
  CHECK_THROWS_AS(
      bilev::dual_gap(grad_op, ConvexSet::box(vec1(-1.0), vec1(1.0)),
                      vec1(0.0)),
      std::invalid_argument);
}

TEST_CASE("projected ascent handles intersection constraints") {
  // Lens = box cap halfspace; the gap of the identity at an interior solution
  // candidate stays near zero, at infeasible points it grows.
  const auto C =
      ConvexSet::intersection({ConvexSet::box(vec2(-1.0, -1.0), vec2(1.0, 1.0)),
                               ConvexSet::halfspace(vec2(1.0, 0.0), 0.5)});
  const auto F = MonotoneOperator::affine(Matrix::Identity(2, 2),
                                          Vector::Zero(2));
  GapOptions opt;
  opt.tol = 1e-6;
  const double g0 = bilev::dual_gap(F, C, vec2(0.0, 0.0), opt).value;
  CHECK(g0 <= 1e-5);
  const double g1 = bilev::dual_gap(F, C, vec2(0.5, 1.0), opt).value;
  CHECK(g1 > 0.1);
}

TEST_CASE("feasibility test for the reformulated constraint system") {
  const auto C = ConvexSet::box(vec1(-1.0), vec1(1.0));
  CHECK(bilev::r_smpec_feasible(identity1d(), C, vec1(0.0)));
  CHECK_FALSE(bilev::r_smpec_feasible(identity1d(), C, vec1(1.0)));
  CHECK_FALSE(bilev::r_smpec_feasible(identity1d(), C, vec1(2.0)));
}

TEST_CASE("multiplier-rule witnesses and checks") {
  const auto f = ConvexFunction::affine(vec2(1.0, 0.0), 0.0);
  const auto C = ConvexSet::box(vec2(0.0, 0.0), vec2(1.0, 1.0));
  const Vector corner = vec2(0.0, 0.0);

  // Exact stationarity: u = (1,0), w = 0, v = -(1,0)/lambda_mult scaled in.
  const auto ok = bilev::make_lmr_witness(f, C, corner, vec2(1.0, 0.0),
                                          Vector::Zero(2), vec2(-1.0, 0.0),
                                          10.0, true);
  CHECK(ok.u_resid <= 1e-12);
  CHECK(ok.v_resid <= 1e-12);
  CHECK(bilev::eps_lmr_check(ok, 1e-6));

  // Residual norm 0.1 fails at eps0 = 0.05.
  const auto off = bilev::make_lmr_witness(f, C, corner, vec2(1.0, 0.0),
                                           Vector::Zero(2), vec2(-0.9, 0.0),
                                           1.0, true);
  CHECK_FALSE(bilev::eps_lmr_check(off, 0.05));
  CHECK(bilev::eps_lmr_check(off, 0.11));

  // Uncertified memberships throw instead of answering.
  const auto bogus = bilev::make_lmr_witness(f, C, corner, vec2(0.5, 0.0),
                                             Vector::Zero(2), Vector::Zero(2),
                                             1.0, true);
  CHECK(bogus.u_resid > 1e-9);
  CHECK_THROWS_AS(bilev::eps_lmr_check(bogus, 0.5), std::logic_error);

  // Sum upper objectives certify through the leaf decomposition.
  const auto fsum =
      ConvexFunction::sum({{2.0, ConvexFunction::affine(vec2(1.0, 0.0), 0.0)},
                           {1.0, ConvexFunction::norm2(corner, 1.0)}});
  const std::vector<Vector> leaves = {vec2(1.0, 0.0), vec2(0.0, 0.0)};
  const auto viasum = bilev::make_lmr_witness(fsum, C, corner, vec2(2.0, 0.0),
                                              Vector::Zero(2), vec2(-2.0, 0.0),
                                              1.0, true, &leaves);
  CHECK(viasum.u_resid <= 1e-12);
  CHECK(bilev::eps_lmr_check(viasum, 1e-6));
}

TEST_CASE("step-based stopping rule thresholds") {
  CHECK_FALSE(bilev::step_stop_check(vec1(0.0), vec1(0.1), 1.0, 0.01, 1.0));
  CHECK(bilev::step_stop_check(vec1(0.0), vec1(0.1), 1.0, 0.01, 10.0));
  CHECK(bilev::step_stop_check(vec1(0.0), vec1(0.0), 1.0, 1e-9, 1e-6));
}

TEST_CASE("penalty stages are recorded and tighten feasibility") {
  // f constant: every stage solves the VI itself, gap near zero throughout.
  Matrix M = mat2(1.0, -1.0, -1.0, 1.0);
  const bilev::SmpecProblem prob{
      ConvexFunction::affine(Vector::Zero(2), 1.0),
      MonotoneOperator::affine(M, Vector::Zero(2)),
      ConvexSet::box(vec2(0.0, 0.0), vec2(1.0, 1.0)), vec2(1.0, 0.2)};
  const auto trace = bilev::penalty_solve(prob, {1e8});
  REQUIRE(trace.records.size() == 1);
  CHECK(trace.kind == bilev::Trace::Kind::Penalty);
  CHECK(trace.records[0].g_or_gap <= 1e-6);
  CHECK_FALSE(trace.records[0].cert.has_value());
  CHECK(trace.records[0].eps == Catch::Approx(1e-8));

  // Doubling schedule drives the iterate to the f-optimal VI solution (0,0).
  const bilev::SmpecProblem tilted{
      ConvexFunction::affine(vec2(1.0, 0.0), 0.0), prob.op, prob.constraint,
      vec2(1.0, 0.2)};
  std::vector<double> mus;
  for (int k = 0; k <= 15; ++k) mus.push_back(std::pow(2.0, k));
  bilev::PenaltyOptions popt;
  popt.inner_tol = 1e-8;
  popt.reference = {vec2(0.0, 0.0)};
  const auto run = bilev::penalty_solve(tilted, mus, popt);
  REQUIRE(run.records.size() == mus.size());
  const auto& last = run.records.back();
  CHECK((last.x - vec2(0.0, 0.0)).norm() < 1e-2);
  REQUIRE(last.dist_to_ref.has_value());
  for (size_t i = 0; i < run.records.size(); ++i) {
    CHECK(run.records[i].eps == Catch::Approx(1.0 / mus[i]));
    CHECK(run.records[i].g_or_gap >= -1e-12);
  }
}

TEST_CASE("penalty input validation") {
  const bilev::SmpecProblem prob{
      ConvexFunction::zero(2),
      MonotoneOperator::affine(mat2(0.0, -1.0, 1.0, 0.0), Vector::Zero(2)),
      ConvexSet::box(vec2(-1.0, -1.0), vec2(1.0, 1.0)), vec2(0.0, 0.0)};
  CHECK_THROWS_AS(bilev::penalty_solve(prob, {1.0}), std::invalid_argument);

  const bilev::SmpecProblem ok{
      ConvexFunction::zero(2),
      MonotoneOperator::affine(Matrix::Identity(2, 2), Vector::Zero(2)),
      ConvexSet::box(vec2(-1.0, -1.0), vec2(1.0, 1.0)), vec2(0.0, 0.0)};
  CHECK_THROWS_AS(bilev::penalty_solve(ok, {}), std::invalid_argument);
  CHECK_THROWS_AS(bilev::penalty_solve(ok, {0.0}), std::invalid_argument);
}
