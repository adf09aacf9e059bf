#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <stdexcept>

#include "bilev/operators.hpp"

using bilev::ConvexFunction;
using bilev::Matrix;
using bilev::MonotoneOperator;
using bilev::Vector;

namespace {

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

}  // namespace

TEST_CASE("affine operators evaluate M x + q") {
  const auto F = MonotoneOperator::affine(Matrix::Identity(2, 2),
                                          vec2(0.5, -0.5));
  CHECK((F(vec2(3.0, 4.0)) - vec2(3.5, 3.5)).norm() == 0.0);
  CHECK(F.dim() == 2);
  CHECK(F.lipschitz() == Catch::Approx(1.0));
  CHECK_FALSE(F.is_zero());

  const auto rot = MonotoneOperator::affine(mat2(0.0, 1.0, -1.0, 0.0),
                                            Vector::Zero(2));
  CHECK((rot(vec2(1.0, 0.0)) - vec2(0.0, -1.0)).norm() == 0.0);
}

TEST_CASE("gradient operators expose the quadratic's affine form") {
  Matrix Q(2, 2);
  Q << 2.0, 0.5, 0.5, 1.0;
  const auto phi = ConvexFunction::quadratic(Q, vec2(1.0, -1.0), 0.3);
  const auto F = MonotoneOperator::gradient(phi);
  CHECK(F.kind() == MonotoneOperator::Kind::Gradient);
  const Vector x = vec2(0.4, -0.2);
  CHECK((F(x) - (Q * x + vec2(1.0, -1.0))).norm() < 1e-14);
  const auto [M, q] = F.affine_form();
  CHECK((M - Q).norm() < 1e-14);
  CHECK((q - vec2(1.0, -1.0)).norm() < 1e-14);

  const auto zero = MonotoneOperator::gradient(ConvexFunction::zero(2));
  CHECK(zero.is_zero());

  CHECK_THROWS_AS(MonotoneOperator::gradient(
                      ConvexFunction::norm2(Vector::Zero(2), 1.0)),
                  std::invalid_argument);
}

TEST_CASE("construction rejects non-monotone matrices") {
  CHECK_THROWS_AS(MonotoneOperator::affine(-Matrix::Identity(2, 2),
                                           Vector::Zero(2)),
                  std::invalid_argument);
  // Skew matrices are monotone (zero symmetric part), so they are accepted.
  CHECK_NOTHROW(MonotoneOperator::affine(mat2(0.0, 1.0, -1.0, 0.0),
                                         Vector::Zero(2)));
}

TEST_CASE("monotone-plus classification") {
  // Rotation: <F(x)-F(y), x-y> = 0 for all pairs but F is injective, so the
  // implication fails.
  const auto rot = MonotoneOperator::affine(mat2(0.0, 1.0, -1.0, 0.0),
                                            Vector::Zero(2));
  CHECK_FALSE(bilev::check_monotone_plus(rot));

  // Rank-one PSD: the symmetric-part kernel is also the kernel of M.
  const auto r1 = MonotoneOperator::affine(mat2(1.0, -1.0, -1.0, 1.0),
                                           Vector::Zero(2));
  CHECK(bilev::check_monotone_plus(r1));

  CHECK(bilev::check_monotone_plus(
      MonotoneOperator::affine(Matrix::Identity(2, 2), Vector::Zero(2))));

  // Gradients of convex functions are always monotone plus.
  Matrix Q(2, 2);
  Q << 1.0, 0.0, 0.0, 0.0;
  CHECK(bilev::check_monotone_plus(MonotoneOperator::gradient(
      ConvexFunction::quadratic(Q, Vector::Zero(2), 0.0))));

  // PSD-plus-skew mix whose symmetric kernel is sheared: d = (0,1) has
  // <Md, d> = 0 but M d != 0.
  const auto mixed = MonotoneOperator::affine(mat2(1.0, 1.0, -1.0, 0.0),
                                              Vector::Zero(2));
  CHECK_FALSE(bilev::check_monotone_plus(mixed));
}

TEST_CASE("operators are monotone on random pairs") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> sym(-2.0, 2.0);
  const auto ops = {
      MonotoneOperator::affine(mat2(1.0, -1.0, -1.0, 1.0), vec2(0.3, 0.0)),
      MonotoneOperator::affine(mat2(0.0, 1.0, -1.0, 0.0), Vector::Zero(2)),
      MonotoneOperator::gradient(ConvexFunction::quadratic(
          mat2(2.0, 0.5, 0.5, 1.0), vec2(-1.0, 0.5), 0.0)),
  };
  for (const auto& F : ops) {
    for (int trial = 0; trial < 200; ++trial) {
      const Vector x = vec2(sym(rng), sym(rng));
      const Vector y = vec2(sym(rng), sym(rng));
      CHECK((F(x) - F(y)).dot(x - y) >= -1e-9);
    }
  }
}
