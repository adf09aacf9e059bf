#pragma once

#include "bilev/types.hpp"

namespace bilev {

// Dense two-phase simplex for small equality-form linear programs,
//
//   minimize    c'x
//   subject to  A x = b,  x >= 0.
//
// Intended for problems with a handful of rows and columns (conjugates of
// max-affine functions); not a general-purpose LP code.
struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status = Status::Infeasible;
  double value = 0.0;
  Vector x;
};

LpResult solve_lp_eq(const Matrix& A, const Vector& b, const Vector& c,
                     double tol = 1e-10);

}  // namespace bilev
