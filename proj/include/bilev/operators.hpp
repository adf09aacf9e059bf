#pragma once

#include <memory>
#include <utility>

#include "bilev/convex_function.hpp"
#include "bilev/types.hpp"

namespace bilev {

// Single-valued monotone operators on R^n:
//   affine    F(x) = M x + q, with (M + M')/2 PSD (validated at construction)
//   gradient  F = grad(phi) for a smooth catalog function (affine/quadratic)
//
// Both variants are affine maps; affine_form() exposes (M, q) uniformly.
class MonotoneOperator {
 public:
  enum class Kind { Affine, Gradient };

  static MonotoneOperator affine(Matrix M, Vector q);
  static MonotoneOperator gradient(ConvexFunction phi);

  Kind kind() const;
  int dim() const;

  Vector operator()(const Vector& x) const;

  // Spectral norm of M (Lipschitz constant of F).
  double lipschitz() const;
  std::pair<Matrix, Vector> affine_form() const;
  bool is_zero() const;

 private:
  struct Impl;
  explicit MonotoneOperator(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

// Monotone-plus test: <F(x)-F(y), x-y> = 0 must force F(x) = F(y).  For an
// affine operator this holds iff M d = 0 for every null-space direction d of
// the symmetric part; gradients of convex functions always pass.
bool check_monotone_plus(const MonotoneOperator& F);

}  // namespace bilev
