#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "bilev/types.hpp"

namespace bilev {

// Structured convex functions with exact value, subgradient and conjugate
// oracles.  Instances are immutable and cheap to copy (internals are shared),
// so they can be passed around by value and used concurrently.
//
// Catalog:
//   affine      a'x + b
//   quadratic   x'Qx/2 + c'x + r          (Q symmetric PSD)
//   norm2       w * |x - p|               (w >= 0)
//   max_affine  max_i(a_i'x + b_i)
//   sum         sum_i w_i f_i             (w_i >= 0)
class ConvexFunction {
 public:
  enum class Kind { Affine, Quadratic, Norm2, MaxAffine, Sum };

  static ConvexFunction affine(Vector a, double b);
  static ConvexFunction quadratic(Matrix Q, Vector c, double r);
  static ConvexFunction norm2(Vector center, double weight);
  // One slope vector and one offset per piece; at least one piece.
  static ConvexFunction max_affine(std::vector<Vector> slopes, Vector offsets);
  static ConvexFunction sum(std::vector<std::pair<double, ConvexFunction>> terms);
  // Convenience: the zero function as an affine piece.
  static ConvexFunction zero(int dim);

  Kind kind() const;
  int dim() const;

  double value(const Vector& x) const;

  // Deterministic exact subgradient selection: gradient where smooth, the
  // lowest-index active piece for max_affine, zero at the norm2 kink.
  Vector subgradient(const Vector& x) const;

  // Fenchel conjugate f*(v); +inf outside dom f*.  Rejects Sum (use the
  // decomposition form of eps_subgrad_residual instead).
  double conjugate(const Vector& v) const;

  bool is_smooth() const;          // every leaf affine or quadratic
  double curvature_bound() const;  // Lipschitz bound on the gradient when smooth

  // Accessors for the leaf payloads (valid only for the matching kind).
  const Vector& affine_slope() const;
  double affine_offset() const;
  const Matrix& quad_matrix() const;
  const Vector& quad_linear() const;
  double quad_constant() const;
  // Eigendecomposition of Q, cached at construction (ascending eigenvalues).
  const Vector& quad_eigenvalues() const;
  const Matrix& quad_eigenvectors() const;
  const Vector& norm2_center() const;
  double norm2_weight() const;
  const std::vector<Vector>& max_affine_slopes() const;
  const Vector& max_affine_offsets() const;
  const std::vector<std::pair<double, ConvexFunction>>& sum_terms() const;

 private:
  struct Impl;
  explicit ConvexFunction(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

// Weighted leaves of the Sum tree, depth first, weights multiplied out.
// Returns {(1, f)} when f itself is a leaf.
std::vector<std::pair<double, ConvexFunction>> flatten(const ConvexFunction& f);

// Smallest eps such that v lies in the eps-subdifferential of f at x,
// computed as the Fenchel-Young residual f(x) + f*(v) - <v,x> and clamped
// below at zero.  +inf when v is outside dom f*.  Rejects Sum.
double eps_subgrad_residual(const ConvexFunction& f, const Vector& x,
                            const Vector& v);

// Decomposition form, required for Sum: one candidate per flatten() leaf.
// Returns sum_i w_i * resid(leaf_i, x, v_i), which certifies sum_i w_i v_i
// as an eps-subgradient of f at x.
double eps_subgrad_residual(const ConvexFunction& f, const Vector& x,
                            const std::vector<Vector>& leaf_candidates);

}  // namespace bilev
