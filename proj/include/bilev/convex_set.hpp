#pragma once

#include <memory>
#include <vector>

#include "bilev/types.hpp"

namespace bilev {

// Closed convex sets with exact projection and support oracles.  Immutable
// and cheap to copy, like ConvexFunction.
//
// Catalog:
//   box           { lo <= x <= hi }
//   ball          { |x - c| <= r }
//   simplex       { x >= 0, sum x = s }
//   halfspace     { a'x <= b }
//   intersection  of catalog sets (projection via Dykstra)
class ConvexSet {
 public:
  enum class Kind { Box, Ball, Simplex, Halfspace, Intersection };

  static ConvexSet box(Vector lo, Vector hi);
  static ConvexSet ball(Vector center, double radius);
  static ConvexSet simplex(int dim, double scale);
  static ConvexSet halfspace(Vector a, double b);
  static ConvexSet intersection(std::vector<ConvexSet> members);

  Kind kind() const;
  int dim() const;

  // Euclidean projection.  For Intersection this runs Dykstra's alternating
  // scheme to residual 1e-10 (throws on non-convergence within the sweep cap).
  Vector project(const Vector& x) const;

  // Support function sup_{x in C} <v,x>.  +inf along unbounded directions.
  // Throws for Intersection, whose support has no exact closed form here;
  // see support_bound().
  double support(const Vector& v) const;

  // Upper bound on the support: exact for catalog leaves, min over members
  // for Intersection (safe for certificates, which only need an upper bound).
  double support_bound(const Vector& v) const;

  // A maximizer of <v,x> over C (linear maximization oracle).  Available for
  // the compact leaves (Box, Ball, Simplex); throws otherwise.
  Vector support_point(const Vector& v) const;

  double distance(const Vector& x) const;
  bool contains(const Vector& x, double tol = 1e-9) const;

  bool bounded() const;
  // sup_{x in C} |x| for bounded sets; +inf otherwise.
  double radius_bound() const;

  // Accessors (valid only for the matching kind).
  const Vector& box_lo() const;
  const Vector& box_hi() const;
  const Vector& ball_center() const;
  double ball_radius() const;
  double simplex_scale() const;
  const Vector& halfspace_normal() const;
  double halfspace_offset() const;
  const std::vector<ConvexSet>& members() const;

 private:
  struct Impl;
  explicit ConvexSet(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

// Smallest eps such that v lies in the eps-normal set of C at xbar, i.e.
// sigma_C(v) - <v,xbar>, clamped below at zero.  +inf along directions where
// the support is unbounded.  For Intersection the value uses support_bound()
// and is therefore an upper bound on the minimal eps.  Requires xbar in C
// (distance <= 1e-9).
double eps_normal_residual(const ConvexSet& C, const Vector& xbar,
                           const Vector& v);

}  // namespace bilev
