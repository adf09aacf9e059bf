#pragma once

#include <functional>
#include <vector>

#include "bilev/convex_function.hpp"
#include "bilev/convex_set.hpp"
#include "bilev/types.hpp"

namespace bilev {

// Brute-force grid oracles.  Slow by design: they exist to cross-check the
// analytic oracles and the solvers on small problems, not to be fast.

struct GridSpec {
  Vector lo;
  Vector hi;
  double spacing = 0.01;

  // Number of samples per coordinate and in total (throws above 1e7 points).
  std::vector<long> shape() const;
  long size() const;
};

// Visits every grid point once, in row-major order.
void for_each_grid_point(const GridSpec& grid,
                         const std::function<void(const Vector&)>& fn);

// Grid points inside C whose f-value is within `band` of the grid minimum.
std::vector<Vector> grid_argmin(const ConvexFunction& f, const ConvexSet& C,
                                const GridSpec& grid, double band);

// Grid points x in C with min_{y in C∩grid} <F(x), y - x> >= -tol, i.e.
// approximate solutions of the variational inequality for the operator
// given by `F` (passed as a plain callable to avoid a dependency cycle).
std::vector<Vector> grid_sol_vi(const std::function<Vector(const Vector&)>& F,
                                const ConvexSet& C, const GridSpec& grid,
                                double tol);

// Checks the eps-subgradient inequality f(y) >= f(x) + <v,y-x> - eps at
// every grid point y.
bool raw_eps_check(const ConvexFunction& f, const Vector& x, const Vector& v,
                   double eps, const GridSpec& grid);

}  // namespace bilev
