#include "bilev/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace bilev {

namespace {
constexpr long kPointCap = 10000000;
constexpr double kMembershipTol = 1e-9;
}  // namespace

std::vector<long> GridSpec::shape() const {
  if (lo.size() == 0 || lo.size() != hi.size())
    throw std::invalid_argument("GridSpec: bound dimension mismatch");
  if (!(spacing > 0.0)) throw std::invalid_argument("GridSpec: spacing <= 0");
  std::vector<long> counts;
  for (long i = 0; i < lo.size(); ++i) {
    if (!(lo[i] <= hi[i])) throw std::invalid_argument("GridSpec: lo > hi");
    counts.push_back(long(std::floor((hi[i] - lo[i]) / spacing + 0.5)) + 1);
  }
  return counts;
}

long GridSpec::size() const {
  long total = 1;
  for (long c : shape()) {
    if (total > kPointCap / c)
      throw std::invalid_argument("GridSpec: more than 1e7 points");
    total *= c;
  }
  return total;
}

void for_each_grid_point(const GridSpec& grid,
                         const std::function<void(const Vector&)>& fn) {
  const std::vector<long> counts = grid.shape();
  grid.size();  // enforce the point cap
  const long n = grid.lo.size();
  std::vector<long> idx(size_t(n), 0);
  Vector point(n);
  for (;;) {
    for (long i = 0; i < n; ++i)
      point[i] = grid.lo[i] + double(idx[size_t(i)]) * grid.spacing;
    fn(point);
    long axis = n - 1;
    while (axis >= 0 && ++idx[size_t(axis)] == counts[size_t(axis)]) {
      idx[size_t(axis)] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
}

std::vector<Vector> grid_argmin(const ConvexFunction& f, const ConvexSet& C,
                                const GridSpec& grid, double band) {
  if (f.dim() != C.dim() || f.dim() != int(grid.lo.size()))
    throw std::invalid_argument("grid_argmin: dimension mismatch");
  double best = kInf;
  std::vector<std::pair<Vector, double>> inside;
  for_each_grid_point(grid, [&](const Vector& p) {
    if (C.distance(p) > kMembershipTol) return;
    const double v = f.value(p);
    inside.emplace_back(p, v);
    best = std::min(best, v);
  });
  std::vector<Vector> out;
  for (const auto& [p, v] : inside) {
    if (v <= best + band) out.push_back(p);
  }
  return out;
}

std::vector<Vector> grid_sol_vi(const std::function<Vector(const Vector&)>& F,
                                const ConvexSet& C, const GridSpec& grid,
                                double tol) {
  if (C.dim() != int(grid.lo.size()))
    throw std::invalid_argument("grid_sol_vi: dimension mismatch");
  std::vector<Vector> inside;
  for_each_grid_point(grid, [&](const Vector& p) {
    if (C.distance(p) <= kMembershipTol) inside.push_back(p);
  });
  std::vector<Vector> out;
  for (const Vector& x : inside) {
    const Vector Fx = F(x);
    double worst = kInf;
    for (const Vector& y : inside) worst = std::min(worst, Fx.dot(y - x));
    if (worst >= -tol) out.push_back(x);
  }
  return out;
}

bool raw_eps_check(const ConvexFunction& f, const Vector& x, const Vector& v,
                   double eps, const GridSpec& grid) {
  if (f.dim() != int(grid.lo.size()) || f.dim() != int(x.size()) ||
      f.dim() != int(v.size()))
    throw std::invalid_argument("raw_eps_check: dimension mismatch");
  const double fx = f.value(x);
  bool ok = true;
  for_each_grid_point(grid, [&](const Vector& y) {
    if (!ok) return;
    if (f.value(y) < fx + v.dot(y - x) - eps) ok = false;
  });
  return ok;
}

}  // namespace bilev
