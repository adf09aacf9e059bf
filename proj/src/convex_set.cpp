#include "bilev/convex_set.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <variant>

namespace bilev {
namespace {

constexpr double kDykstraTol = 1e-10;
constexpr long kDykstraSweepCap = 100000;
constexpr double kDirTol = 1e-11;  // collinearity tolerance for halfspaces

struct BoxData {
  Vector lo, hi;
};
struct BallData {
  Vector center;
  double radius;
};
struct SimplexData {
  int dim;
  double scale;
};
struct HalfspaceData {
  Vector a;
  double b;
};
struct IntersectionData {
  std::vector<ConvexSet> members;
};

using Payload = std::variant<BoxData, BallData, SimplexData, HalfspaceData,
                             IntersectionData>;

}  // namespace

struct ConvexSet::Impl {
  Kind kind;
  int dim;
  Payload data;
};

ConvexSet::ConvexSet(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

ConvexSet ConvexSet::box(Vector lo, Vector hi) {
  if (lo.size() == 0 || lo.size() != hi.size())
    throw std::invalid_argument("box: bound dimension mismatch");
  for (long i = 0; i < lo.size(); ++i) {
    if (!(lo[i] <= hi[i])) throw std::invalid_argument("box: lo > hi");
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Box;
  impl->dim = int(lo.size());
  impl->data = BoxData{std::move(lo), std::move(hi)};
  return ConvexSet(std::move(impl));
}

ConvexSet ConvexSet::ball(Vector center, double radius) {
  if (center.size() == 0) throw std::invalid_argument("ball: empty center");
  if (!(radius >= 0.0)) throw std::invalid_argument("ball: negative radius");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Ball;
  impl->dim = int(center.size());
  impl->data = BallData{std::move(center), radius};
  return ConvexSet(std::move(impl));
}

ConvexSet ConvexSet::simplex(int dim, double scale) {
  if (dim <= 0) throw std::invalid_argument("simplex: bad dimension");
  if (!(scale > 0.0)) throw std::invalid_argument("simplex: scale must be > 0");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Simplex;
  impl->dim = dim;
  impl->data = SimplexData{dim, scale};
  return ConvexSet(std::move(impl));
}

ConvexSet ConvexSet::halfspace(Vector a, double b) {
  if (a.size() == 0 || a.norm() == 0.0)
    throw std::invalid_argument("halfspace: zero normal");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Halfspace;
  impl->dim = int(a.size());
  impl->data = HalfspaceData{std::move(a), b};
  return ConvexSet(std::move(impl));
}

ConvexSet ConvexSet::intersection(std::vector<ConvexSet> members) {
  if (members.empty()) throw std::invalid_argument("intersection: no members");
  const int n = members.front().dim();
  for (const ConvexSet& s : members) {
    if (s.dim() != n)
      throw std::invalid_argument("intersection: dimension mismatch");
    if (s.kind() == Kind::Intersection)
      throw std::invalid_argument("intersection: nesting not supported");
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Intersection;
  impl->dim = n;
  impl->data = IntersectionData{std::move(members)};
  return ConvexSet(std::move(impl));
}

ConvexSet::Kind ConvexSet::kind() const { return impl_->kind; }
int ConvexSet::dim() const { return impl_->dim; }

namespace {

void check_dim(const ConvexSet& C, const Vector& x, const char* op) {
  if (int(x.size()) != C.dim())
    throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}

Vector project_simplex(const Vector& x, double scale) {
  // Sort-and-threshold: the unique theta with sum max(x - theta, 0) = scale.
  std::vector<double> u(x.data(), x.data() + x.size());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = (std::accumulate(u.begin(), u.end(), 0.0) - scale) /
                 double(u.size());
  for (size_t i = 0; i < u.size(); ++i) {
    cumsum += u[i];
    const double t = (cumsum - scale) / double(i + 1);
    if (i + 1 == u.size() || u[i + 1] <= t) {
      theta = t;
      break;
    }
  }
  return (x.array() - theta).max(0.0).matrix();
}

}  // namespace

Vector ConvexSet::project(const Vector& x) const {
  check_dim(*this, x, "project");
  switch (impl_->kind) {
    case Kind::Box: {
      const auto& d = std::get<BoxData>(impl_->data);
      return x.cwiseMax(d.lo).cwiseMin(d.hi);
    }
    case Kind::Ball: {
      const auto& d = std::get<BallData>(impl_->data);
      const Vector diff = x - d.center;
      const double norm = diff.norm();
      if (norm <= d.radius) return x;
      if (norm == 0.0) return d.center;
      return d.center + (d.radius / norm) * diff;
    }
    case Kind::Simplex: {
      const auto& d = std::get<SimplexData>(impl_->data);
      return project_simplex(x, d.scale);
    }
    case Kind::Halfspace: {
      const auto& d = std::get<HalfspaceData>(impl_->data);
      const double excess = d.a.dot(x) - d.b;
      if (excess <= 0.0) return x;
      return x - (excess / d.a.squaredNorm()) * d.a;
    }
    case Kind::Intersection: {
      // Dykstra's alternating projections with per-member corrections.
      const auto& members = std::get<IntersectionData>(impl_->data).members;
      Vector z = x;
      std::vector<Vector> corrections(members.size(),
                                      Vector::Zero(impl_->dim));
      for (long sweep = 0; sweep < kDykstraSweepCap; ++sweep) {
        double change = 0.0;
        for (size_t i = 0; i < members.size(); ++i) {
          const Vector target = z + corrections[i];
          const Vector next = members[i].project(target);
          change = std::max(change, (next - z).norm());
          corrections[i] = target - next;
          z = next;
        }
        if (change <= kDykstraTol) return z;
      }
      throw std::runtime_error(
          "project: Dykstra did not converge within the sweep cap");
    }
  }
  throw std::logic_error("project: bad kind");
}

double ConvexSet::support(const Vector& v) const {
  check_dim(*this, v, "support");
  switch (impl_->kind) {
    case Kind::Box: {
      const auto& d = std::get<BoxData>(impl_->data);
      double total = 0.0;
      for (long i = 0; i < v.size(); ++i)
        total += std::max(d.lo[i] * v[i], d.hi[i] * v[i]);
      return total;
    }
    case Kind::Ball: {
      const auto& d = std::get<BallData>(impl_->data);
      return v.dot(d.center) + d.radius * v.norm();
    }
    case Kind::Simplex: {
      const auto& d = std::get<SimplexData>(impl_->data);
      return d.scale * v.maxCoeff();
    }
    case Kind::Halfspace: {
      // Finite only along nonnegative multiples of the outward normal.
      const auto& d = std::get<HalfspaceData>(impl_->data);
      if (v.norm() == 0.0) return 0.0;
      const double tau = v.dot(d.a) / d.a.squaredNorm();
      if (tau < -kDirTol * v.norm() / d.a.norm()) return kInf;
      if ((v - tau * d.a).norm() > kDirTol * (1.0 + v.norm())) return kInf;
      return std::max(tau, 0.0) * d.b;
    }
    case Kind::Intersection:
      throw std::invalid_argument(
          "support: no exact form for Intersection; use support_bound");
  }
  throw std::logic_error("support: bad kind");
}

double ConvexSet::support_bound(const Vector& v) const {
  if (impl_->kind != Kind::Intersection) return support(v);
  const auto& members = std::get<IntersectionData>(impl_->data).members;
  double best = kInf;
  for (const ConvexSet& s : members) best = std::min(best, s.support(v));
  return best;
}

Vector ConvexSet::support_point(const Vector& v) const {
  check_dim(*this, v, "support_point");
  switch (impl_->kind) {
    case Kind::Box: {
      const auto& d = std::get<BoxData>(impl_->data);
      Vector out(impl_->dim);
      for (long i = 0; i < v.size(); ++i)
        out[i] = v[i] >= 0.0 ? d.hi[i] : d.lo[i];
      return out;
    }
    case Kind::Ball: {
      const auto& d = std::get<BallData>(impl_->data);
      const double norm = v.norm();
      if (norm == 0.0) return d.center;
      return d.center + (d.radius / norm) * v;
    }
    case Kind::Simplex: {
      const auto& d = std::get<SimplexData>(impl_->data);
      long arg = 0;
      v.maxCoeff(&arg);
      Vector out = Vector::Zero(impl_->dim);
      out[arg] = d.scale;
      return out;
    }
    case Kind::Halfspace:
    case Kind::Intersection:
      throw std::invalid_argument(
          "support_point: available only for Box, Ball and Simplex");
  }
  throw std::logic_error("support_point: bad kind");
}

double ConvexSet::distance(const Vector& x) const {
  return (x - project(x)).norm();
}

bool ConvexSet::contains(const Vector& x, double tol) const {
  return distance(x) <= tol;
}

bool ConvexSet::bounded() const {
  switch (impl_->kind) {
    case Kind::Box:
    case Kind::Ball:
    case Kind::Simplex:
      return true;
    case Kind::Halfspace:
      return false;
    case Kind::Intersection: {
      const auto& members = std::get<IntersectionData>(impl_->data).members;
      for (const ConvexSet& s : members)
        if (s.bounded()) return true;
      return false;
    }
  }
  throw std::logic_error("bounded: bad kind");
}

double ConvexSet::radius_bound() const {
  switch (impl_->kind) {
    case Kind::Box: {
      const auto& d = std::get<BoxData>(impl_->data);
      return d.lo.cwiseAbs().cwiseMax(d.hi.cwiseAbs()).norm();
    }
    case Kind::Ball: {
      const auto& d = std::get<BallData>(impl_->data);
      return d.center.norm() + d.radius;
    }
    case Kind::Simplex:
      return std::get<SimplexData>(impl_->data).scale;
    case Kind::Halfspace:
      return kInf;
    case Kind::Intersection: {
      const auto& members = std::get<IntersectionData>(impl_->data).members;
      double best = kInf;
      for (const ConvexSet& s : members)
        best = std::min(best, s.radius_bound());
      return best;
    }
  }
  throw std::logic_error("radius_bound: bad kind");
}

const Vector& ConvexSet::box_lo() const {
  return std::get<BoxData>(impl_->data).lo;
}
const Vector& ConvexSet::box_hi() const {
  return std::get<BoxData>(impl_->data).hi;
}
const Vector& ConvexSet::ball_center() const {
  return std::get<BallData>(impl_->data).center;
}
double ConvexSet::ball_radius() const {
  return std::get<BallData>(impl_->data).radius;
}
double ConvexSet::simplex_scale() const {
  return std::get<SimplexData>(impl_->data).scale;
}
const Vector& ConvexSet::halfspace_normal() const {
  return std::get<HalfspaceData>(impl_->data).a;
}
double ConvexSet::halfspace_offset() const {
  return std::get<HalfspaceData>(impl_->data).b;
}
const std::vector<ConvexSet>& ConvexSet::members() const {
  return std::get<IntersectionData>(impl_->data).members;
}

double eps_normal_residual(const ConvexSet& C, const Vector& xbar,
                           const Vector& v) {
  if (int(xbar.size()) != C.dim() || int(v.size()) != C.dim())
    throw std::invalid_argument("eps_normal_residual: dimension mismatch");
  if (C.distance(xbar) > 1e-9)
    throw std::invalid_argument("eps_normal_residual: xbar is not in C");
  const double sup = C.support_bound(v);
  if (sup == kInf) return kInf;
  return std::max(0.0, sup - v.dot(xbar));
}

}  // namespace bilev
