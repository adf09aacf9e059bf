#include "bilev/convex_function.hpp"

#include <cmath>
#include <stdexcept>
#include <variant>

#include "bilev/linprog.hpp"

namespace bilev {
namespace {

constexpr double kEigZeroTol = 1e-10;   // eigenvalue magnitude treated as zero
constexpr double kRangeTol = 1e-11;     // relative range-membership tolerance
constexpr double kDomainTol = 1e-11;    // relative point-domain tolerance

struct AffineData {
  Vector a;
  double b;
};

struct QuadraticData {
  Matrix Q;
  Vector c;
  double r;
  Vector evals;  // ascending
  Matrix evecs;
};

struct Norm2Data {
  Vector p;
  double w;
};

struct MaxAffineData {
  std::vector<Vector> slopes;
  Vector offsets;
};

struct SumData {
  std::vector<std::pair<double, ConvexFunction>> terms;
};

using Payload =
    std::variant<AffineData, QuadraticData, Norm2Data, MaxAffineData, SumData>;

}  // namespace

struct ConvexFunction::Impl {
  Kind kind;
  int dim;
  Payload data;
  bool smooth;
  double curvature;
};

ConvexFunction::ConvexFunction(std::shared_ptr<const Impl> impl)
    : impl_(std::move(impl)) {}

ConvexFunction ConvexFunction::affine(Vector a, double b) {
  if (a.size() == 0) throw std::invalid_argument("affine: empty slope");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Affine;
  impl->dim = int(a.size());
  impl->smooth = true;
  impl->curvature = 0.0;
  impl->data = AffineData{std::move(a), b};
  return ConvexFunction(std::move(impl));
}

ConvexFunction ConvexFunction::quadratic(Matrix Q, Vector c, double r) {
  const int n = int(c.size());
  if (Q.rows() != n || Q.cols() != n)
    throw std::invalid_argument("quadratic: Q/c dimension mismatch");
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("quadratic: Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Q);
  if (eig.info() != Eigen::Success)
    throw std::invalid_argument("quadratic: eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() < -kEigZeroTol)
    throw std::invalid_argument("quadratic: Q must be positive semidefinite");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Quadratic;
  impl->dim = n;
  impl->smooth = true;
  impl->curvature = std::max(0.0, eig.eigenvalues().maxCoeff());
  impl->data = QuadraticData{std::move(Q), std::move(c), r, eig.eigenvalues(),
                             eig.eigenvectors()};
  return ConvexFunction(std::move(impl));
}

ConvexFunction ConvexFunction::norm2(Vector center, double weight) {
  if (center.size() == 0) throw std::invalid_argument("norm2: empty center");
  if (!(weight >= 0.0)) throw std::invalid_argument("norm2: negative weight");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Norm2;
  impl->dim = int(center.size());
  impl->smooth = false;
  impl->curvature = 0.0;
  impl->data = Norm2Data{std::move(center), weight};
  return ConvexFunction(std::move(impl));
}

ConvexFunction ConvexFunction::max_affine(std::vector<Vector> slopes,
                                          Vector offsets) {
  if (slopes.empty()) throw std::invalid_argument("max_affine: no pieces");
  if (long(slopes.size()) != offsets.size())
    throw std::invalid_argument("max_affine: slope/offset count mismatch");
  const int n = int(slopes.front().size());
  for (const Vector& a : slopes) {
    if (int(a.size()) != n)
      throw std::invalid_argument("max_affine: inconsistent slope dimension");
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::MaxAffine;
  impl->dim = n;
  impl->smooth = false;
  impl->curvature = 0.0;
  impl->data = MaxAffineData{std::move(slopes), std::move(offsets)};
  return ConvexFunction(std::move(impl));
}

ConvexFunction ConvexFunction::sum(
    std::vector<std::pair<double, ConvexFunction>> terms) {
  if (terms.empty()) throw std::invalid_argument("sum: no terms");
  const int n = terms.front().second.dim();
  bool smooth = true;
  double curv = 0.0;
  for (const auto& [w, fn] : terms) {
    if (!(w >= 0.0)) throw std::invalid_argument("sum: negative weight");
    if (fn.dim() != n) throw std::invalid_argument("sum: dimension mismatch");
    smooth = smooth && fn.is_smooth();
    curv += w * fn.curvature_bound();
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Sum;
  impl->dim = n;
  impl->smooth = smooth;
  impl->curvature = curv;
  impl->data = SumData{std::move(terms)};
  return ConvexFunction(std::move(impl));
}

ConvexFunction ConvexFunction::zero(int dim) {
  return affine(Vector::Zero(dim), 0.0);
}

ConvexFunction::Kind ConvexFunction::kind() const { return impl_->kind; }
int ConvexFunction::dim() const { return impl_->dim; }
bool ConvexFunction::is_smooth() const { return impl_->smooth; }
double ConvexFunction::curvature_bound() const { return impl_->curvature; }

namespace {

void check_dim(const ConvexFunction& f, const Vector& x, const char* op) {
  if (int(x.size()) != f.dim())
    throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}

}  // namespace

double ConvexFunction::value(const Vector& x) const {
  check_dim(*this, x, "value");
  switch (impl_->kind) {
    case Kind::Affine: {
      const auto& d = std::get<AffineData>(impl_->data);
      return d.a.dot(x) + d.b;
    }
    case Kind::Quadratic: {
      const auto& d = std::get<QuadraticData>(impl_->data);
      return 0.5 * x.dot(d.Q * x) + d.c.dot(x) + d.r;
    }
    case Kind::Norm2: {
      const auto& d = std::get<Norm2Data>(impl_->data);
      return d.w * (x - d.p).norm();
    }
    case Kind::MaxAffine: {
      const auto& d = std::get<MaxAffineData>(impl_->data);
      double best = d.slopes[0].dot(x) + d.offsets[0];
      for (size_t i = 1; i < d.slopes.size(); ++i)
        best = std::max(best, d.slopes[i].dot(x) + d.offsets[long(i)]);
      return best;
    }
    case Kind::Sum: {
      const auto& d = std::get<SumData>(impl_->data);
      double total = 0.0;
      for (const auto& [w, fn] : d.terms) total += w * fn.value(x);
      return total;
    }
  }
  throw std::logic_error("value: bad kind");
}

Vector ConvexFunction::subgradient(const Vector& x) const {
  check_dim(*this, x, "subgradient");
  switch (impl_->kind) {
    case Kind::Affine:
      return std::get<AffineData>(impl_->data).a;
    case Kind::Quadratic: {
      const auto& d = std::get<QuadraticData>(impl_->data);
      return d.Q * x + d.c;
    }
    case Kind::Norm2: {
      const auto& d = std::get<Norm2Data>(impl_->data);
      const Vector diff = x - d.p;
      const double norm = diff.norm();
      if (norm == 0.0) return Vector::Zero(impl_->dim);
      return (d.w / norm) * diff;
    }
    case Kind::MaxAffine: {
      const auto& d = std::get<MaxAffineData>(impl_->data);
      size_t arg = 0;
      double best = d.slopes[0].dot(x) + d.offsets[0];
      for (size_t i = 1; i < d.slopes.size(); ++i) {
        const double v = d.slopes[i].dot(x) + d.offsets[long(i)];
        if (v > best) {  // strict: ties keep the lowest index
          best = v;
          arg = i;
        }
      }
      return d.slopes[arg];
    }
    case Kind::Sum: {
      const auto& d = std::get<SumData>(impl_->data);
      Vector total = Vector::Zero(impl_->dim);
      for (const auto& [w, fn] : d.terms) total += w * fn.subgradient(x);
      return total;
    }
  }
  throw std::logic_error("subgradient: bad kind");
}

double ConvexFunction::conjugate(const Vector& v) const {
  check_dim(*this, v, "conjugate");
  switch (impl_->kind) {
    case Kind::Affine: {
      // dom f* = {a}.
      const auto& d = std::get<AffineData>(impl_->data);
      const double tol = kDomainTol * (1.0 + d.a.norm());
      return (v - d.a).norm() <= tol ? -d.b : kInf;
    }
    case Kind::Quadratic: {
      // (v-c)' Q^+ (v-c)/2 - r on range(Q), +inf elsewhere.
      const auto& d = std::get<QuadraticData>(impl_->data);
      const Vector y = v - d.c;
      const double zero_tol =
          kEigZeroTol * std::max(1.0, d.evals.size() ? d.evals.maxCoeff() : 0.0);
      const Vector coeffs = d.evecs.transpose() * y;
      double val = 0.0;
      double out_of_range_sq = 0.0;
      for (long i = 0; i < d.evals.size(); ++i) {
        if (d.evals[i] > zero_tol)
          val += coeffs[i] * coeffs[i] / d.evals[i];
        else
          out_of_range_sq += coeffs[i] * coeffs[i];
      }
      if (std::sqrt(out_of_range_sq) > kRangeTol * (1.0 + y.norm())) return kInf;
      return 0.5 * val - d.r;
    }
    case Kind::Norm2: {
      const auto& d = std::get<Norm2Data>(impl_->data);
      const double tol = kDomainTol * (1.0 + d.w);
      return v.norm() <= d.w + tol ? v.dot(d.p) : kInf;
    }
    case Kind::MaxAffine: {
      // min -sum_i l_i b_i over l in the unit simplex with sum_i l_i a_i = v.
      const auto& d = std::get<MaxAffineData>(impl_->data);
      const int m = int(d.slopes.size());
      const int n = impl_->dim;
      Matrix A(n + 1, m);
      for (int j = 0; j < m; ++j) {
        A.block(0, j, n, 1) = d.slopes[size_t(j)];
        A(n, j) = 1.0;
      }
      Vector rhs(n + 1);
      rhs.head(n) = v;
      rhs[n] = 1.0;
      const LpResult lp = solve_lp_eq(A, rhs, -d.offsets);
      if (lp.status != LpResult::Status::Optimal) return kInf;
      return lp.value;
    }
    case Kind::Sum:
      throw std::invalid_argument(
          "conjugate: Sum has no closed form; use the decomposition form of "
          "eps_subgrad_residual");
  }
  throw std::logic_error("conjugate: bad kind");
}

const Vector& ConvexFunction::affine_slope() const {
  return std::get<AffineData>(impl_->data).a;
}
double ConvexFunction::affine_offset() const {
  return std::get<AffineData>(impl_->data).b;
}
const Matrix& ConvexFunction::quad_matrix() const {
  return std::get<QuadraticData>(impl_->data).Q;
}
const Vector& ConvexFunction::quad_linear() const {
  return std::get<QuadraticData>(impl_->data).c;
}
double ConvexFunction::quad_constant() const {
  return std::get<QuadraticData>(impl_->data).r;
}
const Vector& ConvexFunction::quad_eigenvalues() const {
  return std::get<QuadraticData>(impl_->data).evals;
}
const Matrix& ConvexFunction::quad_eigenvectors() const {
  return std::get<QuadraticData>(impl_->data).evecs;
}
const Vector& ConvexFunction::norm2_center() const {
  return std::get<Norm2Data>(impl_->data).p;
}
double ConvexFunction::norm2_weight() const {
  return std::get<Norm2Data>(impl_->data).w;
}
const std::vector<Vector>& ConvexFunction::max_affine_slopes() const {
  return std::get<MaxAffineData>(impl_->data).slopes;
}
const Vector& ConvexFunction::max_affine_offsets() const {
  return std::get<MaxAffineData>(impl_->data).offsets;
}
const std::vector<std::pair<double, ConvexFunction>>&
ConvexFunction::sum_terms() const {
  return std::get<SumData>(impl_->data).terms;
}

namespace {

void flatten_into(const ConvexFunction& f, double weight,
                  std::vector<std::pair<double, ConvexFunction>>& out) {
  if (f.kind() == ConvexFunction::Kind::Sum) {
    for (const auto& [w, term] : f.sum_terms())
      flatten_into(term, weight * w, out);
  } else {
    out.emplace_back(weight, f);
  }
}

}  // namespace

std::vector<std::pair<double, ConvexFunction>> flatten(const ConvexFunction& f) {
  std::vector<std::pair<double, ConvexFunction>> out;
  flatten_into(f, 1.0, out);
  return out;
}

double eps_subgrad_residual(const ConvexFunction& f, const Vector& x,
                            const Vector& v) {
  if (f.kind() == ConvexFunction::Kind::Sum)
    throw std::invalid_argument(
        "eps_subgrad_residual: Sum requires a per-leaf decomposition");
  check_dim(f, x, "eps_subgrad_residual");
  check_dim(f, v, "eps_subgrad_residual");
  const double star = f.conjugate(v);
  if (star == kInf) return kInf;
  return std::max(0.0, f.value(x) + star - v.dot(x));
}

double eps_subgrad_residual(const ConvexFunction& f, const Vector& x,
                            const std::vector<Vector>& leaf_candidates) {
  const auto leaves = flatten(f);
  if (leaf_candidates.size() != leaves.size())
    throw std::invalid_argument(
        "eps_subgrad_residual: decomposition size does not match leaf count");
  double total = 0.0;
  for (size_t i = 0; i < leaves.size(); ++i) {
    const auto& [w, leaf] = leaves[i];
    if (w == 0.0) continue;
    const double resid = eps_subgrad_residual(leaf, x, leaf_candidates[i]);
    if (resid == kInf) return kInf;
    total += w * resid;
  }
  return total;
}

}  // namespace bilev
