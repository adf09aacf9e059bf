#include "bilev/operators.hpp"

#include <stdexcept>

namespace bilev {

struct MonotoneOperator::Impl {
  Kind kind = Kind::Affine;
  int dim = 0;
  Matrix M;
  Vector q;
  double lipschitz = 0.0;
};

namespace {

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return std::sqrt(Eigen::SelfAdjointEigenSolver<Matrix>(M.transpose() * M)
                       .eigenvalues()
                       .maxCoeff());
}

}  // namespace

MonotoneOperator MonotoneOperator::affine(Matrix M, Vector q) {
  if (M.rows() != M.cols() || M.rows() != q.size())
    throw std::invalid_argument("affine operator: shape mismatch");
  const Matrix sym = 0.5 * (M + M.transpose());
  if (sym.size() > 0 &&
      Eigen::SelfAdjointEigenSolver<Matrix>(sym).eigenvalues().minCoeff() <
          -1e-10)
    throw std::invalid_argument(
        "affine operator: symmetric part is not positive semidefinite");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Affine;
  impl->dim = int(M.rows());
  impl->lipschitz = spectral_norm(M);
  impl->M = std::move(M);
  impl->q = std::move(q);
  return MonotoneOperator(std::move(impl));
}

MonotoneOperator MonotoneOperator::gradient(ConvexFunction phi) {
  if (!phi.is_smooth())
    throw std::invalid_argument("gradient operator: function must be smooth");
  const int n = phi.dim();
  Matrix M = Matrix::Zero(n, n);
  Vector q = Vector::Zero(n);
  for (const auto& [w, leaf] : flatten(phi)) {
    if (leaf.kind() == ConvexFunction::Kind::Affine) {
      q += w * leaf.affine_slope();
    } else {
      M += w * leaf.quad_matrix();
      q += w * leaf.quad_linear();
    }
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Gradient;
  impl->dim = n;
  impl->lipschitz = spectral_norm(M);
  impl->M = std::move(M);
  impl->q = std::move(q);
  return MonotoneOperator(std::move(impl));
}

MonotoneOperator::MonotoneOperator(std::shared_ptr<const Impl> impl)
    : impl_(std::move(impl)) {}

MonotoneOperator::Kind MonotoneOperator::kind() const { return impl_->kind; }

int MonotoneOperator::dim() const { return impl_->dim; }

Vector MonotoneOperator::operator()(const Vector& x) const {
  if (int(x.size()) != impl_->dim)
    throw std::invalid_argument("operator: dimension mismatch");
  return impl_->M * x + impl_->q;
}

double MonotoneOperator::lipschitz() const { return impl_->lipschitz; }

std::pair<Matrix, Vector> MonotoneOperator::affine_form() const {
  return {impl_->M, impl_->q};
}

bool MonotoneOperator::is_zero() const {
  return impl_->M.cwiseAbs().maxCoeff() == 0.0 &&
         impl_->q.cwiseAbs().maxCoeff() == 0.0;
}

bool check_monotone_plus(const MonotoneOperator& F) {
  if (F.kind() == MonotoneOperator::Kind::Gradient) return true;
  const auto [M, q] = F.affine_form();
  const Matrix sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const double top = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  // <F(x)-F(y), x-y> = 0 must force F(x) = F(y): every null direction of the
  // symmetric part has to be a null direction of M itself.
  for (long i = 0; i < eig.eigenvalues().size(); ++i) {
    if (eig.eigenvalues()[i] <= 1e-10 * top) {
      const Vector d = eig.eigenvectors().col(i);
      if ((M * d).norm() > 1e-9 * top) return false;
    }
  }
  return true;
}

}  // namespace bilev
