#include "bilev/linprog.hpp"

#include <stdexcept>
#include <vector>

namespace bilev {
namespace {

// Bland's rule keeps the pivoting deterministic and cycle-free.
int entering_column(const Matrix& tableau, const std::vector<bool>& eligible,
                    double tol) {
  const int cols = int(tableau.cols()) - 1;
  for (int j = 0; j < cols; ++j) {
    if (eligible[size_t(j)] && tableau(tableau.rows() - 1, j) < -tol) return j;
  }
  return -1;
}

int leaving_row(const Matrix& tableau, const std::vector<int>& basis, int col,
                double tol) {
  const int m = int(tableau.rows()) - 1;
  const int rhs = int(tableau.cols()) - 1;
  int row = -1;
  double best = 0.0;
  for (int i = 0; i < m; ++i) {
    const double a = tableau(i, col);
    if (a <= tol) continue;
    const double ratio = tableau(i, rhs) / a;
    if (row < 0 || ratio < best - tol ||
        (ratio < best + tol && basis[size_t(i)] < basis[size_t(row)])) {
      row = i;
      best = ratio;
    }
  }
  return row;
}

void pivot(Matrix& tableau, std::vector<int>& basis, int row, int col) {
  tableau.row(row) /= tableau(row, col);
  for (int i = 0; i < tableau.rows(); ++i) {
    if (i == row) continue;
    const double factor = tableau(i, col);
    if (factor != 0.0) tableau.row(i) -= factor * tableau.row(row);
  }
  basis[size_t(row)] = col;
}

// Runs the simplex loop on the given cost row.  Returns false on
// unboundedness.
bool run_simplex(Matrix& tableau, std::vector<int>& basis,
                 const std::vector<bool>& eligible, double tol) {
  const long cap = 200 + 50L * long(tableau.cols()) * long(tableau.rows());
  for (long it = 0; it < cap; ++it) {
    const int col = entering_column(tableau, eligible, tol);
    if (col < 0) return true;
    const int row = leaving_row(tableau, basis, col, tol);
    if (row < 0) return false;
    pivot(tableau, basis, row, col);
  }
  throw std::runtime_error("simplex: pivot cap exceeded");
}

}  // namespace

LpResult solve_lp_eq(const Matrix& A, const Vector& b, const Vector& c,
                     double tol) {
  const int m = int(A.rows());
  const int n = int(A.cols());
  if (b.size() != m || c.size() != n)
    throw std::invalid_argument("solve_lp_eq: dimension mismatch");

  // Tableau layout: [original vars | artificials | rhs], plus a cost row.
  Matrix tableau = Matrix::Zero(m + 1, n + m + 1);
  std::vector<int> basis(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double sign = b[i] < 0.0 ? -1.0 : 1.0;
    tableau.block(i, 0, 1, n) = sign * A.row(i);
    tableau(i, n + i) = 1.0;
    tableau(i, n + m) = sign * b[i];
    basis[size_t(i)] = n + i;
  }

  // Phase 1: minimize the sum of artificials.  Start the cost row with the
  // artificial costs, then cancel the basic columns so their reduced costs
  // are zero.
  for (int j = n; j < n + m; ++j) tableau(m, j) = 1.0;
  for (int i = 0; i < m; ++i) tableau.row(m) -= tableau.row(i);
  std::vector<bool> eligible(size_t(n + m), true);
  if (!run_simplex(tableau, basis, eligible, tol))
    throw std::runtime_error("solve_lp_eq: phase 1 unbounded");

  LpResult result;
  if (tableau(m, n + m) < -tol) {
    result.status = LpResult::Status::Infeasible;
    return result;
  }

  // Drive any remaining artificial out of the basis (or drop its redundant
  // row by leaving it; its value is ~0 and the column stays locked out).
  for (int i = 0; i < m; ++i) {
    if (basis[size_t(i)] < n) continue;
    for (int j = 0; j < n; ++j) {
      if (std::abs(tableau(i, j)) > tol) {
        pivot(tableau, basis, i, j);
        break;
      }
    }
  }
  for (int j = n; j < n + m; ++j) eligible[size_t(j)] = false;

  // Phase 2: rebuild the cost row for the real objective.
  tableau.row(m).setZero();
  tableau.block(m, 0, 1, n) = c.transpose();
  for (int i = 0; i < m; ++i) {
    const int bj = basis[size_t(i)];
    if (bj < n && c[bj] != 0.0) tableau.row(m) -= c[bj] * tableau.row(i);
  }
  if (!run_simplex(tableau, basis, eligible, tol)) {
    result.status = LpResult::Status::Unbounded;
    return result;
  }

  result.status = LpResult::Status::Optimal;
  result.x = Vector::Zero(n);
  for (int i = 0; i < m; ++i) {
    if (basis[size_t(i)] < n) result.x[basis[size_t(i)]] = tableau(i, n + m);
  }
  result.value = c.dot(result.x);
  return result;
}

}  // namespace bilev
