#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bilev/convex_function.hpp"
#include "bilev/convex_set.hpp"
#include "bilev/types.hpp"

namespace bilev {

// Witness that y approximately satisfies the prox inclusion
//
//   -(y - anchor)/lambda  in  d_eta1 psi(y) + N^eta2_C(y),
//
// with the two memberships certified by measured conjugate/support residuals
// and the vector identity holding to 1e-9:
//
//   eta1 >= eps_subgrad_residual(psi, y, leaf_witnesses)
//   eta2 >= eps_normal_residual(C, y, normal_witness)
//   |(y - anchor)/lambda + sub_witness + normal_witness| <= 1e-9
//   eta1 + eta2 <= eta_budget.
//
// sub_witness aggregates the per-leaf candidates; for operator steps it also
// contains the single-valued operator term (see smpec.hpp).
struct StepCertificate {
  double eta1 = 0.0;
  double eta2 = 0.0;
  Vector sub_witness;
  Vector normal_witness;
  double residual_norm = 0.0;
  std::vector<Vector> leaf_witnesses;
};

struct ProxSubproblem {
  ConvexFunction psi;
  Vector anchor;
  double lambda = 1.0;
  ConvexSet constraint;
  double eta_budget = 1e-6;
};

struct InnerOptions {
  long max_iter = 1000000;
  // How often (in iterations) a certificate assembly is attempted on top of
  // the cheap stationarity pre-check.
  int check_every = 25;
  // Reserved: every tie-break in the solver is deterministic, so the seed has
  // no effect on the result; it is accepted for interface stability.
  unsigned seed = 0;
  std::optional<Vector> start;  // defaults to the projected anchor
  // When set, receives the best objective value seen after each iteration
  // (a non-increasing sequence).
  std::vector<double>* phi_log = nullptr;
};

struct InnerResult {
  Vector y;
  StepCertificate cert;
  long iterations = 0;
  // |s + xi| for the exact subgradient s of the prox objective at y and the
  // best-scaled recovered normal xi; gap to the constrained minimum is at
  // most lambda * stationarity^2 / 2.
  double stationarity = 0.0;
};

class InnerSolveError : public std::runtime_error {
 public:
  InnerSolveError(const std::string& msg, double best_total, long iterations)
      : std::runtime_error(msg), best_total_(best_total), iters_(iterations) {}
  double best_total() const { return best_total_; }
  long iterations() const { return iters_; }

 private:
  double best_total_;
  long iters_;
};

// Minimizes psi(z) + |z - anchor|^2 / (2 lambda) over the constraint set by
// projected (sub)gradient iterations and returns an iterate together with a
// verified StepCertificate.  Throws InnerSolveError when the iteration cap is
// reached before a certificate within budget is found.
InnerResult solve_prox(const ProxSubproblem& p, const InnerOptions& opt = {});

// Pure re-check of the certificate invariants; shares no state with
// solve_prox.  eta_budget defaults to +inf so callers without a budget can
// still validate the witness arithmetic.
bool verify_certificate(const ConvexFunction& psi, const ConvexSet& C,
                        const Vector& anchor, double lambda, const Vector& y,
                        const StepCertificate& cert, double eta_budget = kInf,
                        double slack = 1e-9);

namespace detail {

// Shared certificate-assembly core.  Finds per-leaf candidates v_i and a
// normal witness xi with
//
//   fixed_offset + sum_i identity_weight_i * v_i + xi = target   (exactly)
//
// minimizing the measured total residual
//
//   sum_i residual_weight_i * resid(leaf_i, y, v_i)   +   normal resid of xi.
struct SplitSpec {
  std::vector<std::pair<double, ConvexFunction>> leaves;  // (residual weight, leaf)
  std::vector<double> identity_weights;
  Vector fixed_offset;
  Vector target;
};

struct SplitResult {
  double eta1 = kInf;
  double eta2 = kInf;
  double total = kInf;
  std::vector<Vector> leaf_witnesses;
  Vector sub_witness;  // fixed_offset + sum_i identity_weight_i * v_i
  Vector normal_witness;
};

SplitResult best_split(const SplitSpec& spec, const ConvexSet& C,
                       const Vector& y, const std::vector<Vector>& normal_seeds);

}  // namespace detail

}  // namespace bilev
