#pragma once

#include <optional>
#include <vector>

#include "bilev/convex_function.hpp"
#include "bilev/convex_set.hpp"
#include "bilev/operators.hpp"
#include "bilev/smpec.hpp"
#include "bilev/trace.hpp"
#include "bilev/types.hpp"

namespace bilev {

// Dual gap function of the variational inequality VI(F, C):
//
//   g_D(x) = sup_{y in C} <F(y), x - y>,
//
// a convex nonnegative-on-C function whose zeros on C are exactly the VI
// solutions.  Evaluated by Frank-Wolfe on the concave inner maximization
// (away steps on polytope-like sets, exact line search); when the symmetric
// part of M vanishes (skew operator) the inner problem is linear and a single
// support-point call is exact.
struct GapEvaluation {
  double value = 0.0;   // within tol below the supremum
  Vector maximizer;     // attaining y
  double tol = 0.0;
};

struct GapOptions {
  double tol = 1e-6;
  long max_iter = 100000;
};

GapEvaluation dual_gap(const MonotoneOperator& F, const ConvexSet& C,
                       const Vector& x, const GapOptions& opt = {});

// F(y*) for the dual_gap maximizer y*: a tol-approximate subgradient of g_D
// at x (Danskin direction; the approximation error is bounded by the
// Frank-Wolfe duality gap).
Vector gap_subgradient(const MonotoneOperator& F, const ConvexSet& C,
                       const Vector& x, const GapOptions& opt = {});

// x solves the reformulated problem's constraint system: x in C (to tol) and
// g_D(x) <= tol.
bool r_smpec_feasible(const MonotoneOperator& F, const ConvexSet& C,
                      const Vector& x, double tol = 1e-6);

// Witness for the approximate Lagrange-multiplier rule at xbar:
//   |u + lambda_mult * w + v| <= eps0
// with u in df(xbar), v in N_C(xbar) (both certified to 1e-9) and w either a
// certified dual-gap subgradient or the operator value from a step
// certificate (whose membership the stopping argument supplies directly).
struct LmrWitness {
  Vector u;
  Vector w;
  Vector v;
  double lambda_mult = 0.0;
  double u_resid = kInf;  // measured membership residuals
  double v_resid = kInf;
  bool w_certified = false;
};

// Builds a witness and certifies the memberships of u and v.
// w_from_operator marks w as coming from a step certificate's operator piece.
// When f is a sum, u_leaves must supply the per-leaf decomposition of u
// (matching flatten(f)); the conjugate of a sum is not evaluated directly.
LmrWitness make_lmr_witness(const ConvexFunction& f, const ConvexSet& C,
                            const Vector& xbar, const Vector& u,
                            const Vector& w, const Vector& v,
                            double lambda_mult, bool w_from_operator,
                            const std::vector<Vector>* u_leaves = nullptr);

// True iff |u + lambda_mult w + v| <= eps0.  Throws when the stored
// membership residuals exceed 1e-9 (uncertified witness).
bool eps_lmr_check(const LmrWitness& w, double eps0);

// Step-based stopping rule: |x_next - x_k| <= lambda_k * eps_k * eps0.
// When it fires, the step certificate assembles into an LmrWitness with
// multiplier 1/eps_k that passes eps_lmr_check with the same eps0.
bool step_stop_check(const Vector& x_k, const Vector& x_next, double lambda_k,
                     double eps_k, double eps0);

// Penalty path: for each mu in mu_schedule solves
//
//   minimize f(x) + mu * g_D(x)   over C
//
// (in the scale-invariant form f/mu + g_D) to inner_tol and records one trace
// row per stage.  The final stages approach VI solutions that minimize f.
struct PenaltyOptions {
  double inner_tol = 1e-6;
  double gap_tol = 1e-8;       // Frank-Wolfe tolerance for g_D inside solves
  double prox_lambda = 1.0;    // prox parameter of the inner loop
  long max_prox_rounds = 400;
  std::vector<Vector> reference;
  // A point with g_D = 0 (a VI solution).  When set, every stage is checked
  // against the bound g_D(x_k) <= (f(x~) - f(x_k) + inner_tol) / mu_k and a
  // violation aborts the run.
  std::optional<Vector> feasible_point;
};

Trace penalty_solve(const SmpecProblem& prob, const std::vector<double>& mu_schedule,
                    const PenaltyOptions& opt = {});

}  // namespace bilev
