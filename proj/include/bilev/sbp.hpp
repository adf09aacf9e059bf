#pragma once

#include <optional>
#include <vector>

#include "bilev/convex_function.hpp"
#include "bilev/convex_set.hpp"
#include "bilev/inner_solver.hpp"
#include "bilev/schedule.hpp"
#include "bilev/trace.hpp"
#include "bilev/types.hpp"

namespace bilev {

// Simple bilevel program: minimize the upper objective f over the set of
// minimizers of the lower objective g on C.  The solver never forms that
// solution set; it follows the penalized prox iteration below.
struct SbpProblem {
  ConvexFunction f;  // upper objective
  ConvexFunction g;  // lower objective
  ConvexSet constraint;
  Vector x0;
};

struct RunOptions {
  long max_iter = 5000;
  // Enables the step-based stopping rule |x_{k+1}-x_k| <= lambda_k eps_k eps0.
  std::optional<double> eps0_stop;
  std::vector<Vector> reference;  // points used for the dist_to_ref column
  InnerOptions inner;
  // Re-verify every certificate as it is produced (cheap; on by default).
  bool paranoid_verify = true;
};

// One outer step: solves the prox subproblem for psi_k = g + eps_k f with
// budget eta_k and returns the new iterate with its certificate.
struct SbpStepResult {
  Vector x_next;
  StepCertificate cert;
};
SbpStepResult sbp_step(const SbpProblem& prob, const Vector& x_k, long k,
                       const Schedule& sched, const InnerOptions& opt = {});

// Runs sbp_step until max_iter or until the stopping rule fires.  An inner
// solver failure aborts the run and returns the partial trace with
// `aborted` set instead of throwing.
Trace sbp_run(const SbpProblem& prob, const Schedule& sched,
              const RunOptions& opt = {});

}  // namespace bilev
