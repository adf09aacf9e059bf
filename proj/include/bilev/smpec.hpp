#pragma once

#include <optional>

#include "bilev/convex_function.hpp"
#include "bilev/convex_set.hpp"
#include "bilev/inner_solver.hpp"
#include "bilev/operators.hpp"
#include "bilev/sbp.hpp"
#include "bilev/schedule.hpp"
#include "bilev/trace.hpp"
#include "bilev/types.hpp"

namespace bilev {

// Simple MPEC: minimize f over the solution set of the variational
// inequality VI(F, C).
struct SmpecProblem {
  ConvexFunction f;
  MonotoneOperator op;
  ConvexSet constraint;
  Vector x0;
};

// One outer step: finds y with
//
//   -(y - x_k)/lambda_k  in  F(y) + eps_k d_eta1 f(y) + N^eta2_C(y)
//
// by forward-backward splitting (forward on F + (.-x_k)/lambda_k, backward
// prox of eps_k f over C).  The certificate's sub_witness equals
// F(y) + eps_k * v_f with v_f aggregated from leaf_witnesses, and eta1 bounds
// the unscaled residual of v_f in d f(y).
struct SmpecStepResult {
  Vector x_next;
  StepCertificate cert;
};
SmpecStepResult smpec_step(const SmpecProblem& prob, const Vector& x_k, long k,
                           const Schedule& sched, const InnerOptions& opt = {});

// Companion re-check for smpec certificates (the prox form lives in
// inner_solver.hpp).
bool verify_smpec_certificate(const ConvexFunction& f, const MonotoneOperator& F,
                              double eps_k, const ConvexSet& C,
                              const Vector& anchor, double lambda,
                              const Vector& y, const StepCertificate& cert,
                              double eta_budget = kInf, double slack = 1e-9);

// Outer loop, same shape as sbp_run; the g column of the trace records the
// dual gap at each iterate when C is bounded (diagnostic only).
Trace smpec_run(const SmpecProblem& prob, const Schedule& sched,
                const RunOptions& opt = {});

}  // namespace bilev
