#include "bilev/sbp.hpp"

#include <stdexcept>

#include "bilev/gap.hpp"

namespace bilev {

SbpStepResult sbp_step(const SbpProblem& prob, const Vector& x_k, long k,
                       const Schedule& sched, const InnerOptions& opt) {
  const ProxSubproblem sub{
      ConvexFunction::sum({{1.0, prob.g}, {sched.eps(k), prob.f}}),
      x_k, sched.lambda(k), prob.constraint, sched.eta(k)};
  InnerOptions inner = opt;
  inner.start = x_k;
  const InnerResult res = solve_prox(sub, inner);
  return SbpStepResult{res.y, res.cert};
}

Trace sbp_run(const SbpProblem& prob, const Schedule& sched,
              const RunOptions& opt) {
  if (!validate_schedule(sched))
    throw std::invalid_argument("sbp_run: invalid schedule");
  if (prob.f.dim() != prob.g.dim() || prob.f.dim() != prob.constraint.dim() ||
      int(prob.x0.size()) != prob.f.dim())
    throw std::invalid_argument("sbp_run: dimension mismatch");

  Trace trace;
  trace.kind = Trace::Kind::Sbp;
  trace.stop_reason = "max_iter";

  auto dist_to_ref = [&](const Vector& x) -> std::optional<double> {
    if (opt.reference.empty()) return std::nullopt;
    double best = kInf;
    for (const Vector& r : opt.reference) best = std::min(best, (x - r).norm());
    return best;
  };

  Vector x = prob.constraint.project(prob.x0);
  for (long k = 0; k < opt.max_iter; ++k) {
    TraceRecord row;
    row.k = k;
    row.x = x;
    row.eps = sched.eps(k);
    row.lambda = sched.lambda(k);
    row.eta = sched.eta(k);
    row.f_value = prob.f.value(x);
    row.g_or_gap = prob.g.value(x);
    row.dist_to_ref = dist_to_ref(x);

    SbpStepResult step;
    try {
      step = sbp_step(prob, x, k, sched, opt.inner);
    } catch (const InnerSolveError& e) {
      trace.records.push_back(row);
      trace.aborted = true;
      trace.stop_reason = e.what();
      return trace;
    }

    if (opt.paranoid_verify) {
      const ConvexFunction psi =
          ConvexFunction::sum({{1.0, prob.g}, {row.eps, prob.f}});
      if (!verify_certificate(psi, prob.constraint, x, row.lambda, step.x_next,
                              step.cert, row.eta)) {
        trace.records.push_back(row);
        trace.aborted = true;
        trace.stop_reason = "certificate verification failed at iteration " +
                            std::to_string(k);
        return trace;
      }
    }

    row.step_norm = (step.x_next - x).norm();
    row.cert = step.cert;
    row.stop_fired =
        opt.eps0_stop &&
        step_stop_check(x, step.x_next, row.lambda, row.eps, *opt.eps0_stop);
    trace.records.push_back(row);
    x = step.x_next;
    if (row.stop_fired) {
      trace.stop_reason = "eps0 criterion";
      break;
    }
  }

  TraceRecord last;
  last.k = trace.records.empty() ? 0 : trace.records.back().k + 1;
  last.x = x;
  last.eps = sched.eps(last.k);
  last.lambda = sched.lambda(last.k);
  last.eta = sched.eta(last.k);
  last.f_value = prob.f.value(x);
  last.g_or_gap = prob.g.value(x);
  last.dist_to_ref = dist_to_ref(x);
  trace.records.push_back(last);
  return trace;
}

}  // namespace bilev
