#include "bilev/gap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bilev {

namespace {

bool has_lmo(const ConvexSet& C) {
  switch (C.kind()) {
    case ConvexSet::Kind::Box:
    case ConvexSet::Kind::Ball:
    case ConvexSet::Kind::Simplex:
      return true;
    default:
      return false;
  }
}

struct GapProblem {
  Matrix M;
  Matrix M_sym;
  Vector q;
  Vector x;

  double value(const Vector& y) const {
    return y.dot(M.transpose() * x) - y.dot(M_sym * y) + q.dot(x) - q.dot(y);
  }
  Vector grad(const Vector& y) const {
    return M.transpose() * x - 2.0 * (M_sym * y) - q;
  }
};

// Frank-Wolfe on the concave inner maximization, with away steps on the
// vertex-representable sets (linear rate for quadratics of the form
// h(Ay) + b.y) and exact line search throughout.
GapEvaluation frank_wolfe_gap(const GapProblem& gp, const ConvexSet& C,
                              const GapOptions& opt) {
  const bool away = C.kind() == ConvexSet::Kind::Box ||
                    C.kind() == ConvexSet::Kind::Simplex;
  GapEvaluation out;
  const Vector y_feas = C.project(gp.x);
  out.value = gp.value(y_feas);
  out.maximizer = y_feas;
  auto track = [&](const Vector& y, double val) {
    if (val > out.value) {
      out.value = val;
      out.maximizer = y;
    }
  };

  Vector y = C.support_point(gp.grad(y_feas));
  std::vector<Vector> atoms{y};
  std::vector<double> weights{1.0};
  auto atom_index = [&](const Vector& a) -> long {
    for (size_t i = 0; i < atoms.size(); ++i)
      if ((atoms[i] - a).lpNorm<Eigen::Infinity>() <= 1e-12) return long(i);
    return -1;
  };

  double bound = kInf;
  for (long t = 0; t < opt.max_iter; ++t) {
    const Vector g = gp.grad(y);
    track(y, gp.value(y));
    const Vector s = C.support_point(g);
    const Vector d_fw = s - y;
    const double gap_fw = g.dot(d_fw);
    bound = std::max(0.0, gap_fw);
    if (bound <= opt.tol) break;

    Vector d = d_fw;
    double gamma_max = 1.0;
    bool away_step = false;
    long away_idx = -1;
    if (away) {
      long idx = 0;
      double worst = g.dot(atoms[0]);
      for (size_t i = 1; i < atoms.size(); ++i) {
        const double val = g.dot(atoms[i]);
        if (val < worst) {
          worst = val;
          idx = long(i);
        }
      }
      const Vector d_a = y - atoms[idx];
      if (g.dot(d_a) > gap_fw && weights[idx] < 1.0) {
        d = d_a;
        gamma_max = weights[idx] / (1.0 - weights[idx]);
        away_step = true;
        away_idx = idx;
      }
    }

    const double curv = d.dot(gp.M_sym * d);
    double gamma = gamma_max;
    if (curv > 0.0)
      gamma = std::clamp(g.dot(d) / (2.0 * curv), 0.0, gamma_max);
    if (gamma <= 0.0) break;  // no ascent possible along either direction

    y += gamma * d;
    if (away) {
      if (away_step) {
        for (double& w : weights) w *= (1.0 + gamma);
        weights[away_idx] -= gamma;
      } else {
        for (double& w : weights) w *= (1.0 - gamma);
        long idx = atom_index(s);
        if (idx < 0) {
          atoms.push_back(s);
          weights.push_back(gamma);
        } else {
          weights[idx] += gamma;
        }
      }
      for (size_t i = weights.size(); i-- > 0;) {
        if (weights[i] <= 1e-14) {
          atoms.erase(atoms.begin() + long(i));
          weights.erase(weights.begin() + long(i));
        }
      }
    }
  }
  track(y, gp.value(y));
  out.tol = bound;
  return out;
}

// Fallback for sets without a linear-maximization oracle: projected gradient
// ascent with a conservative support-function bound as the stopping gap.
GapEvaluation projected_ascent_gap(const GapProblem& gp, const ConvexSet& C,
                                   const GapOptions& opt) {
  GapEvaluation out;
  Vector y = C.project(gp.x);
  out.value = gp.value(y);
  out.maximizer = y;
  const double lip =
      2.0 * std::sqrt(Eigen::SelfAdjointEigenSolver<Matrix>(
                          gp.M_sym.transpose() * gp.M_sym)
                          .eigenvalues()
                          .maxCoeff()) +
      1e-12;
  const double step = 1.0 / lip;
  double bound = kInf;
  for (long t = 0; t < opt.max_iter; ++t) {
    const Vector g = gp.grad(y);
    const double sup = C.support_bound(g);
    if (sup == kInf)
      throw std::invalid_argument(
          "dual_gap: unbounded inner problem (infinite support value)");
    bound = std::max(0.0, sup - g.dot(y));
    const double val = gp.value(y);
    if (val > out.value) {
      out.value = val;
      out.maximizer = y;
    }
    if (bound <= opt.tol) break;
    y = C.project(y + step * g);
  }
  out.tol = bound;
  return out;
}

}  // namespace

GapEvaluation dual_gap(const MonotoneOperator& F, const ConvexSet& C,
                       const Vector& x, const GapOptions& opt) {
  if (F.kind() != MonotoneOperator::Kind::Affine)
    throw std::invalid_argument(
        "dual_gap: evaluation requires an affine operator");
  if (F.dim() != C.dim() || int(x.size()) != F.dim())
    throw std::invalid_argument("dual_gap: dimension mismatch");

  GapProblem gp;
  std::tie(gp.M, gp.q) = F.affine_form();
  gp.M_sym = 0.5 * (gp.M + gp.M.transpose());
  gp.x = x;

  // Skew part only: the inner problem is linear, one support call is exact.
  const double scale = std::max(1.0, gp.M.cwiseAbs().maxCoeff());
  if (gp.M_sym.cwiseAbs().maxCoeff() <= 1e-14 * scale && has_lmo(C)) {
    const Vector v = gp.M.transpose() * x - gp.q;
    GapEvaluation out;
    out.maximizer = C.support_point(v);
    out.value = C.support(v) + gp.q.dot(x);
    out.tol = 0.0;
    return out;
  }
  if (has_lmo(C)) return frank_wolfe_gap(gp, C, opt);
  return projected_ascent_gap(gp, C, opt);
}

Vector gap_subgradient(const MonotoneOperator& F, const ConvexSet& C,
                       const Vector& x, const GapOptions& opt) {
  return F(dual_gap(F, C, x, opt).maximizer);
}

bool r_smpec_feasible(const MonotoneOperator& F, const ConvexSet& C,
                      const Vector& x, double tol) {
  if (C.distance(x) > tol) return false;
  GapOptions opt;
  opt.tol = tol / 2.0;
  return dual_gap(F, C, x, opt).value <= tol;
}

LmrWitness make_lmr_witness(const ConvexFunction& f, const ConvexSet& C,
                            const Vector& xbar, const Vector& u,
                            const Vector& w, const Vector& v,
                            double lambda_mult, bool w_from_operator,
                            const std::vector<Vector>* u_leaves) {
  LmrWitness out;
  out.u = u;
  out.w = w;
  out.v = v;
  out.lambda_mult = lambda_mult;
  out.w_certified = w_from_operator;
  if (f.kind() == ConvexFunction::Kind::Sum) {
    if (u_leaves) {
      Vector agg = Vector::Zero(xbar.size());
      const auto leaves = flatten(f);
      if (u_leaves->size() == leaves.size()) {
        for (size_t i = 0; i < leaves.size(); ++i)
          agg += leaves[i].first * (*u_leaves)[i];
        if ((agg - u).norm() <= 1e-9)
          out.u_resid = eps_subgrad_residual(f, xbar, *u_leaves);
      }
    }
  } else {
    out.u_resid = eps_subgrad_residual(f, xbar, u);
  }
  try {
    out.v_resid = eps_normal_residual(C, xbar, v);
  } catch (const std::invalid_argument&) {
    out.v_resid = kInf;  // xbar not in C: nothing is a normal there
  }
  return out;
}

bool eps_lmr_check(const LmrWitness& w, double eps0) {
  if (w.u_resid > 1e-9 || w.v_resid > 1e-9)
    throw std::logic_error(
        "eps_lmr_check: witness memberships are not certified to 1e-9");
  return (w.u + w.lambda_mult * w.w + w.v).norm() <= eps0;
}

bool step_stop_check(const Vector& x_k, const Vector& x_next, double lambda_k,
                     double eps_k, double eps0) {
  return (x_next - x_k).norm() <= lambda_k * eps_k * eps0;
}

Trace penalty_solve(const SmpecProblem& prob,
                    const std::vector<double>& mu_schedule,
                    const PenaltyOptions& opt) {
  if (prob.op.kind() != MonotoneOperator::Kind::Affine)
    throw std::invalid_argument("penalty_solve: affine operators only");
  if (!check_monotone_plus(prob.op))
    throw std::invalid_argument("penalty_solve: operator not monotone plus");
  if (mu_schedule.empty())
    throw std::invalid_argument("penalty_solve: empty mu schedule");
  for (double mu : mu_schedule)
    if (!(mu > 0.0))
      throw std::invalid_argument("penalty_solve: mu must be positive");
  if (opt.feasible_point &&
      opt.feasible_point->size() != prob.x0.size())
    throw std::invalid_argument("penalty_solve: feasible point dimension");

  Trace trace;
  trace.kind = Trace::Kind::Penalty;
  trace.stop_reason = "mu schedule exhausted";

  GapOptions gopt;
  gopt.tol = opt.gap_tol;
  auto dist_to_ref = [&](const Vector& p) -> std::optional<double> {
    if (opt.reference.empty()) return std::nullopt;
    double best = kInf;
    for (const Vector& r : opt.reference) best = std::min(best, (p - r).norm());
    return best;
  };

  // Stationarity slack usable after accounting for the inexact dual-gap
  // subgradients (Frank-Wolfe tolerance enters additively).
  const double stat_budget =
      std::max(opt.inner_tol / 2.0 - opt.gap_tol, opt.inner_tol / 4.0);

  Vector x = prob.constraint.project(prob.x0);
  Vector x_prev = x;
  const double lambda = opt.prox_lambda;
  for (size_t stage = 0; stage < mu_schedule.size(); ++stage) {
    const double mu = mu_schedule[stage];
    // Scale-invariant stage objective f/mu + g_D keeps the subgradient norms
    // bounded independently of mu. For an affine operator the gap gradient
    // changes at most at rate ||M||, so a smooth f admits a constant step;
    // otherwise fall back to the diminishing rule.
    const bool smooth = prob.f.is_smooth();
    const double lip_stage = prob.op.lipschitz() +
                             (smooth ? prob.f.curvature_bound() / mu : 0.0) +
                             1.0 / lambda;
    for (long round = 0; round < opt.max_prox_rounds; ++round) {
      const Vector anchor = x;
      Vector z = x;
      Vector nu = Vector::Zero(x.size());
      double lip_run = 1e-12;
      bool stationary = false;
      for (long t = 1; t <= 5000; ++t) {
        const Vector s = prob.f.subgradient(z) / mu +
                         gap_subgradient(prob.op, prob.constraint, z, gopt) +
                         (z - anchor) / lambda;
        const double nn = nu.squaredNorm();
        const double c = nn > 0.0 ? std::max(0.0, -s.dot(nu) / nn) : 0.0;
        const double delta = (s + c * nu).norm();
        if (lambda * delta * delta / 2.0 <= stat_budget) {
          stationary = true;
          break;
        }
        double step;
        if (smooth) {
          step = 1.0 / lip_stage;
        } else {
          lip_run = std::max(lip_run, s.norm());
          step = 1.0 / (lip_run + double(t) / lambda);
        }
        const Vector w = z - step * s;
        const Vector z_next = prob.constraint.project(w);
        nu = (w - z_next) / step;
        z = z_next;
      }
      const double moved = (z - x).norm();
      x = z;
      if (stationary && moved <= lambda * opt.inner_tol / 2.0) break;
    }

    TraceRecord row;
    row.k = long(stage);
    row.x = x;
    row.eps = 1.0 / mu;
    row.lambda = lambda;
    row.eta = opt.inner_tol;
    row.f_value = prob.f.value(x);
    row.g_or_gap = dual_gap(prob.op, prob.constraint, x, gopt).value;
    row.step_norm = (x - x_prev).norm();
    row.dist_to_ref = dist_to_ref(x);
    trace.records.push_back(row);
    x_prev = x;

    // Penalty bound against a known VI solution: the stage solution is
    // inner_tol-optimal for f/mu + g_D, and g_D vanishes at the feasible
    // point, so g_D(x) <= (f(x~) - f(x) + inner_tol) / mu.
    if (opt.feasible_point) {
      const double bound =
          (prob.f.value(*opt.feasible_point) - row.f_value + opt.inner_tol) /
          mu;
      if (row.g_or_gap > bound) {
        trace.aborted = true;
        trace.stop_reason =
            "penalty bound violated at stage " + std::to_string(stage);
        return trace;
      }
    }
  }
  return trace;
}

}  // namespace bilev
