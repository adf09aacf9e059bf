#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bilev/inner_solver.hpp"
#include "bilev/types.hpp"

namespace bilev {

// One row per outer iterate.  Rows 0..K-1 additionally describe the step
// k -> k+1 they initiated (step_norm, certificate, stop flag); the final row
// only carries the state.  Penalty traces have no certificates.
struct TraceRecord {
  long k = 0;
  Vector x;
  double eps = 0.0;     // eps_k (1/mu_k for penalty rows)
  double lambda = 0.0;  // lambda_k (prox step used inside penalty stages)
  double eta = 0.0;     // eta_k (inner tolerance for penalty rows)
  double f_value = 0.0;
  double g_or_gap = 0.0;  // g(x_k), or the dual gap for operator problems
  double step_norm = 0.0;
  std::optional<StepCertificate> cert;
  std::optional<double> dist_to_ref;
  bool stop_fired = false;
};

struct Trace {
  enum class Kind { Sbp, Smpec, Penalty };
  Kind kind = Kind::Sbp;
  std::vector<TraceRecord> records;
  bool aborted = false;
  std::string stop_reason;  // "max_iter", "eps0 criterion", or failure text
};

}  // namespace bilev
