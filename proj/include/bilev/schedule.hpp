#pragma once

#include <cmath>

namespace bilev {

// Parameter sequences driving the outer iterations:
//
//   eps_k    = eps0 / (k+1)^p          0 < p <= 1   (decreasing, divergent sum)
//   lambda_k constant, or drifting inside [lambda_lo, lambda_hi]
//   eta_k    = eta0 / (k+1)^q          q > 1        (summable)
struct Schedule {
  double eps0 = 1.0;
  double p = 1.0;
  double lambda_lo = 1.0;
  double lambda_hi = 1.0;
  double eta0 = 0.1;
  double q = 2.0;

  double eps(long k) const { return eps0 / std::pow(double(k + 1), p); }
  double lambda(long k) const {
    return lambda_lo + (lambda_hi - lambda_lo) / double(k + 1);
  }
  double eta(long k) const { return eta0 / std::pow(double(k + 1), q); }
};

// True iff the parameters satisfy the constraints above (eps0 > 0, eta0 > 0,
// 0 < p <= 1, q > 1, 0 < lambda_lo <= lambda_hi).
bool validate_schedule(const Schedule& s);

}  // namespace bilev
