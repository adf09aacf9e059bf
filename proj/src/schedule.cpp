#include "bilev/schedule.hpp"

namespace bilev {

bool validate_schedule(const Schedule& s) {
  if (!(s.eps0 > 0.0)) return false;
  if (!(s.p > 0.0 && s.p <= 1.0)) return false;
  if (!(s.lambda_lo > 0.0 && s.lambda_lo <= s.lambda_hi)) return false;
  if (!(s.eta0 > 0.0)) return false;
  if (!(s.q > 1.0)) return false;
  return true;
}

}  // namespace bilev
