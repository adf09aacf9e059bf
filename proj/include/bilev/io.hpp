#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bilev/gap.hpp"
#include "bilev/sbp.hpp"
#include "bilev/schedule.hpp"
#include "bilev/smpec.hpp"
#include "bilev/trace.hpp"

namespace bilev {

// Raised for malformed problem or trace files; the message names the
// offending key or column.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parsed problem file.  `kind` selects which member is active; penalty
// problems reuse the smpec payload plus the mu schedule.
struct ProblemFile {
  enum class Kind { Sbp, Smpec, Penalty };
  Kind kind = Kind::Sbp;
  std::optional<SbpProblem> sbp;
  std::optional<SmpecProblem> smpec;
  std::vector<double> mu_schedule;       // penalty only
  double inner_tol = 1e-6;               // penalty only
  std::optional<Vector> feasible_point;  // penalty bound reference
  Schedule schedule;
  long max_iter = 5000;
  std::optional<double> eps0_stop;
  std::vector<Vector> reference;
};

ProblemFile parse_problem_file(const std::string& path);
ProblemFile parse_problem_text(const std::string& text);

// Reference points: a JSON array of points, e.g. [[1,0],[0,1]].
std::vector<Vector> parse_reference_file(const std::string& path);

// Trace CSV.  The first twelve columns are fixed:
//   k, eps_k, lambda_k, eta_k, f, g_or_gap, step_norm, eta1, eta2,
//   cert_residual, dist_to_ref, stop_flag
// followed by the iterate coordinates and the certificate witness vectors
// (sub/normal witness and per-leaf decomposition), which let `verify`
// re-check every certificate without re-solving.  All numeric fields are
// written with 17 significant digits; dist_to_ref is empty when no reference
// set was supplied.
void write_trace_csv(std::ostream& out, const Trace& trace);
void write_trace_file(const std::string& path, const Trace& trace);

Trace read_trace_file(const std::string& path);

// Re-checks every certificate row of `trace` against the problem.  Returns
// the first failing row index, or -1 when everything verifies.  Throws
// ParseError on structural mismatch (wrong dimension, missing columns).
long verify_trace(const Trace& trace, const ProblemFile& problem);

}  // namespace bilev
