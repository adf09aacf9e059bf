#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "bilev/gap.hpp"
#include "bilev/io.hpp"
#include "bilev/sbp.hpp"
#include "bilev/smpec.hpp"

namespace {

// Exit codes: 0 success, 2 parse error or trace/problem mismatch, 3 solver
// failure (a partial trace is still written), 4 certificate failure in verify.
constexpr int kOk = 0;
constexpr int kParseError = 2;
constexpr int kSolverFailure = 3;
constexpr int kCertFailure = 4;

struct RunArgs {
  std::string problem_path;
  std::string trace_path;
  long max_iter = -1;
  double eps0 = -1.0;
  std::string ref_file;
  unsigned seed = 0;
  bool quiet = false;
};

int run_command(const RunArgs& args) {
  bilev::ProblemFile problem;
  try {
    problem = bilev::parse_problem_file(args.problem_path);
    if (!args.ref_file.empty())
      problem.reference = bilev::parse_reference_file(args.ref_file);
  } catch (const bilev::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kParseError;
  }
  if (args.max_iter >= 0) problem.max_iter = args.max_iter;
  if (args.eps0 > 0.0) problem.eps0_stop = args.eps0;

  bilev::Trace trace;
  try {
    if (problem.kind == bilev::ProblemFile::Kind::Penalty) {
      bilev::PenaltyOptions opt;
      opt.inner_tol = problem.inner_tol;
      opt.reference = problem.reference;
      opt.feasible_point = problem.feasible_point;
      trace = bilev::penalty_solve(*problem.smpec, problem.mu_schedule, opt);
    } else {
      bilev::RunOptions opt;
      opt.max_iter = problem.max_iter;
      opt.eps0_stop = problem.eps0_stop;
      opt.reference = problem.reference;
      opt.inner.seed = args.seed;
      if (problem.kind == bilev::ProblemFile::Kind::Sbp)
        trace = bilev::sbp_run(*problem.sbp, problem.schedule, opt);
      else
        trace = bilev::smpec_run(*problem.smpec, problem.schedule, opt);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolverFailure;
  }

  try {
    bilev::write_trace_file(args.trace_path, trace);
  } catch (const bilev::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolverFailure;
  }

  const auto& last = trace.records.back();
  if (!args.quiet) {
    std::string point = "(";
    for (long i = 0; i < last.x.size(); ++i)
      point += (i ? "," : "") + std::to_string(last.x[i]);
    point += ")";
    const char* gap_name =
        problem.kind == bilev::ProblemFile::Kind::Sbp ? "g" : "gap";
    std::printf("%s: %zu rows, final x = %s, f = %.12g, %s = %.12g",
                trace.aborted ? "aborted" : "done", trace.records.size(),
                point.c_str(), last.f_value, gap_name, last.g_or_gap);
    if (last.dist_to_ref)
      std::printf(", dist_to_ref = %.12g", *last.dist_to_ref);
    std::printf(", stop: %s\n", trace.stop_reason.c_str());
  }
  return trace.aborted ? kSolverFailure : kOk;
}

int verify_command(const std::string& trace_path,
                   const std::string& problem_path, bool quiet) {
  long bad_row = -1;
  try {
    const bilev::ProblemFile problem = bilev::parse_problem_file(problem_path);
    const bilev::Trace trace = bilev::read_trace_file(trace_path);
    bad_row = bilev::verify_trace(trace, problem);
  } catch (const bilev::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kParseError;
  }
  if (bad_row >= 0) {
    std::fprintf(stderr, "certificate check failed at row %ld\n", bad_row);
    return kCertFailure;
  }
  if (!quiet) std::printf("ok: every certificate verifies\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "bilev: certified proximal solvers for simple bilevel programs and "
      "MPECs"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand(
      "run", "Solve a problem file and write the iteration trace");
  run->add_option("problem", run_args.problem_path, "problem JSON file")
      ->required();
  run->add_option("trace", run_args.trace_path, "output trace CSV")->required();
  run->add_option("--max-iter", run_args.max_iter,
                  "override the outer iteration cap");
  run->add_option("--eps0", run_args.eps0,
                  "enable the step-based stopping rule with this eps0");
  run->add_option("--ref-file", run_args.ref_file,
                  "JSON file with reference points for the dist_to_ref column");
  run->add_option("--seed", run_args.seed,
                  "accepted for interface stability; all tie-breaks are "
                  "deterministic");
  run->add_flag("--quiet", run_args.quiet, "suppress the summary line");

  std::string v_trace, v_problem;
  bool v_quiet = false;
  CLI::App* verify = app.add_subcommand(
      "verify", "Re-check every certificate of a trace against its problem");
  verify->add_option("trace", v_trace, "trace CSV to check")->required();
  verify->add_option("problem", v_problem, "problem JSON file")->required();
  verify->add_flag("--quiet", v_quiet, "suppress the summary line");

  CLI11_PARSE(app, argc, argv);
  if (run->parsed()) return run_command(run_args);
  return verify_command(v_trace, v_problem, v_quiet);
}
