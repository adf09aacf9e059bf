#include "bilev/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace bilev {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ParseError(msg); }

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(where + ": missing key '" + key + "'");
  return *it;
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where + ": expected a number");
  return j.get<double>();
}

long as_integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where + ": expected an integer");
  return j.get<long>();
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where + ": expected a string");
  return j.get<std::string>();
}

Vector as_vector(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + ": expected an array of numbers");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    v[long(i)] = as_number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Vector as_vector_dim(const json& j, int dim, const std::string& where) {
  Vector v = as_vector(j, where);
  if (int(v.size()) != dim)
    fail(where + ": expected " + std::to_string(dim) + " entries, got " +
         std::to_string(v.size()));
  return v;
}

Matrix as_matrix(const json& j, int rows, int cols, const std::string& where) {
  if (!j.is_array() || int(j.size()) != rows)
    fail(where + ": expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    m.row(i) = as_vector_dim(j[i], cols, where + "[" + std::to_string(i) + "]")
                   .transpose();
  return m;
}

ConvexFunction parse_function(const json& j, int dim, const std::string& where);

ConvexFunction parse_function_inner(const json& j, int dim,
                                    const std::string& where) {
  const std::string kind = as_string(need(j, "kind", where), where + ".kind");
  if (kind == "affine") {
    const double b =
        j.contains("offset") ? as_number(j["offset"], where + ".offset") : 0.0;
    return ConvexFunction::affine(
        as_vector_dim(need(j, "slope", where), dim, where + ".slope"), b);
  }
  if (kind == "quadratic") {
    const Matrix Q = as_matrix(need(j, "Q", where), dim, dim, where + ".Q");
    const Vector c = j.contains("c")
                         ? as_vector_dim(j["c"], dim, where + ".c")
                         : Vector(Vector::Zero(dim));
    const double r = j.contains("r") ? as_number(j["r"], where + ".r") : 0.0;
    return ConvexFunction::quadratic(Q, c, r);
  }
  if (kind == "norm2") {
    const Vector center =
        j.contains("center") ? as_vector_dim(j["center"], dim, where + ".center")
                             : Vector(Vector::Zero(dim));
    const double w =
        j.contains("weight") ? as_number(j["weight"], where + ".weight") : 1.0;
    return ConvexFunction::norm2(center, w);
  }
  if (kind == "max_affine") {
    const json& js = need(j, "slopes", where);
    if (!js.is_array() || js.empty())
      fail(where + ".slopes: expected a non-empty array");
    std::vector<Vector> slopes;
    for (size_t i = 0; i < js.size(); ++i)
      slopes.push_back(as_vector_dim(js[i], dim,
                                     where + ".slopes[" + std::to_string(i) + "]"));
    const Vector offsets =
        as_vector(need(j, "offsets", where), where + ".offsets");
    if (size_t(offsets.size()) != slopes.size())
      fail(where + ".offsets: one offset per slope required");
    return ConvexFunction::max_affine(slopes, offsets);
  }
  if (kind == "sum") {
    const json& jt = need(j, "terms", where);
    if (!jt.is_array() || jt.empty())
      fail(where + ".terms: expected a non-empty array");
    std::vector<std::pair<double, ConvexFunction>> terms;
    for (size_t i = 0; i < jt.size(); ++i) {
      const std::string tw = where + ".terms[" + std::to_string(i) + "]";
      const double w = as_number(need(jt[i], "weight", tw), tw + ".weight");
      terms.emplace_back(w,
                         parse_function(need(jt[i], "function", tw), dim,
                                        tw + ".function"));
    }
    return ConvexFunction::sum(terms);
  }
  if (kind == "zero") return ConvexFunction::zero(dim);
  fail(where + ".kind: unknown function kind '" + kind + "'");
}

ConvexFunction parse_function(const json& j, int dim,
                              const std::string& where) {
  try {
    return parse_function_inner(j, dim, where);
  } catch (const std::invalid_argument& e) {
    fail(where + ": " + e.what());
  }
}

ConvexSet parse_set(const json& j, int dim, const std::string& where);

ConvexSet parse_set_inner(const json& j, int dim, const std::string& where) {
  const std::string kind = as_string(need(j, "kind", where), where + ".kind");
  if (kind == "box")
    return ConvexSet::box(
        as_vector_dim(need(j, "lo", where), dim, where + ".lo"),
        as_vector_dim(need(j, "hi", where), dim, where + ".hi"));
  if (kind == "ball")
    return ConvexSet::ball(
        as_vector_dim(need(j, "center", where), dim, where + ".center"),
        as_number(need(j, "radius", where), where + ".radius"));
  if (kind == "simplex") {
    const double s =
        j.contains("scale") ? as_number(j["scale"], where + ".scale") : 1.0;
    return ConvexSet::simplex(dim, s);
  }
  if (kind == "halfspace")
    return ConvexSet::halfspace(
        as_vector_dim(need(j, "a", where), dim, where + ".a"),
        as_number(need(j, "b", where), where + ".b"));
  if (kind == "intersection") {
    const json& jm = need(j, "members", where);
    if (!jm.is_array() || jm.empty())
      fail(where + ".members: expected a non-empty array");
    std::vector<ConvexSet> members;
    for (size_t i = 0; i < jm.size(); ++i)
      members.push_back(
          parse_set(jm[i], dim, where + ".members[" + std::to_string(i) + "]"));
    return ConvexSet::intersection(members);
  }
  fail(where + ".kind: unknown set kind '" + kind + "'");
}

ConvexSet parse_set(const json& j, int dim, const std::string& where) {
  try {
    return parse_set_inner(j, dim, where);
  } catch (const std::invalid_argument& e) {
    fail(where + ": " + e.what());
  }
}

MonotoneOperator parse_operator(const json& j, int dim,
                                const std::string& where) {
  const std::string kind = as_string(need(j, "kind", where), where + ".kind");
  try {
    if (kind == "affine") {
      const Matrix M = as_matrix(need(j, "M", where), dim, dim, where + ".M");
      const Vector q = j.contains("q")
                           ? as_vector_dim(j["q"], dim, where + ".q")
                           : Vector(Vector::Zero(dim));
      return MonotoneOperator::affine(M, q);
    }
    if (kind == "gradient")
      return MonotoneOperator::gradient(
          parse_function(need(j, "function", where), dim, where + ".function"));
  } catch (const std::invalid_argument& e) {
    fail(where + ": " + e.what());
  }
  fail(where + ".kind: unknown operator kind '" + kind + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ParseError(where + ": not a number: '" + s + "'");
  return v;
}

const char* kFixedColumns[12] = {
    "k",         "eps_k",        "lambda_k",    "eta_k",
    "f",         "g_or_gap",     "step_norm",   "eta1",
    "eta2",      "cert_residual", "dist_to_ref", "stop_flag"};

std::string kind_name(Trace::Kind k) {
  switch (k) {
    case Trace::Kind::Sbp:
      return "sbp";
    case Trace::Kind::Smpec:
      return "smpec";
    case Trace::Kind::Penalty:
      return "penalty";
  }
  return "sbp";
}

}  // namespace

ProblemFile parse_problem_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("problem: expected a JSON object");

  const std::string type =
      as_string(need(root, "kind", "problem"), "problem.kind");
  if (type != "sbp" && type != "smpec" && type != "penalty")
    fail("problem.kind: unknown kind '" + type + "'");
  const long dim_l = as_integer(need(root, "dim", "problem"), "problem.dim");
  if (dim_l < 1 || dim_l > 1000) fail("problem.dim: out of range");
  const int dim = int(dim_l);

  ProblemFile out;
  if (root.contains("schedule")) {
    const json& js = root["schedule"];
    if (!js.is_object()) fail("problem.schedule: expected an object");
    auto get = [&](const char* key, double dflt) {
      return js.contains(key)
                 ? as_number(js[key], std::string("problem.schedule.") + key)
                 : dflt;
    };
    out.schedule.eps0 = get("eps0", out.schedule.eps0);
    out.schedule.p = get("p", out.schedule.p);
    out.schedule.lambda_lo = get("lambda_lo", out.schedule.lambda_lo);
    out.schedule.lambda_hi = get("lambda_hi", out.schedule.lambda_hi);
    out.schedule.eta0 = get("eta0", out.schedule.eta0);
    out.schedule.q = get("q", out.schedule.q);
  }
  if (!validate_schedule(out.schedule))
    fail("problem.schedule: parameters violate eps0>0, 0<p<=1, "
         "0<lambda_lo<=lambda_hi, eta0>0, q>1");

  if (root.contains("max_iter")) {
    out.max_iter = as_integer(root["max_iter"], "problem.max_iter");
    if (out.max_iter < 0) fail("problem.max_iter: must be >= 0");
  }
  if (root.contains("eps0_stop")) {
    out.eps0_stop = as_number(root["eps0_stop"], "problem.eps0_stop");
    if (!(*out.eps0_stop > 0.0)) fail("problem.eps0_stop: must be > 0");
  }
  if (root.contains("reference")) {
    const json& jr = root["reference"];
    if (!jr.is_array()) fail("problem.reference: expected an array of points");
    for (size_t i = 0; i < jr.size(); ++i)
      out.reference.push_back(as_vector_dim(
          jr[i], dim, "problem.reference[" + std::to_string(i) + "]"));
  }

  const ConvexFunction f =
      parse_function(need(root, "f", "problem"), dim, "problem.f");
  const ConvexSet C =
      parse_set(need(root, "constraint", "problem"), dim, "problem.constraint");
  const Vector x0 =
      as_vector_dim(need(root, "x0", "problem"), dim, "problem.x0");

  if (type == "sbp") {
    out.kind = ProblemFile::Kind::Sbp;
    const ConvexFunction g =
        parse_function(need(root, "g", "problem"), dim, "problem.g");
    out.sbp = SbpProblem{f, g, C, x0};
    return out;
  }
  const MonotoneOperator op =
      parse_operator(need(root, "operator", "problem"), dim, "problem.operator");
  if (!check_monotone_plus(op))
    fail("problem.operator: operator not monotone plus");
  out.smpec = SmpecProblem{f, op, C, x0};

  if (type == "smpec") {
    out.kind = ProblemFile::Kind::Smpec;
    return out;
  }

  out.kind = ProblemFile::Kind::Penalty;
  const json& jm = need(root, "mu_schedule", "problem");
  if (!jm.is_array() || jm.empty())
    fail("problem.mu_schedule: expected a non-empty array");
  for (size_t i = 0; i < jm.size(); ++i) {
    const double mu =
        as_number(jm[i], "problem.mu_schedule[" + std::to_string(i) + "]");
    if (!(mu > 0.0)) fail("problem.mu_schedule: entries must be > 0");
    out.mu_schedule.push_back(mu);
  }
  if (root.contains("inner_tol")) {
    out.inner_tol = as_number(root["inner_tol"], "problem.inner_tol");
    if (!(out.inner_tol > 0.0)) fail("problem.inner_tol: must be > 0");
  }
  if (root.contains("feasible_point"))
    out.feasible_point =
        as_vector_dim(root["feasible_point"], dim, "problem.feasible_point");
  return out;
}

ProblemFile parse_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open problem file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_text(ss.str());
}

std::vector<Vector> parse_reference_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open reference file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json root;
  try {
    root = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_array()) fail("reference: expected an array of points");
  std::vector<Vector> out;
  for (size_t i = 0; i < root.size(); ++i)
    out.push_back(as_vector(root[i], "reference[" + std::to_string(i) + "]"));
  return out;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  const long n = trace.records.empty() ? 0 : trace.records.front().x.size();
  long leaves = 0;
  bool any_cert = false;
  for (const auto& r : trace.records)
    if (r.cert) {
      any_cert = true;
      leaves = long(r.cert->leaf_witnesses.size());
      break;
    }

  out << "# kind=" << kind_name(trace.kind) << " aborted=" << trace.aborted
      << " reason=" << trace.stop_reason << "\n";
  for (int i = 0; i < 12; ++i) out << (i ? "," : "") << kFixedColumns[i];
  for (long i = 0; i < n; ++i) out << ",x_" << i;
  if (any_cert) {
    for (long i = 0; i < n; ++i) out << ",sw_" << i;
    for (long i = 0; i < n; ++i) out << ",nw_" << i;
    for (long l = 0; l < leaves; ++l)
      for (long i = 0; i < n; ++i) out << ",lw" << l << "_" << i;
  }
  out << "\n";

  for (const auto& r : trace.records) {
    out << r.k << ',' << format_double(r.eps) << ',' << format_double(r.lambda)
        << ',' << format_double(r.eta) << ',' << format_double(r.f_value)
        << ',' << format_double(r.g_or_gap) << ','
        << format_double(r.step_norm) << ',';
    if (r.cert)
      out << format_double(r.cert->eta1) << ',' << format_double(r.cert->eta2)
          << ',' << format_double(r.cert->residual_norm);
    else
      out << ",,";
    out << ',';
    if (r.dist_to_ref) out << format_double(*r.dist_to_ref);
    out << ',' << (r.stop_fired ? 1 : 0);
    for (long i = 0; i < n; ++i) out << ',' << format_double(r.x[i]);
    if (any_cert) {
      if (r.cert) {
        for (long i = 0; i < n; ++i)
          out << ',' << format_double(r.cert->sub_witness[i]);
        for (long i = 0; i < n; ++i)
          out << ',' << format_double(r.cert->normal_witness[i]);
        for (long l = 0; l < leaves; ++l)
          for (long i = 0; i < n; ++i)
            out << ',' << format_double(r.cert->leaf_witnesses[size_t(l)][i]);
      } else {
        for (long i = 0; i < n * (2 + leaves); ++i) out << ',';
      }
    }
    out << "\n";
  }
}

void write_trace_file(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open trace file for writing: " + path);
  write_trace_csv(out, trace);
  if (!out) throw ParseError("failed writing trace file: " + path);
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open trace file: " + path);

  Trace trace;
  std::string line;
  if (!std::getline(in, line)) fail("trace: empty file");
  if (line.rfind("# ", 0) == 0) {
    std::istringstream meta(line.substr(2));
    std::string tok;
    while (meta >> tok) {
      if (tok.rfind("kind=", 0) == 0) {
        const std::string k = tok.substr(5);
        if (k == "sbp")
          trace.kind = Trace::Kind::Sbp;
        else if (k == "smpec")
          trace.kind = Trace::Kind::Smpec;
        else if (k == "penalty")
          trace.kind = Trace::Kind::Penalty;
        else
          fail("trace: unknown kind '" + k + "'");
      } else if (tok.rfind("aborted=", 0) == 0) {
        trace.aborted = tok.substr(8) == "1";
      } else if (tok.rfind("reason=", 0) == 0) {
        std::string rest;
        std::getline(meta, rest);
        trace.stop_reason = tok.substr(7) + rest;
        break;
      }
    }
    if (!std::getline(in, line)) fail("trace: missing header line");
  }

  const std::vector<std::string> header = split_csv(line);
  if (header.size() < 12) fail("trace: header has fewer than 12 columns");
  for (int i = 0; i < 12; ++i)
    if (header[size_t(i)] != kFixedColumns[i])
      fail("trace: column " + std::to_string(i + 1) + " must be '" +
           kFixedColumns[i] + "', got '" + header[size_t(i)] + "'");
  long n = 0;
  while (12 + n < long(header.size()) &&
         header[size_t(12 + n)] == "x_" + std::to_string(n))
    ++n;
  if (n == 0) fail("trace: no iterate columns (x_0 ...)");
  long leaves = 0;
  bool has_witness_cols = false;
  if (header.size() > size_t(12 + n)) {
    has_witness_cols = true;
    const long expected_rest = long(header.size()) - (12 + n);
    if (expected_rest < 2 * n || (expected_rest - 2 * n) % n != 0)
      fail("trace: malformed witness columns");
    leaves = (expected_rest - 2 * n) / n;
  }
  const size_t total_cols = size_t(12 + n + (has_witness_cols ? (2 + leaves) * n : 0));

  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv(line);
    const std::string where = "trace line " + std::to_string(lineno);
    if (cells.size() != total_cols)
      fail(where + ": expected " + std::to_string(total_cols) +
           " columns, got " + std::to_string(cells.size()));
    TraceRecord r;
    r.k = long(parse_double(cells[0], where + " (k)"));
    r.eps = parse_double(cells[1], where + " (eps_k)");
    r.lambda = parse_double(cells[2], where + " (lambda_k)");
    r.eta = parse_double(cells[3], where + " (eta_k)");
    r.f_value = parse_double(cells[4], where + " (f)");
    r.g_or_gap = parse_double(cells[5], where + " (g_or_gap)");
    r.step_norm = parse_double(cells[6], where + " (step_norm)");
    const bool has_cert = !cells[7].empty();
    if (!cells[10].empty())
      r.dist_to_ref = parse_double(cells[10], where + " (dist_to_ref)");
    r.stop_fired = cells[11] == "1";
    r.x = Vector(n);
    for (long i = 0; i < n; ++i)
      r.x[i] = parse_double(cells[size_t(12 + i)], where + " (x)");
    if (has_cert) {
      if (!has_witness_cols) fail(where + ": certificate without witness columns");
      StepCertificate cert;
      cert.eta1 = parse_double(cells[7], where + " (eta1)");
      cert.eta2 = parse_double(cells[8], where + " (eta2)");
      cert.residual_norm = parse_double(cells[9], where + " (cert_residual)");
      cert.sub_witness = Vector(n);
      cert.normal_witness = Vector(n);
      for (long i = 0; i < n; ++i)
        cert.sub_witness[i] =
            parse_double(cells[size_t(12 + n + i)], where + " (sw)");
      for (long i = 0; i < n; ++i)
        cert.normal_witness[i] =
            parse_double(cells[size_t(12 + 2 * n + i)], where + " (nw)");
      for (long l = 0; l < leaves; ++l) {
        Vector lw(n);
        for (long i = 0; i < n; ++i)
          lw[i] = parse_double(cells[size_t(12 + (3 + l) * n + i)],
                               where + " (lw)");
        cert.leaf_witnesses.push_back(lw);
      }
      r.cert = cert;
    }
    trace.records.push_back(std::move(r));
  }
  if (trace.records.empty()) fail("trace: no data rows");
  return trace;
}

namespace {

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * (1.0 + std::max(std::abs(a), std::abs(b)));
}

}  // namespace

long verify_trace(const Trace& trace, const ProblemFile& problem) {
  const bool is_penalty = trace.kind == Trace::Kind::Penalty;
  if ((problem.kind == ProblemFile::Kind::Sbp) !=
      (trace.kind == Trace::Kind::Sbp))
    throw ParseError("verify: trace kind does not match problem type");
  if (is_penalty != (problem.kind == ProblemFile::Kind::Penalty))
    throw ParseError("verify: trace kind does not match problem type");

  const ConvexFunction& f = problem.kind == ProblemFile::Kind::Sbp
                                ? problem.sbp->f
                                : problem.smpec->f;
  const ConvexSet& C = problem.kind == ProblemFile::Kind::Sbp
                           ? problem.sbp->constraint
                           : problem.smpec->constraint;
  const long N = long(trace.records.size());

  for (long i = 0; i < N; ++i) {
    const TraceRecord& r = trace.records[i];
    if (r.x.size() != (problem.kind == ProblemFile::Kind::Sbp
                           ? problem.sbp->x0.size()
                           : problem.smpec->x0.size()))
      throw ParseError("verify: iterate dimension does not match the problem");
    if (r.k != i) throw ParseError("verify: row indices are not consecutive");
  }
  if (is_penalty && size_t(N) != problem.mu_schedule.size())
    throw ParseError("verify: one row per penalty stage expected");

  for (long i = 0; i < N; ++i) {
    const TraceRecord& r = trace.records[i];
    if (is_penalty) {
      if (!close(r.eps * problem.mu_schedule[size_t(i)], 1.0, 1e-12)) return i;
      if (r.cert) return i;
    } else {
      if (!close(r.eps, problem.schedule.eps(i), 1e-12)) return i;
      if (!close(r.lambda, problem.schedule.lambda(i), 1e-12)) return i;
      if (!close(r.eta, problem.schedule.eta(i), 1e-12)) return i;
    }
    if (!close(r.f_value, f.value(r.x), 1e-9)) return i;
    if (trace.kind == Trace::Kind::Sbp &&
        !close(r.g_or_gap, problem.sbp->g.value(r.x), 1e-9))
      return i;

    const bool last = i == N - 1;
    if (!is_penalty && !last) {
      const Vector& y = trace.records[size_t(i + 1)].x;
      if (std::abs(r.step_norm - (y - r.x).norm()) > 1e-9) return i;
      if (!r.cert)
        throw ParseError("verify: missing certificate on row " +
                         std::to_string(i));
      if (trace.kind == Trace::Kind::Sbp) {
        const ConvexFunction psi = ConvexFunction::sum(
            {{1.0, problem.sbp->g}, {r.eps, problem.sbp->f}});
        if (!verify_certificate(psi, C, r.x, r.lambda, y, *r.cert, r.eta))
          return i;
      } else {
        if (!verify_smpec_certificate(f, problem.smpec->op, r.eps, C, r.x,
                                      r.lambda, y, *r.cert, r.eta))
          return i;
      }
    }
  }
  return -1;
}

}  // namespace bilev
