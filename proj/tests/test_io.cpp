#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "bilev/io.hpp"

using bilev::ParseError;
using bilev::ProblemFile;
using bilev::Trace;

namespace {

const char* kSbpText = R"json({
  "kind": "sbp",
  "dim": 2,
  "f": {"kind": "quadratic", "Q": [[0, 0], [0, 2]], "c": [1, 0]},
  "g": {"kind": "quadratic", "Q": [[2, 0], [0, 0]], "c": [-2, 0], "r": 1},
  "constraint": {"kind": "box", "lo": [-2, -2], "hi": [2, 2]},
  "x0": [-2, 2],
  "max_iter": 12,
  "reference": [[1, 0]]
})json";

const char* kSmpecText = R"json({
  "kind": "smpec",
  "dim": 2,
  "f": {"kind": "affine", "slope": [1, 0]},
  "operator": {"kind": "affine", "M": [[1, -1], [-1, 1]]},
  "constraint": {"kind": "box", "lo": [0, 0], "hi": [1, 1]},
  "x0": [1, 0.2],
  "max_iter": 10
})json";

std::string temp_path(const char* name) {
  return std::string("/tmp/bilev-io-") + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("problem files parse into runnable problems") {
  const auto p = bilev::parse_problem_text(kSbpText);
  REQUIRE(p.kind == ProblemFile::Kind::Sbp);
  REQUIRE(p.sbp.has_value());
  CHECK(p.max_iter == 12);
  REQUIRE(p.reference.size() == 1);
  CHECK(p.reference[0][0] == 1.0);
  CHECK(p.sbp->f.value(p.sbp->x0) == Catch::Approx(2.0));  // x2^2 + x1 at (-2,2)

  const auto m = bilev::parse_problem_text(kSmpecText);
  REQUIRE(m.kind == ProblemFile::Kind::Smpec);
  REQUIRE(m.smpec.has_value());
  CHECK(m.smpec->op.lipschitz() == Catch::Approx(2.0));
}

TEST_CASE("parse errors name the offending key") {
  auto message_of = [](const char* text) {
    try {
      bilev::parse_problem_text(text);
      return std::string("no error");
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
  };

  CHECK(message_of(R"({"dim": 2})").find("kind") != std::string::npos);
  CHECK(message_of(R"({"kind": "sbp"})").find("dim") != std::string::npos);
  CHECK(message_of(R"({"kind": "sbp", "dim": 2})").find("missing key 'f'") !=
        std::string::npos);
  CHECK(message_of(
            R"({"kind": "sbp", "dim": 2,
                "f": {"kind": "affine", "slope": [1]},
                "g": {"kind": "zero"},
                "constraint": {"kind": "box", "lo": [0,0], "hi": [1,1]},
                "x0": [0,0]})")
            .find("slope") != std::string::npos);
  CHECK(message_of(R"({"kind": "lp", "dim": 1})").find("unknown kind") !=
        std::string::npos);
  CHECK(message_of("{not json").find("invalid JSON") != std::string::npos);

  // Schedule violations are caught at parse time.
  CHECK(message_of(
            R"({"kind": "sbp", "dim": 1, "schedule": {"q": 1.0},
                "f": {"kind": "zero"}, "g": {"kind": "zero"},
                "constraint": {"kind": "box", "lo": [0], "hi": [1]},
                "x0": [0]})")
            .find("schedule") != std::string::npos);

  // Non-monotone-plus operators are rejected with a named reason.
  CHECK(message_of(
            R"({"kind": "smpec", "dim": 2,
                "f": {"kind": "zero"},
                "operator": {"kind": "affine", "M": [[0, -1], [1, 0]]},
                "constraint": {"kind": "box", "lo": [0,0], "hi": [1,1]},
                "x0": [0,0]})")
            .find("not monotone plus") != std::string::npos);

  // Penalty problems require a positive mu schedule.
  CHECK(message_of(
            R"({"kind": "penalty", "dim": 2,
                "f": {"kind": "zero"},
                "operator": {"kind": "affine", "M": [[1, 0], [0, 1]]},
                "constraint": {"kind": "box", "lo": [0,0], "hi": [1,1]},
                "x0": [0,0], "mu_schedule": [1, -2]})")
            .find("mu_schedule") != std::string::npos);
}

TEST_CASE("traces round-trip through CSV exactly") {
  const auto p = bilev::parse_problem_text(kSbpText);
  bilev::RunOptions opt;
  opt.max_iter = p.max_iter;
  opt.reference = p.reference;
  const Trace trace = bilev::sbp_run(*p.sbp, p.schedule, opt);
  REQUIRE(trace.records.size() == 13);

  const std::string path = temp_path("roundtrip.csv");
  bilev::write_trace_file(path, trace);
  const Trace back = bilev::read_trace_file(path);

  CHECK(back.kind == trace.kind);
  CHECK(back.aborted == trace.aborted);
  CHECK(back.stop_reason == trace.stop_reason);
  REQUIRE(back.records.size() == trace.records.size());
  for (size_t i = 0; i < trace.records.size(); ++i) {
    const auto& a = trace.records[i];
    const auto& b = back.records[i];
    CHECK(a.k == b.k);
    CHECK((a.x - b.x).norm() == 0.0);  // 17 digits round-trip doubles exactly
    CHECK(a.eps == b.eps);
    CHECK(a.lambda == b.lambda);
    CHECK(a.eta == b.eta);
    CHECK(a.f_value == b.f_value);
    CHECK(a.g_or_gap == b.g_or_gap);
    CHECK(a.step_norm == b.step_norm);
    CHECK(a.cert.has_value() == b.cert.has_value());
    if (a.cert) {
      CHECK(a.cert->eta1 == b.cert->eta1);
      CHECK(a.cert->eta2 == b.cert->eta2);
      CHECK(a.cert->residual_norm == b.cert->residual_norm);
      CHECK((a.cert->sub_witness - b.cert->sub_witness).norm() == 0.0);
      CHECK((a.cert->normal_witness - b.cert->normal_witness).norm() == 0.0);
      REQUIRE(a.cert->leaf_witnesses.size() == b.cert->leaf_witnesses.size());
      for (size_t l = 0; l < a.cert->leaf_witnesses.size(); ++l)
        CHECK((a.cert->leaf_witnesses[l] - b.cert->leaf_witnesses[l]).norm() ==
              0.0);
    }
    CHECK(a.dist_to_ref.has_value() == b.dist_to_ref.has_value());
    if (a.dist_to_ref) CHECK(*a.dist_to_ref == *b.dist_to_ref);
    CHECK(a.stop_fired == b.stop_fired);
  }

  // Byte-identical re-serialization.
  std::ostringstream s1, s2;
  bilev::write_trace_csv(s1, trace);
  bilev::write_trace_csv(s2, back);
  CHECK(s1.str() == s2.str());

  std::remove(path.c_str());
}

TEST_CASE("verify_trace accepts solver output and flags tampering") {
  const auto p = bilev::parse_problem_text(kSbpText);
  bilev::RunOptions opt;
  opt.max_iter = p.max_iter;
  Trace trace = bilev::sbp_run(*p.sbp, p.schedule, opt);
  CHECK(bilev::verify_trace(trace, p) == -1);

  Trace bad = trace;
  bad.records[3].cert->eta1 = 0.0;
  bad.records[3].cert->eta2 = 0.0;
  const long row = bilev::verify_trace(bad, p);
  // Either the certificate was exact (residual zero) or row 3 is flagged.
  if (row != -1) CHECK(row == 3);

  Trace wrong_iterate = trace;
  wrong_iterate.records[5].x[0] += 0.1;
  CHECK(bilev::verify_trace(wrong_iterate, p) >= 0);

  Trace wrong_schedule = trace;
  wrong_schedule.records[2].eta *= 2.0;
  CHECK(bilev::verify_trace(wrong_schedule, p) == 2);

  Trace renumbered = trace;
  renumbered.records[4].k = 9;
  CHECK_THROWS_AS(bilev::verify_trace(renumbered, p), ParseError);

  const auto m = bilev::parse_problem_text(kSmpecText);
  CHECK_THROWS_AS(bilev::verify_trace(trace, m), ParseError);
}

TEST_CASE("smpec traces verify end to end") {
  const auto m = bilev::parse_problem_text(kSmpecText);
  bilev::RunOptions opt;
  opt.max_iter = m.max_iter;
  const Trace trace = bilev::smpec_run(*m.smpec, m.schedule, opt);
  REQUIRE_FALSE(trace.aborted);
  CHECK(bilev::verify_trace(trace, m) == -1);

  const std::string path = temp_path("smpec.csv");
  bilev::write_trace_file(path, trace);
  const Trace back = bilev::read_trace_file(path);
  CHECK(bilev::verify_trace(back, m) == -1);
  std::remove(path.c_str());
}

TEST_CASE("penalty problems parse and their traces verify") {
  const char* text = R"json({
    "kind": "penalty",
    "dim": 2,
    "f": {"kind": "affine", "slope": [1, 0]},
    "operator": {"kind": "affine", "M": [[1, -1], [-1, 1]]},
    "constraint": {"kind": "box", "lo": [0, 0], "hi": [1, 1]},
    "x0": [1, 0.2],
    "mu_schedule": [1, 4, 16],
    "inner_tol": 1e-7,
    "feasible_point": [0, 0]
  })json";
  const auto p = bilev::parse_problem_text(text);
  REQUIRE(p.kind == ProblemFile::Kind::Penalty);
  REQUIRE(p.mu_schedule.size() == 3);
  CHECK(p.inner_tol == 1e-7);
  REQUIRE(p.feasible_point.has_value());

  bilev::PenaltyOptions popt;
  popt.inner_tol = p.inner_tol;
  const Trace trace = bilev::penalty_solve(*p.smpec, p.mu_schedule, popt);
  CHECK(bilev::verify_trace(trace, p) == -1);

  Trace extra = trace;
  extra.records.push_back(extra.records.back());
  extra.records.back().k += 1;
  CHECK_THROWS_AS(bilev::verify_trace(extra, p), ParseError);
}

TEST_CASE("reference files parse as arrays of points") {
  const std::string path = temp_path("ref.json");
  {
    std::ofstream out(path);
    out << "[[1, 0], [0.5, 0.5]]";
  }
  const auto pts = bilev::parse_reference_file(path);
  REQUIRE(pts.size() == 2);
  CHECK(pts[1][1] == 0.5);
  std::remove(path.c_str());

  CHECK_THROWS_AS(bilev::parse_reference_file("/nonexistent/ref.json"),
                  ParseError);
}
