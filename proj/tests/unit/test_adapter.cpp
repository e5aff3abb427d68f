#include <doctest.h>

#include <string>

#include "mfals/adapter.hpp"
#include "mfals/error.hpp"
#include "mfals/models.hpp"

using namespace mfals;

namespace {

std::string echo(const std::string& args = "") {
  return std::string("'") + MFALS_ECHO_ADAPTER + "' " + args;
}

const std::vector<std::string> kNames{"x1", "x2"};

}  // namespace

TEST_CASE("round trip against the reference echo adapter") {
  AdapterProcess p(echo("--function four_branch"), 10.0);
  CHECK(p.inputs() == kNames);
  for (double a : {0.0, 1.5, -2.0, 3.0}) {
    const double x[] = {a, 0.5 * a};
    CHECK(p.request(kNames, x) == four_branch(x));
  }
  CHECK(p.last_id() == 4u);
}

TEST_CASE("external evaluator matches the in-process benchmark and counts calls") {
  ExternalEvaluator ev(echo("--function borehole"), {"rw", "r", "Tu", "Hu", "Tl", "Hl", "L", "Kw"});
  const double x[] = {0.1, 25050.0, 89335.0, 1050.0, 89.55, 760.0, 1400.0, 10950.0};
  CHECK(ev.evaluate(x) == borehole(x));
  CHECK(ev.calls() == 1u);
  ExternalEvaluator ra(echo("--function rastrigin"), kNames);
  const double y[] = {0.5, 0.0};
  CHECK(ra.evaluate(y) == doctest::Approx(9.75).epsilon(1e-14));
}

TEST_CASE("undeclared inputs are rejected at start-up") {
  CHECK_THROWS_AS(ExternalEvaluator(echo(), {"x1", "zz"}), ProtocolError);
}

TEST_CASE("adapter error responses raise evaluation errors") {
  AdapterProcess p(echo("--error diverged"), 10.0);
  const double x[] = {0.0, 0.0};
  try {
    p.request(kNames, x);
    FAIL("expected an evaluation error");
  } catch (const EvaluationError& e) {
    CHECK(std::string(e.what()) == "diverged");
  }
}

TEST_CASE("mismatched response ids are protocol errors") {
  AdapterProcess p(echo("--bad-id"), 10.0);
  const double x[] = {0.0, 0.0};
  CHECK_THROWS_AS(p.request(kNames, x), ProtocolError);
}

TEST_CASE("a missing handshake is a protocol error") {
  CHECK_THROWS_AS(AdapterProcess(echo("--no-handshake"), 10.0), ProtocolError);
}

TEST_CASE("adapter exit is reported with its status") {
  AdapterProcess p(echo("--crash-after 1 --exit-code 3"), 10.0);
  const double x[] = {0.0, 0.0};
  CHECK(p.request(kNames, x) == 3.0);
  try {
    p.request(kNames, x);
    FAIL("expected a crash error");
  } catch (const AdapterCrashError& e) {
    CHECK(std::string(e.what()).find("exited with status 3") != std::string::npos);
  }
  CHECK_THROWS_AS(p.request(kNames, x), AdapterCrashError);
}

TEST_CASE("a command that cannot start is a crash") {
  CHECK_THROWS_AS(AdapterProcess("/nonexistent/adapter", 10.0), AdapterCrashError);
}

TEST_CASE("slow adapters time out") {
  AdapterProcess p("echo '{\"ready\":true,\"inputs\":[\"x1\",\"x2\"]}'; exec sleep 30", 0.3);
  const double x[] = {0.0, 0.0};
  CHECK_THROWS_AS(p.request(kNames, x), EvaluationError);
}

TEST_CASE("determinism audit flags drifting adapters") {
  AdapterOptions audit;
  audit.audit_every = 2;
  ExternalEvaluator steady(echo(), kNames, audit);
  const double x[] = {1.0, 2.0};
  for (int i = 0; i < 6; ++i) CHECK_NOTHROW(steady.evaluate(x));
  CHECK(steady.calls() == 6u);

  ExternalEvaluator drifting(echo("--drift"), kNames, audit);
  CHECK_NOTHROW(drifting.evaluate(x));
  CHECK_THROWS_AS(drifting.evaluate(x), DeterminismError);
}
