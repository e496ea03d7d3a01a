#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "esgain/averaging.hpp"
#include "esgain/error.hpp"
#include "esgain/metaopt.hpp"
#include "support.hpp"

using namespace esgain;

namespace {

const BoundsLedger& toy_ledger() {
  static const BoundsLedger L =
      build_ledger(testsupport::toy_h(), Domain::interval(-1.0, 1.0), 4);
  return L;
}

BoundsLedger synthetic_ledger(testsupport::ExprGen& g) {
  BoundsLedger L{Domain::interval(-1.0, 1.0), {}, 0.0, {0.0}, {}};
  for (int i = 0; i < 5; ++i) L.norms.push_back(g.uniform(0.2, 3.0));
  L.kappa = g.uniform(0.1, 2.0);
  L.composites["L2h_h1"] = g.uniform(0.1, 5.0);
  return L;
}

bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

void check_certificate(const MetaOptSolution& sol) {
  CHECK_FALSE(sol.active.empty());
  for (const auto& c : sol.constraints) {
    CHECK(c.value <= c.bound * (1.0 + 1e-9));
    if (c.active) CHECK(std::fabs(c.value - c.bound) <= 1e-9 * c.bound);
  }
}

}  // namespace

TEST_CASE("strategy-3 closed form on the toy ledger") {
  const auto sol = solve_strategy3_closed_form(toy_ledger(), 0.01, 0.01);
  const double expected_a = std::sqrt(8.0 * 0.01 / (1.0 + std::sin(1.0)));
  CHECK(sol.gains.a == doctest::Approx(expected_a).epsilon(1e-8));
  CHECK(sol.gains.a == doctest::Approx(0.2084).epsilon(1e-3));
  CHECK(sol.gains.eta == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(sol.p == doctest::Approx(0.01 / std::pow(expected_a, 3)).epsilon(1e-7));
  CHECK(sol.gains.m == 3);
  CHECK(has(sol.active, "delta1"));
  CHECK(has(sol.active, "delta2"));
  check_certificate(sol);
}

TEST_CASE("closed form scaling and unit case") {
  const auto base = solve_strategy3_closed_form(toy_ledger(), 0.01, 0.01);
  const auto quad = solve_strategy3_closed_form(toy_ledger(), 0.04, 0.01);
  CHECK(quad.gains.a == doctest::Approx(2.0 * base.gains.a).epsilon(1e-14));
  CHECK(quad.gains.eta == base.gains.eta);
  BoundsLedger unit{Domain::interval(-1.0, 1.0), {1.0, 1.0, 1.0, 1.0}, 1.0, {0.0}, {}};
  CHECK(solve_strategy3_closed_form(unit, 0.125, 0.5).gains.a == doctest::Approx(1.0));
  BoundsLedger flat = unit;
  flat.norms[3] = 0.0;
  CHECK_THROWS_AS(solve_strategy3_closed_form(flat, 0.1, 0.1), InvalidArgument);
  CHECK_THROWS_AS(solve_strategy3_closed_form(unit, 0.0, 0.1), InvalidArgument);
}

TEST_CASE("monomial constraints") {
  const double K1 = 0.003, K2 = 0.02;
  const auto [a, eta] = solve_monomial(1, 3, K1, 1, 0, K2);
  CHECK(a == doctest::Approx(std::cbrt(K1 / K2)).epsilon(1e-14));
  CHECK(eta == doctest::Approx(K2).epsilon(1e-14));
  CHECK(eta * a * a * a == doctest::Approx(K1).epsilon(1e-13));

  const auto [a1, e1] = solve_monomial(1, 2, 1.0, 3, 1, 1.0);
  CHECK(a1 == doctest::Approx(1.0));
  CHECK(e1 == doctest::Approx(1.0));

  // K1 -> c K1 rescales a by c^(-p2 / (q2 p1 - q1 p2)).
  const double p1 = 1, q1 = 2, p2 = 3, q2 = 1, c = 7.0;
  const double ar = solve_monomial(p1, q1, 0.5, p2, q2, 0.8).first;
  const auto [as, es] = solve_monomial(p1, q1, c * 0.5, p2, q2, 0.8);
  CHECK(as / ar == doctest::Approx(std::pow(c, -p2 / (q2 * p1 - q1 * p2))).epsilon(1e-13));
  CHECK(std::pow(es, p1) * std::pow(as, q1) == doctest::Approx(c * 0.5).epsilon(1e-13));

  CHECK_THROWS_AS(solve_monomial(2, 1, 1.0, 3, 1, 1.0), InfeasibleError);
  CHECK_THROWS_AS(solve_monomial(1, 2, 0.0, 3, 1, 1.0), InvalidArgument);
}

TEST_CASE("numeric strategy 3 with m = n = 1") {
  MetaOptProblem prob;
  prob.ledger = toy_ledger();
  prob.strategy = 3;
  const auto sol = solve_numeric(prob);
  CHECK(sol.gains.eta == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(sol.gains.a == doctest::Approx(0.207).epsilon(0.01));
  check_certificate(sol);
  CHECK(sol.provenance.size() >= 3);
}

TEST_CASE("strategy 2 with a loose averaging tolerance is limited by the envelope") {
  MetaOptProblem prob;
  prob.ledger = toy_ledger();
  prob.strategy = 2;
  prob.delta1 = 1e6;
  prob.delta2 = 0.01;
  prob.remainder = build_remainder_model(testsupport::toy_h(), prob.ledger.domain);
  prob.grid.points = 80;
  const auto sol = solve_numeric(prob);
  CHECK(sol.active == std::vector<std::string>{"delta2"});
  check_certificate(sol);
}

TEST_CASE("shrinking tolerances shrink the gains") {
  double prev = INFINITY;
  for (double d : {1e-1, 1e-2, 1e-3, 1e-4}) {
    MetaOptProblem prob;
    prob.ledger = toy_ledger();
    prob.delta1 = prob.delta2 = d;
    prob.grid.lo = 1e-7;
    prob.grid.points = 120;
    const auto sol = solve_numeric(prob);
    CHECK(sol.objective < prev);
    prev = sol.objective;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("infeasible problems name the violated constraint") {
  MetaOptProblem prob;
  prob.ledger = toy_ledger();
  prob.strategy = 4;
  prob.delta = 1e-12;
  prob.remainder = build_remainder_model(testsupport::toy_h(), prob.ledger.domain);
  prob.grid.points = 20;
  try {
    solve_numeric(prob);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).find("a+delta1+delta2") != std::string::npos);
  }
  MetaOptProblem bad = prob;
  bad.remainder.reset();
  CHECK_THROWS_AS(build_constraints(bad), InvalidArgument);
}

TEST_CASE("property: objective is monotone in the tolerances on random ledgers") {
  testsupport::ExprGen gen(1234, 1);
  for (int k = 0; k < 10; ++k) {
    MetaOptProblem prob;
    prob.ledger = synthetic_ledger(gen);
    prob.grid.points = 60;
    prob.m = 1 + k % 3;
    prob.delta1 = gen.uniform(1e-3, 1e-1);
    prob.delta2 = gen.uniform(1e-3, 1e-1);
    const auto tight = solve_numeric(prob);
    check_certificate(tight);
    prob.delta1 *= 2.0;
    const auto loose = solve_numeric(prob);
    CHECK(loose.objective >= tight.objective * (1.0 - 1e-9));
    prob.delta2 *= 2.0;
    CHECK(solve_numeric(prob).objective >= loose.objective * (1.0 - 1e-9));

    const auto c1 = solve_strategy3_closed_form(prob.ledger, 0.01, 0.01);
    const auto c2 = solve_strategy3_closed_form(prob.ledger, 0.02, 0.01);
    CHECK(c2.gains.a > c1.gains.a);
  }
}

TEST_CASE("dither frequency tuning") {
  const auto f = tune_frequency(toy_ledger(), 0.2084311, 0.01);
  CHECK(f.omega == doctest::Approx(0.4771).epsilon(1e-3));
  CHECK(f.omega_stationary == doctest::Approx(0.5 * f.omega).epsilon(1e-14));
  CHECK(f.objective_at_stationary >= f.objective_at_omega);
  CHECK(f.objective_at_omega == doctest::Approx(0.0).scale(1e-18));
  CHECK(tune_frequency(toy_ledger(), 0.2, 1e-9).omega == doctest::Approx(0.5).epsilon(1e-7));
  CHECK_THROWS_AS(tune_frequency(toy_ledger(), 0.0, 0.01), InvalidArgument);
}

TEST_CASE("filtered tuning respects both constraints and loosens with the tolerance") {
  FilteredTuningOptions o;
  o.points = 10;
  const auto tight = tune_filtered(toy_ledger(), 0.01, 0.01, o);
  const auto loose = tune_filtered(toy_ledger(), 0.01, 0.02, o);
  for (const auto* s : {&tight, &loose}) {
    const auto [osc, est] =
        filtered_constraints(toy_ledger(), s->gains.a, s->gains.eta, s->gains.mu, s->gains.gamma);
    CHECK(osc <= 0.01 * (1.0 + 1e-9));
    CHECK(est <= s->constraints[1].bound * (1.0 + 1e-9));
    CHECK(s->gains.mu > 0.0);
    CHECK(s->gains.gamma > 0.0);
    CHECK(s->kind == SchemeKind::Filtered1D);
  }
  CHECK(loose.gains.eta >= tight.gains.eta * (1.0 - 1e-9));
}

TEST_CASE("consistency checks of the closed-form gains") {
  const auto sol = solve_strategy3_closed_form(toy_ledger(), 0.01, 0.01);
  const auto s = make_scheme(SchemeKind::Basic1D, testsupport::toy_h(), sol.gains, 6);
  const auto res = average(scheme_graded_field(s, 6), 6);
  const auto rep = consistency_report(sol, res, 0.0, 1.0);
  CHECK(rep.p_near_unity);
  CHECK(rep.dominant_degree == 4);
  CHECK(rep.neglected_degrees == std::vector<int>{6});
  CHECK(rep.neglected_small);
  CHECK(rep.ratio < 0.01);

  MetaOptSolution off = sol;
  off.p = 5.0;
  CHECK_FALSE(consistency_report(off, res, 0.0, 1.0).p_near_unity);
  MetaOptSolution low = sol;
  low.p = 0.05;
  CHECK_FALSE(consistency_report(low, res, 0.0, 1.0).p_near_unity);
}

TEST_CASE("remainder model coefficients follow the engine terms") {
  const auto model = build_remainder_model(testsupport::toy_h(), Domain::interval(-1.0, 1.0), 1.0);
  CHECK(model.g_degree == 6);
  CHECK(model.u_degree == 2);
  CHECK(model.g_coef.size() == 7);
  CHECK(model.u_coef.size() == 3);
  CHECK(model.Rg(0.0, 0.0) == 0.0);
  CHECK(model.Rg(0.2, 0.01) > 0.0);
  // Doubling both gains scales the homogeneous remainder by 2^degree.
  CHECK(model.Rg(0.4, 0.02) == doctest::Approx(64.0 * model.Rg(0.2, 0.01)).epsilon(1e-12));
  CHECK(model.Ru(0.4, 0.02) == doctest::Approx(4.0 * model.Ru(0.2, 0.01)).epsilon(1e-12));
}
