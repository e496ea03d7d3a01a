// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "esgain/averaging.hpp"
#include "esgain/contraction.hpp"
#include "esgain/metaopt.hpp"
#include "esgain/schemes.hpp"
#include "esgain/sim.hpp"
#include "support.hpp"

using namespace esgain;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s  %2d  %-34s %s  [%.2fs < %.0fs%s]\n", pass ? "PASS" : "FAIL", id, title,
              o.detail.c_str(), secs, budget_s, in_time ? "" : " exceeded");
  std::fflush(stdout);
}

bool within(double v, double target, double tol) { return std::fabs(v - target) <= tol; }

const BoundsLedger& toy_ledger() {
  static const BoundsLedger L = build_ledger(testsupport::toy_h(), Domain::interval(-1.0, 1.0), 4);
  return L;
}

double rel_gap(double a, double b) { return std::fabs(a - b) / (1e-300 + std::max(std::fabs(a), std::fabs(b))); }

}  // namespace

int main() {
  const Expr h = testsupport::toy_h();

  criterion(1, "closed-form gains", 1.0, [&] {
    const auto s = solve_strategy3_closed_form(toy_ledger(), 0.01, 0.01);
    const bool ok = within(s.gains.eta, 0.01, 1e-6) && within(s.gains.a, 0.209, 0.003) &&
                    within(s.p, 1.09, 0.05);
    return Outcome{ok, fmt("eta=%.7f a=%.5f p=%.4f (eta 0.01+-1e-6, a 0.209+-0.003, p 1.09+-0.05)",
                           s.gains.eta, s.gains.a, s.p)};
  });

  criterion(2, "numeric first pass m=n=1", 10.0, [&] {
    MetaOptProblem prob;
    prob.ledger = toy_ledger();
    prob.strategy = 3;
    const auto s = solve_numeric(prob);
    const auto inst = make_scheme(SchemeKind::Basic1D, h, s.gains, 4);
    const auto res = average(scheme_graded_field(inst, 4), 4);
    const auto rep = consistency_report(s, res, 0.0, 1.0);
    const bool ok = within(s.gains.a, 0.207, 0.01) && within(s.gains.eta, 0.01, 0.001) &&
                    !rep.p_near_unity && within(rep.p, 0.05, 0.01);
    return Outcome{ok, fmt("a=%.5f eta=%.6f p=%.4f flagged=%s (a 0.207+-0.01, eta 0.01+-0.001, "
                           "p 0.05+-0.01 flagged)",
                           s.gains.a, s.gains.eta, rep.p, rep.p_near_unity ? "no" : "yes")};
  });

  criterion(3, "dither frequency", 1.0, [&] {
    BoundsLedger L = toy_ledger();
    L.norms[0] = 1.0;
    const auto f = tune_frequency(L, 0.209, 0.01);
    const bool ok = within(f.omega, 0.477, 0.005) && within(f.omega, 0.48, 0.01) &&
                    within(f.omega_stationary, 0.239, 0.005);
    return Outcome{ok, fmt("omega=%.5f stationary=%.5f (0.477+-0.005, 0.239+-0.005)", f.omega,
                           f.omega_stationary)};
  });

  criterion(4, "filtered scheme convergence", 30.0, [&] {
    Gains g;
    g.a = 0.33;
    g.eta = 8.8e-3;
    g.mu = 0.093;
    g.gamma = 3.8;
    const auto s = make_scheme(SchemeKind::Filtered1D, h, g);
    const double two_pi = 2.0 * std::numbers::pi;
    const double h1 = -std::cos(1.0) + 1.0 / 6.0;
    const auto tr = integrate(scheme_rhs(s), {1.0, h1, 0.0}, 400 * two_pi, two_pi / 200, 10);
    const double band = 0.02;
    const double periods = convergence_time(tr, {0.0}, band, {0}) / two_pi;
    const bool ok = periods >= 50.0 && periods <= 300.0;
    return Outcome{ok, fmt("band %.2f reached after %.2f periods (50..300)", band, periods)};
  });

  criterion(5, "engine vs displayed formulas", 30.0, [&] {
    testsupport::ExprGen gen(505, 2);
    double worst_basic = 0.0, worst_planar = 0.0;
    {
      Gains g;
      g.a = 0.15;
      g.eta = 0.12;
      const auto s = make_scheme(SchemeKind::Basic1D, h, g, 4);
      const auto res =
          average(scheme_graded_field(s, 4), 4, TransformConvention::ZeroMeanGenerator);
      const auto ref = reference_averaged(s).field();
      for (int i = 0; i < 100; ++i) {
        const double y[] = {gen.uniform(-1.0, 1.0)};
        worst_basic = std::max(worst_basic, rel_gap(res.averaged_field().eval(y, 0.0, g.eps())[0],
                                                     eval_expr(ref[0], y)));
      }
    }
    {
      Gains g;
      g.a = 0.1;
      g.eta = 0.08;
      const auto s = make_scheme(SchemeKind::Planar, parse_expr("x1^2 + x1*x2 + cos(x2)", 2), g, 2);
      const auto res = average(scheme_graded_field(s, 2), 2);
      const auto ref = reference_averaged(s).field();
      for (int i = 0; i < 100; ++i) {
        const auto y = gen.point();
        const auto e = res.averaged_field().eval(y, 0.0, g.eps());
        for (int c = 0; c < 2; ++c)
          worst_planar = std::max(worst_planar, rel_gap(e[c], eval_expr(ref[c], y)));
      }
    }
    const bool ok = worst_basic <= 1e-9 && worst_planar <= 1e-9;
    return Outcome{ok, fmt("max rel gap basic deg<=4 %.2e, planar deg 2 %.2e (<= 1e-9)",
                           worst_basic, worst_planar)};
  });

  criterion(6, "remainder order n+1", 60.0, [&] {
    std::vector<ResidualSample> samples;
    for (int i = 0; i < 7; ++i)
      for (double t : {0.4, 1.7, 3.3, 5.2}) samples.push_back({{-0.9 + 0.3 * i}, t});
    const std::vector<double> eps = {0.04, 0.02, 0.01};
    std::ostringstream d;
    bool ok = true;
    for (int n = 1; n <= 3; ++n) {
      Gains g;
      g.a = 0.1;
      g.eta = 0.11;
      const auto s = make_scheme(SchemeKind::Basic1D, h, g, n + 3);
      const GradedField full = scheme_graded_field(s, n + 3);
      const auto rep = autonomy_residual(full, average(full.truncated(n), n), eps, samples);
      ok = ok && within(rep.exponent, n + 1.0, 0.3);
      d << "n=" << n << ":" << fmt("%.3f", rep.exponent) << " ";
    }
    return Outcome{ok, d.str() + "(n+1 +-0.3)"};
  });

  criterion(7, "plant slow-state deviation", 30.0, [&] {
    const double a = 0.209, eta = 0.01, base = 0.477;
    const double nh = toy_ledger().norm(0), nh1 = toy_ledger().norm(1);
    std::ostringstream d;
    bool ok = true;
    for (double omega : {base, 0.5 * base, 2.0 * base}) {
      Gains g;
      g.a = a;
      g.eta = eta;
      g.omega = omega;
      const auto s = make_scheme(SchemeKind::Plant1D, h, g);
      const double dev = plant_slow_deviation(s, {1.0, 1.0}, 100.0);
      const double bound = plant_slow_bound(a, eta, omega, nh, nh1);
      ok = ok && dev <= 1.05 * bound;
      d << fmt("w=%.4f %.3f ", omega, dev / bound);
    }
    return Outcome{ok, d.str() + "(dev/bound <= 1.05)"};
  });

  criterion(8, "robustness tube", 5.0, [&] {
    std::ostringstream d;
    bool ok = true;
    for (double r : {0.01, 0.1, 1.0}) {
      const Rhs f = [r](double t, std::span<const double> x, std::span<double> dx) {
        dx[0] = -x[0] + r * std::sin(t);
      };
      const auto tr = integrate(f, {1.0}, 60.0, 0.01);
      const double err = asymptotic_error(tr, {0.0});
      const double tube = robustness_tube(1.0, r);
      ok = ok && err <= tube;
      d << fmt("r=%g %.4f ", r, err / tube);
    }
    return Outcome{ok, d.str() + "(|y|/(r/kappa) <= 1)"};
  });

  criterion(9, "performance map near-optimality", 300.0, [&] {
    const auto tuned = solve_strategy3_closed_form(toy_ledger(), 0.01, 0.01);
    PerfMapOptions o;
    o.horizon_periods = 1500;
    o.threads = 0;
    const auto cell = performance_cell(h, tuned.gains.a, tuned.p, o);
    const auto map = performance_map(h, log_grid(0.02, 1.0, 20), log_grid(0.1, 10.0, 20), o);
    double best = 0.0;
    for (const auto& c : map.cells)
      if (c.feasible && c.error <= 0.02) best = std::max(best, c.speed);
    const double ratio = cell.speed > 0.0 ? best / cell.speed : INFINITY;
    const bool ok = cell.feasible && cell.error <= 0.02 && ratio <= 3.0;
    return Outcome{ok, fmt("tuned speed %.5g err %.4f; best grid speed %.5g, ratio %.2f "
                           "(err <= 0.02, ratio <= 3)",
                           cell.speed, cell.error, best, ratio)};
  });

  criterion(10, "invariant suites", 300.0, [&] {
    std::ostringstream d;
    bool ok = true;
    // Derivative vs finite difference on random trees.
    {
      testsupport::ExprGen gen(1010, 1);
      int bad = 0, n = 0;
      for (int k = 0; k < 300; ++k) {
        const Expr e = gen(5), de = differentiate(e, 0);
        const auto x = gen.point();
        const double exact = eval_unchecked(de, x);
        if (!std::isfinite(exact) || !std::isfinite(eval_unchecked(e, x))) continue;
        const double c = testsupport::central_difference(e, x, 0, 1e-3);
        const double f = testsupport::central_difference(e, x, 0, 5e-4);
        if (std::fabs(c - f) > 1e-4 * (1.0 + std::fabs(f))) continue;
        ++n;
        if (std::fabs((4.0 * f - c) / 3.0 - exact) > 1e-6 * (1.0 + std::fabs(exact))) ++bad;
      }
      ok = ok && bad == 0 && n > 150;
      d << "fd " << n - bad << "/" << n << "; ";
    }
    // Zero-mean transform terms and grading.
    {
      Gains g;
      g.a = 0.1;
      g.eta = 0.1;
      const auto s = make_scheme(SchemeKind::Basic1D, h, g, 5);
      const auto res = average(scheme_graded_field(s, 5), 5);
      double worst = 0.0;
      for (double v : res.diagnostics.u_mean_residual) worst = std::max(worst, v);
      bool graded = true;
      for (int i = 1; i <= 5; ++i)
        for (const auto& e : res.g[static_cast<std::size_t>(i - 1)].entries()) graded = graded && e.degree == i;
      ok = ok && worst == 0.0 && graded;
      d << fmt("mean(u_i) %.1e; grading %s; ", worst, graded ? "ok" : "broken");
    }
    // Determinism of averaging and of a threaded map.
    {
      Gains g;
      g.a = 0.1;
      g.eta = 0.1;
      const auto s = make_scheme(SchemeKind::Basic1D, h, g, 4);
      const auto r1 = average(scheme_graded_field(s, 4), 4), r2 = average(scheme_graded_field(s, 4), 4);
      PerfMapOptions o;
      o.horizon_periods = 40;
      std::ostringstream c1, c2;
      o.threads = 1;
      performance_map(h, log_grid(0.05, 1.0, 4), log_grid(0.2, 5.0, 4), o).write_csv(c1);
      o.threads = 4;
      performance_map(h, log_grid(0.05, 1.0, 4), log_grid(0.2, 5.0, 4), o).write_csv(c2);
      const bool same = r1.averaged_field().to_string() == r2.averaged_field().to_string() &&
                        c1.str() == c2.str();
      ok = ok && same;
      d << "determinism " << (same ? "ok" : "broken") << "; ";
    }
    // Monomial closed form vs grid search.
    {
      const double K1 = 0.003, K2 = 0.02;
      const auto [a, eta] = solve_monomial(1, 3, K1, 1, 0, K2);
      const std::vector<Constraint> cs = {
          {"c1", "eta*a^3", K1, [](double aa, double e) { return e * aa * aa * aa; }},
          {"c2", "eta", K2, [](double, double e) { return e; }}};
      const auto [ga, ge] = maximize_product(cs, GridOptions{});
      const double gap = rel_gap(ga * ge, a * eta);
      ok = ok && gap <= 1e-6;
      d << fmt("monomial vs grid %.1e", gap);
    }
    return Outcome{ok, d.str()};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
