#include <doctest.h>

#include <cmath>

#include "esgain/averaging.hpp"
#include "esgain/error.hpp"
#include "esgain/schemes.hpp"
#include "support.hpp"

using namespace esgain;

namespace {

// Closed-form derivatives of the toy objective.
struct ToyJet {
  double h, h1, h2, h3;
  explicit ToyJet(double x)
      : h(-std::cos(x) + x * x * x / 6.0),
        h1(std::sin(x) + 0.5 * x * x),
        h2(std::cos(x) + x),
        h3(1.0 - std::sin(x)) {}
};

SchemeInstance basic(double p, int order) {
  Gains g;
  g.a = 0.1;
  g.eta = p * 0.1;
  SchemeInstance s = make_scheme(SchemeKind::Basic1D, testsupport::toy_h(), g, order);
  return s;
}

double g_bare(const AveragingResult& r, int degree, double y, double t = 0.0) {
  const double pt[] = {y};
  return r.g[static_cast<std::size_t>(degree - 1)].eval_degree(degree, pt, t)[0];
}

}  // namespace

TEST_CASE("basic scheme: odd orders vanish and degree two is the scaled gradient") {
  const double p = 1.0;
  const auto r = average(scheme_graded_field(basic(p, 4), 4), 4);
  CHECK(r.g[0].is_zero());
  CHECK(r.g[2].is_zero());
  CHECK(g_bare(r, 2, 1.0) == doctest::Approx(-0.67074).epsilon(1e-5));
  testsupport::ExprGen gen(3, 1);
  for (int i = 0; i < 50; ++i) {
    const double y = gen.uniform(-1.5, 1.5);
    CHECK(g_bare(r, 2, y) == doctest::Approx(-0.5 * p * ToyJet(y).h1).epsilon(1e-13));
  }
}

TEST_CASE("basic scheme: degree four matches the hand-derived composite bracket") {
  testsupport::ExprGen gen(44, 1);
  for (double p : {0.3, 1.0, 2.2}) {
    const auto r = average(scheme_graded_field(basic(p, 4), 4), 4,
                           TransformConvention::ZeroMeanGenerator);
    for (int i = 0; i < 100; ++i) {
      const double y = gen.uniform(-1.0, 1.0);
      const ToyJet j(y);
      const double composite = j.h * j.h * j.h3 - 2.0 * j.h * j.h1 * j.h2 + j.h1 * j.h1 * j.h1;
      const double expected = -(p * p * p * composite + p * j.h3) / 16.0;
      CHECK(g_bare(r, 4, y) == doctest::Approx(expected).epsilon(1e-11).scale(1e-3));
    }
  }
}

TEST_CASE("convention changes the degree-four composite term but not degree two") {
  const auto zm = average(scheme_graded_field(basic(1.0, 4), 4), 4, TransformConvention::ZeroMean);
  const auto zg = average(scheme_graded_field(basic(1.0, 4), 4), 4,
                          TransformConvention::ZeroMeanGenerator);
  for (double y : {-0.8, 0.2, 0.9}) {
    CHECK(g_bare(zm, 2, y) == g_bare(zg, 2, y));
    const ToyJet j(y);
    // Zero-mean transform: the cubic gradient term carries weight 3 instead of 1.
    const double gap = g_bare(zm, 4, y) - g_bare(zg, 4, y);
    CHECK(gap == doctest::Approx(-2.0 * j.h1 * j.h1 * j.h1 / 16.0).epsilon(1e-10).scale(1e-3));
  }
}

TEST_CASE("zero-mean convention: every generator image has zero time mean") {
  const auto r = average(scheme_graded_field(basic(1.4, 5), 5), 5, TransformConvention::ZeroMean);
  for (double v : r.diagnostics.u_mean_residual) CHECK(v == 0.0);
  for (const auto& u : r.u)
    for (const auto& e : u.entries()) CHECK(e.time.mean() == 0.0);
  testsupport::ExprGen gen(9, 1);
  for (int i = 0; i < 10; ++i) {
    const double y[] = {gen.uniform(-1.0, 1.0)};
    const double shift = testsupport::period_mean(
        [&](double t) { return transform_point(r, y, t, 0.05)[0] - y[0]; }, 400);
    CHECK(std::fabs(shift) < 1e-14);
  }
}

TEST_CASE("zero-at-origin convention: transform is the identity at t = 0") {
  const auto r = average(scheme_graded_field(basic(0.8, 4), 4), 4, TransformConvention::ZeroAtOrigin);
  for (double y : {-0.9, 0.0, 0.4}) {
    const double pt[] = {y};
    CHECK(transform_point(r, pt, 0.0, 0.1)[0] == doctest::Approx(y).epsilon(1e-15));
    CHECK(transform_point(r, pt, 2.0 * M_PI, 0.1)[0] == doctest::Approx(y).epsilon(1e-14));
  }
}

TEST_CASE("first transform term is the cos-phase multiple of h") {
  const double p = 1.2;
  const auto r = average(scheme_graded_field(basic(p, 2), 2), 2);
  for (double y : {-0.5, 0.7}) {
    const double pt[] = {y};
    for (double t : {0.0, 1.1, 3.0}) {
      const double u1 = r.u[0].eval_degree(1, pt, t)[0];
      CHECK(u1 == doctest::Approx(p * ToyJet(y).h * std::cos(t)).epsilon(1e-13));
    }
  }
}

TEST_CASE("planar scheme: degree two holds gradient and h-weighted cross terms") {
  const Expr h = parse_expr("x1^2 + sin(x2)", 2);
  Gains g;
  g.a = 0.1;
  g.eta = 0.07;
  const SchemeInstance s = make_scheme(SchemeKind::Planar, h, g, 2);
  const double p = g.p();
  const auto r = average(scheme_graded_field(s, 2), 2);
  CHECK(r.g[0].is_zero());
  testsupport::ExprGen gen(21, 2);
  for (int i = 0; i < 30; ++i) {
    const auto y = gen.point();
    const double hv = y[0] * y[0] + std::sin(y[1]), d1 = 2.0 * y[0], d2 = std::cos(y[1]);
    const auto got = r.g[1].eval_degree(2, y, 0.0);
    CHECK(got[0] == doctest::Approx(-0.5 * p * d1 - 0.5 * p * p * hv * d2).epsilon(1e-12));
    CHECK(got[1] == doctest::Approx(-0.5 * p * d2 + 0.5 * p * p * hv * d1).epsilon(1e-12));
  }
}

TEST_CASE("planar scheme: sin t and sin 2t channels decouple at leading order") {
  const Expr h = parse_expr("x1*x2 + x1^2", 2);
  Gains g;
  g.a = 0.1;
  g.eta = 0.1;
  SchemeInstance s = make_scheme(SchemeKind::Planar, h, g, 2);
  s.dither.channels = {{Waveform::Sin, 1}, {Waveform::Sin, 2}};
  const auto r = average(scheme_graded_field(s, 2), 2);
  testsupport::ExprGen gen(22, 2);
  for (int i = 0; i < 20; ++i) {
    const auto y = gen.point();
    const auto got = r.g[1].eval_degree(2, y, 0.0);
    // Mean products: sin t * sin 2t -> 0; sin t * (-cos 2t / 2) -> 0.
    CHECK(got[0] == doctest::Approx(-0.5 * (y[1] + 2.0 * y[0])).epsilon(1e-12));
    CHECK(got[1] == doctest::Approx(-0.5 * y[0]).epsilon(1e-12));
  }
}

TEST_CASE("filtered scheme: dominant averaged terms") {
  Gains g;
  g.a = 0.05;
  g.eta = 0.004;
  g.m = 2;
  g.n = 1;
  g.mu = 0.02;
  g.gamma = 0.3;
  const SchemeInstance s = make_scheme(SchemeKind::Filtered1D, testsupport::toy_h(), g, 2);
  const auto r = average(scheme_graded_field(s, 2), 2);
  const double eps = g.eps();
  testsupport::ExprGen gen(5, 1);
  for (int i = 0; i < 20; ++i) {
    const double x = gen.uniform(-1.0, 1.0);
    const ToyJet jt(x);
    const double y[] = {x, jt.h + gen.uniform(-0.2, 0.2), gen.uniform(-0.5, 0.5)};
    std::vector<double> sum(3, 0.0);
    for (int d = 1; d <= 2; ++d) {
      const auto gd = r.g[static_cast<std::size_t>(d - 1)].eval(y, 0.0, eps);
      for (int k = 0; k < 3; ++k) sum[k] += gd[k];
    }
    CHECK(sum[0] == doctest::Approx(-g.eta * y[2]).epsilon(1e-12));
    CHECK(sum[1] == doctest::Approx(g.mu * (jt.h - y[1])).epsilon(1e-12));
    CHECK(sum[2] == doctest::Approx(0.5 * g.a * g.gamma * (jt.h1 - y[2])).epsilon(1e-12));
  }
}

TEST_CASE("residual of the averaged system decays one order above the truncation") {
  std::vector<ResidualSample> samples;
  for (int i = 0; i < 7; ++i)
    for (double t : {0.4, 1.7, 3.3, 5.2}) samples.push_back({{-0.9 + 0.3 * i}, t});
  const std::vector<double> eps = {0.04, 0.02, 0.01};
  for (int n = 1; n <= 3; ++n) {
    SchemeInstance s = basic(1.1, n + 3);
    const GradedField full = scheme_graded_field(s, n + 3);
    const auto r = average(full.truncated(n), n);
    const auto rep = autonomy_residual(full, r, eps, samples);
    INFO("n = " << n << ", exponent " << rep.exponent);
    CHECK(rep.exponent == doctest::Approx(n + 1.0).epsilon(0.3 / (n + 1.0)));
    CHECK_FALSE(rep.identically_zero);
  }
}

TEST_CASE("zero field averages to zero with an identically zero residual") {
  const GradedField zero(1, 3);
  const auto r = average(zero, 3);
  for (const auto& gi : r.g) CHECK(gi.is_zero());
  const std::vector<ResidualSample> samples = {{{0.1}, 0.5}, {{-0.4}, 2.0}};
  const std::vector<double> eps = {0.1, 0.05};
  const auto rep = autonomy_residual(zero, r, eps, samples);
  CHECK(rep.identically_zero);
  CHECK(rep.exponent == 0.0);
}

TEST_CASE("averaging is deterministic") {
  const GradedField f = scheme_graded_field(basic(0.9, 5), 5);
  const auto a = average(f, 5), b = average(f, 5);
  for (std::size_t i = 0; i < a.g.size(); ++i) CHECK(a.g[i].to_string() == b.g[i].to_string());
  CHECK(a.transform().to_string() == b.transform().to_string());
}

TEST_CASE("autonomous input is its own average") {
  GradedField f(1, 3);
  f.add(0, 2, parse_expr("-x", 1), TrigPoly(1.0));
  const auto r = average(f, 3);
  CHECK(r.g[1].to_string() == f.to_string());
  CHECK(r.transform().is_zero());
}
