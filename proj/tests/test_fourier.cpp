#include <doctest.h>

#include <cmath>

#include "esgain/error.hpp"
#include "esgain/graded_field.hpp"
#include "esgain/trigpoly.hpp"
#include "support.hpp"

using namespace esgain;
using testsupport::ExprGen;

namespace {

TrigPoly random_trig(ExprGen& g, int kmax) {
  std::vector<double> a(static_cast<std::size_t>(kmax)), b(static_cast<std::size_t>(kmax));
  for (int k = 0; k < kmax; ++k) {
    a[k] = g.coef();
    b[k] = g.coef();
  }
  return TrigPoly(g.coef(), a, b);
}

}  // namespace

TEST_CASE("product-to-sum identities") {
  const TrigPoly s = TrigPoly::sin_k(1), c = TrigPoly::cos_k(1);
  const TrigPoly s2 = s * s;
  CHECK(s2.mean() == 0.5);
  CHECK(s2.cos_coeff(2) == -0.5);
  CHECK(s2.sin_coeff(2) == 0.0);
  CHECK(s2.max_harmonic() == 2);
  const TrigPoly cs = c * s;
  CHECK(cs.mean() == 0.0);
  CHECK(cs.sin_coeff(2) == 0.5);
  CHECK(cs.cos_coeff(2) == 0.0);
  CHECK(s * TrigPoly(1.0) == s);
}

TEST_CASE("mean and antiderivative") {
  const auto [m1, a1] = trig_mean_and_antiderivative(TrigPoly::cos_k(1));
  CHECK(m1 == 0.0);
  CHECK(a1 == TrigPoly::sin_k(1));
  const auto [m2, a2] = trig_mean_and_antiderivative(TrigPoly(0.5, {0.0, -0.5}, {}));
  CHECK(m2 == 0.5);
  CHECK(a2 == TrigPoly::sin_k(2, -0.25));
  const auto [m3, a3] = trig_mean_and_antiderivative(TrigPoly::sin_k(1));
  CHECK(m3 == 0.0);
  CHECK(a3 == TrigPoly::cos_k(1, -1.0));
}

TEST_CASE("trailing zero harmonics are trimmed") {
  const TrigPoly p(1.0, {1.0, 0.0, 0.0}, {0.0, 2.0, 0.0});
  CHECK(p.max_harmonic() == 2);
  CHECK((TrigPoly::sin_k(3) - TrigPoly::sin_k(3)).is_zero());
}

TEST_CASE("property: products are exact pointwise and bounded in harmonics") {
  ExprGen g(5150, 1);
  for (int k = 0; k < 200; ++k) {
    const TrigPoly p = random_trig(g, 1 + k % 4), q = random_trig(g, 1 + (k / 4) % 4);
    const TrigPoly r = p * q;
    CHECK(r.max_harmonic() <= p.max_harmonic() + q.max_harmonic());
    for (double t : {0.0, 0.7, 2.1, 4.4, 6.0})
      CHECK(r(t) == doctest::Approx(p(t) * q(t)).epsilon(1e-12).scale(10.0));
    CHECK(r.mean() == doctest::Approx(testsupport::period_mean([&](double t) { return p(t) * q(t); }))
                          .epsilon(1e-9)
                          .scale(10.0));
  }
}

TEST_CASE("property: antiderivative has zero mean and differentiates back") {
  ExprGen g(8080, 1);
  for (int k = 0; k < 200; ++k) {
    const TrigPoly p = random_trig(g, 1 + k % 5);
    const TrigPoly A = p.antiderivative();
    CHECK(A.mean() == 0.0);
    const TrigPoly back = A.derivative();
    CHECK(back.mean() == 0.0);
    for (int h = 1; h <= p.max_harmonic(); ++h) {
      CHECK(back.cos_coeff(h) == doctest::Approx(p.cos_coeff(h)).epsilon(1e-14));
      CHECK(back.sin_coeff(h) == doctest::Approx(p.sin_coeff(h)).epsilon(1e-14));
    }
    CHECK(A(0.3) == doctest::Approx(A(0.3 + 2.0 * M_PI)).epsilon(1e-12));
  }
}

TEST_CASE("lie bracket of a field with itself vanishes") {
  const Expr h = testsupport::toy_h();
  GradedField w(1, 4);
  w.add(0, 1, h, TrigPoly::cos_k(1));
  CHECK(lie_bracket(w, w, 4).is_zero());
}

TEST_CASE("constant-in-space fields commute") {
  GradedField w(2, 4), f(2, 4);
  w.add(0, 1, Expr::constant(1.5), TrigPoly::cos_k(1));
  f.add(1, 1, Expr::constant(-2.0), TrigPoly::sin_k(2));
  CHECK(lie_bracket(w, f, 4).is_zero());
}

TEST_CASE("cos and sin scaled by the same h commute") {
  const Expr h = testsupport::toy_h();
  GradedField w(1, 3), f(1, 3);
  w.add(0, 1, h, TrigPoly::cos_k(1));
  f.add(0, 1, -1.0 * h, TrigPoly::sin_k(1));
  const GradedField b = lie_bracket(w, f, 3);
  ExprGen g(11, 1);
  for (int i = 0; i < 10; ++i) {
    const auto y = g.point();
    const double t = g.uniform(0.0, 6.28);
    CHECK(std::fabs(b.eval_degree(2, y, t)[0]) < 1e-14);
  }
}

TEST_CASE("shifted bracket carries the time derivative of the generator") {
  const Expr h = testsupport::toy_h();
  GradedField w(1, 3), zero(1, 3);
  w.add(0, 1, h, TrigPoly::cos_k(1));
  const GradedField s = shifted_bracket(w, zero, 3);
  ExprGen g(12, 1);
  for (int i = 0; i < 10; ++i) {
    const auto y = g.point();
    const double t = g.uniform(0.0, 6.28);
    CHECK(s.eval_degree(1, y, t)[0] == doctest::Approx(std::sin(t) * eval_expr(h, y)).epsilon(1e-13));
  }
  CHECK(shifted_bracket(GradedField(1, 3), w, 3).is_zero());
}

TEST_CASE("bracket degrees add") {
  const Expr h = testsupport::toy_h();
  GradedField w(1, 6), f(1, 6);
  w.add(0, 2, h, TrigPoly::cos_k(1));
  f.add(0, 1, differentiate(h, 0), TrigPoly::sin_k(1));
  const GradedField b = lie_bracket(w, f, 6);
  for (const auto& e : b.entries()) CHECK(e.degree == 3);
  const GradedField s = shifted_bracket(w, f, 6);
  for (const auto& e : s.entries()) CHECK((e.degree == 3 || e.degree == 2));
}

TEST_CASE("exponential identity starts with the generator and stops by grading") {
  const Expr h = testsupport::toy_h();
  GradedField w(1, 3);
  w.add(0, 1, h, TrigPoly::cos_k(1));
  const GradedField u = exp_identity(w, 3);
  const double y[] = {0.4};
  CHECK(u.eval_degree(1, y, 0.9)[0] == doctest::Approx(w.eval_degree(1, y, 0.9)[0]));
  CHECK(u.max_order() == 3);
  for (const auto& e : u.entries()) CHECK(e.degree <= 3);
  CHECK(exp_identity(GradedField(1, 3), 3).is_zero());
  GradedField f(1, 3);
  f.add(0, 1, h, TrigPoly::sin_k(1));
  const GradedField same = exp_lie_series(GradedField(1, 3), f, 3);
  CHECK(same.to_string() == f.to_string());
}

TEST_CASE("property: lie bracket matches finite-difference Jacobians") {
  ExprGen g(2718, 2);
  for (int k = 0; k < 40; ++k) {
    GradedField w(2, 4), f(2, 4);
    Expr ws[2], fs[2];
    TrigPoly wt[2], ft[2];
    for (int c = 0; c < 2; ++c) {
      ws[c] = g(3);
      fs[c] = g(3);
      wt[c] = random_trig(g, 2);
      ft[c] = random_trig(g, 2);
      w.add(c, 1, ws[c], wt[c]);
      f.add(c, 1, fs[c], ft[c]);
    }
    const GradedField b = lie_bracket(w, f, 4);
    for (int s = 0; s < 5; ++s) {
      const auto y = g.point();
      const double t = g.uniform(0.0, 6.28);
      double wv[2], fv[2];
      for (int c = 0; c < 2; ++c) {
        wv[c] = eval_unchecked(ws[c], y) * wt[c](t);
        fv[c] = eval_unchecked(fs[c], y) * ft[c](t);
      }
      if (!std::isfinite(wv[0] + wv[1] + fv[0] + fv[1])) continue;
      const auto bv = b.eval(y, t, 1.0);
      for (int c = 0; c < 2; ++c) {
        double jf_w = 0.0, jw_f = 0.0;
        for (int j = 0; j < 2; ++j) {
          jf_w += testsupport::central_difference(fs[c], y, j) * ft[c](t) * wv[j];
          jw_f += testsupport::central_difference(ws[c], y, j) * wt[c](t) * fv[j];
        }
        const double expected = jf_w - jw_f;
        CHECK(std::fabs(bv[c] - expected) <= 1e-6 * (1.0 + std::fabs(expected)));
      }
    }
  }
}

TEST_CASE("harmonic cap is enforced") {
  GradedField w(1, 2);
  w.set_harmonic_cap(1);
  CHECK_THROWS_AS(w.add(0, 1, Expr::constant(1.0), TrigPoly::sin_k(2)), CapacityError);
}

TEST_CASE("terms above the order are dropped and equal monomials merge") {
  GradedField f(1, 2);
  const Expr h = testsupport::toy_h();
  f.add(0, 3, h, TrigPoly::sin_k(1));
  CHECK(f.is_zero());
  f.add(0, 1, h, TrigPoly::sin_k(1));
  f.add(0, 1, h, TrigPoly::cos_k(1));
  CHECK(f.term_count() == 1);
}
