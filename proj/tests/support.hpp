#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "esgain/expr.hpp"

namespace testsupport {

inline constexpr const char* kToyH = "-cos(x) + 0.16666666666666666*x^3";

inline esgain::Expr toy_h() { return esgain::parse_expr(kToyH, 1); }

/// Random expression trees over `dim` variables, bounded depth, values kept
/// moderate so central differences stay accurate.
class ExprGen {
 public:
  ExprGen(unsigned seed, int dim) : rng_(seed), dim_(dim) {}

  esgain::Expr operator()(int depth) {
    using esgain::Expr;
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 8);
    switch (pick(rng_)) {
      case 0: return Expr::constant(coef());
      case 1: return Expr::variable(std::uniform_int_distribution<int>(0, dim_ - 1)(rng_));
      case 2: return (*this)(depth - 1) + (*this)(depth - 1);
      case 3: return (*this)(depth - 1) - (*this)(depth - 1);
      case 4: return (*this)(depth - 1) * (*this)(depth - 1);
      case 5: return esgain::power((*this)(depth - 1), std::uniform_int_distribution<unsigned>(2, 3)(rng_));
      case 6: return esgain::sin((*this)(depth - 1));
      case 7: return esgain::cos((*this)(depth - 1));
      default: return esgain::exp(coef() * 0.3 * (*this)(depth - 1));
    }
  }

  double coef() { return std::uniform_real_distribution<double>(-2.0, 2.0)(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::vector<double> point(double lo = -1.0, double hi = 1.0) {
    std::vector<double> p(static_cast<std::size_t>(dim_));
    for (auto& v : p) v = uniform(lo, hi);
    return p;
  }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  int dim_;
};

/// Central difference of e along `axis`.
inline double central_difference(const esgain::Expr& e, std::vector<double> x, int axis,
                                 double step = 1e-5) {
  auto xp = x, xm = x;
  xp[static_cast<std::size_t>(axis)] += step;
  xm[static_cast<std::size_t>(axis)] -= step;
  return (esgain::eval_expr(e, xp) - esgain::eval_expr(e, xm)) / (2.0 * step);
}

/// Composite Simpson rule on [0, 2*pi] with n (even) panels.
template <class F>
double period_mean(F&& f, int n = 2000) {
  const double h = 2.0 * M_PI / n;
  double s = f(0.0) + f(2.0 * M_PI);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0 / (2.0 * M_PI);
}

}  // namespace testsupport
