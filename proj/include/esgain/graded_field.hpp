#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "esgain/expr.hpp"
#include "esgain/trigpoly.hpp"

namespace esgain {

/// Product of atomic factors raised to positive powers, kept sorted by the
/// factors' structural keys. Atoms are any non-constant expression that is not
/// itself a product, power or negation (variables, sums, sin/cos/exp).
class Monomial {
 public:
  Monomial() = default;  // the constant 1

  const std::vector<std::pair<Expr, unsigned>>& factors() const { return factors_; }
  const std::string& key() const { return key_; }
  bool is_one() const { return factors_.empty(); }
  Expr to_expr() const;
  double eval(std::span<const double> point) const;

  friend Monomial operator*(const Monomial& a, const Monomial& b);
  /// Partial derivative as a list of (coefficient, monomial) terms.
  std::vector<std::pair<double, Monomial>> partial(int axis) const;

  /// Splits an expression into a numeric coefficient times a canonical
  /// monomial. Sums are kept whole as atoms.
  static std::pair<double, Monomial> split(const Expr& e);

 private:
  void rebuild_key();
  std::vector<std::pair<Expr, unsigned>> factors_;
  std::string key_ = "1";
};

/// One separable term eps^degree * space(y) * time(t).
struct SeparableTerm {
  std::vector<Expr> space;  // one entry per state dimension
  TrigPoly time;
  int eps_degree = 1;
};

/// Vector field sum_i eps^i f_i(y, t) with each f_i a finite sum of separable
/// terms. Internally every term touches a single component; its numeric
/// coefficient lives in the TrigPoly and its space part is a canonical
/// Monomial, so terms with equal (degree, component, monomial) merge.
class GradedField {
 public:
  struct Entry {
    int degree;
    int component;
    Monomial mono;
    TrigPoly time;
  };

  GradedField(int dim, int max_order);

  int dim() const { return dim_; }
  int max_order() const { return max_order_; }
  /// Highest harmonic any term may carry; 4 * max_order by default.
  int harmonic_cap() const { return harmonic_cap_; }
  void set_harmonic_cap(int cap) { harmonic_cap_ = cap; }
  std::size_t term_cap() const { return term_cap_; }
  void set_term_cap(std::size_t cap) { term_cap_ = cap; }

  /// Adds a term; terms above max_order are dropped.
  void add(int component, int degree, const Expr& space, const TrigPoly& time);
  void add(int component, int degree, const Monomial& mono, const TrigPoly& time);
  void add_term(const SeparableTerm& term);

  std::vector<SeparableTerm> terms() const;
  std::vector<Entry> entries() const;
  std::size_t term_count() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  /// Lowest degree present, 0 for the zero field.
  int min_degree() const;
  int max_harmonic() const;
  /// True when every time factor is constant.
  bool is_autonomous() const;

  GradedField degree_part(int degree) const;
  GradedField truncated(int order) const;
  GradedField time_mean() const;
  /// Zero-mean antiderivative in t of the oscillating part.
  GradedField time_antiderivative() const;
  GradedField time_derivative() const;
  /// Partial derivative of every component with respect to y_axis.
  GradedField partial(int axis) const;
  GradedField scaled(double s) const;

  GradedField& operator+=(const GradedField& o);
  GradedField& operator-=(const GradedField& o);
  friend GradedField operator+(GradedField a, const GradedField& b) { return a += b; }
  friend GradedField operator-(GradedField a, const GradedField& b) { return a -= b; }

  std::vector<double> eval(std::span<const double> y, double t, double eps) const;
  std::vector<double> eval_degree(int degree, std::span<const double> y, double t) const;

  /// Component expressions of the degree part; requires constant time factors.
  std::vector<Expr> autonomous_expr(int degree) const;

  /// One "eps^i * (expr) * (trig)" line per term, prefixed by the component.
  std::string to_string(int var_dim = 1) const;

 private:
  struct Key {
    int degree;
    int component;
    std::string mono;
    auto operator<=>(const Key&) const = default;
  };
  void insert(Key key, const Monomial& mono, const TrigPoly& time);

  int dim_;
  int max_order_;
  int harmonic_cap_;
  std::size_t term_cap_ = 500000;
  std::map<Key, Entry> terms_;
};

/// D_w f = (grad f) . w, truncated at `trunc`.
GradedField directional_derivative(const GradedField& w, const GradedField& f, int trunc);
/// L_w f = D_w f - D_f w, truncated at `trunc`.
GradedField lie_bracket(const GradedField& w, const GradedField& f, int trunc);
/// L_w f - d/dt w, truncated at `trunc`.
GradedField shifted_bracket(const GradedField& w, const GradedField& f, int trunc);
/// exp(L~_w) f = f + sum_{p>=1} L_w^{p-1}(L_w f - d/dt w) / p!.
GradedField exp_lie_series(const GradedField& w, const GradedField& f, int trunc);
/// exp(D_w) y - y = sum_{p>=1} D_w^{p-1} w / p!.
GradedField exp_identity(const GradedField& w, int trunc);
/// exp_identity when `target` is empty, exp_lie_series otherwise.
GradedField exp_operator_apply(const GradedField& w, const std::optional<GradedField>& target,
                               int trunc);

}  // namespace esgain
