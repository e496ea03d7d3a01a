#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace esgain {

enum class Op { Const, Var, Sum, Product, Neg, Pow, Sin, Cos, Exp };

/// Immutable symbolic scalar expression over state variables x1..xN.
///
/// Nodes are shared and never mutated, so an Expr can be copied freely and
/// evaluated from several threads. Every node carries a canonical key (its
/// fully parenthesized print with 17 significant digits); two expressions are
/// structurally equal iff their keys are equal.
///
/// The static factories build nodes verbatim. The free functions `operator+`,
/// `operator*`, `power`, ... apply the light simplification used everywhere
/// else: constant folding, 0/1 identities and flattening of nested sums and
/// products.
class Expr {
 public:
  Expr();  // constant zero

  static Expr constant(double value);
  static Expr variable(int index);
  static Expr sum(std::vector<Expr> terms);
  static Expr product(std::vector<Expr> factors);
  static Expr neg(Expr arg);
  static Expr pow(Expr base, unsigned exponent);
  static Expr sin(Expr arg);
  static Expr cos(Expr arg);
  static Expr exp(Expr arg);

  Op op() const;
  double value() const;        // Const only
  int index() const;           // Var only
  unsigned exponent() const;   // Pow only
  const std::vector<Expr>& args() const;

  bool is_constant() const { return op() == Op::Const; }
  bool is_constant(double v) const { return op() == Op::Const && value() == v; }

  /// Canonical structural key.
  const std::string& key() const;
  std::size_t node_count() const;
  std::size_t depth() const;
  /// Highest variable index referenced, or -1 for a closed expression.
  int max_variable() const;

  friend bool operator==(const Expr& a, const Expr& b) { return a.key() == b.key(); }
  friend bool operator<(const Expr& a, const Expr& b) { return a.key() < b.key(); }

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node);
  static Expr finish(std::shared_ptr<Node> node);
  std::shared_ptr<const Node> node_;
};

// Simplifying constructors.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator*(double c, const Expr& a);
Expr add_all(std::vector<Expr> terms);
Expr multiply_all(std::vector<Expr> factors);
Expr power(const Expr& base, unsigned exponent);
Expr sin(const Expr& arg);
Expr cos(const Expr& arg);
Expr exp(const Expr& arg);

/// Prints `e` in the parser grammar, fully parenthesized. With `dim == 1` the
/// single variable is named "x", otherwise variables are named x1, x2, ...
std::string to_string(const Expr& e, int dim = 1);

/// Parses `text` in the grammar
///   expr   := term (('+'|'-') term)*
///   term   := factor ('*' factor)*
///   factor := number | var | func '(' expr ')' | factor '^' uint | '(' expr ')'
/// with an optional leading unary minus on a factor. Variables are "x" when
/// dim == 1 and "x1".."x<dim>" otherwise. Throws ParseError.
Expr parse_expr(std::string_view text, int dim);

/// Exact symbolic derivative with respect to variable `axis`.
Expr differentiate(const Expr& e, int axis);
/// k-th derivative with respect to `axis`.
Expr differentiate(const Expr& e, int axis, unsigned k);

/// Evaluates `e`; throws OverflowError on a non-finite result and
/// InvalidArgument when `point` is too short for the referenced variables.
double eval_expr(const Expr& e, std::span<const double> point);
/// Same arithmetic as eval_expr without any checks.
double eval_unchecked(const Expr& e, std::span<const double> point);

/// Flattened postfix form of an Expr for hot loops. Produces bit-identical
/// results to eval_unchecked; performs no checks.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);

  double operator()(std::span<const double> point) const;
  int max_variable() const { return max_var_; }

 private:
  struct Instr {
    Op op;
    std::uint32_t arg;  // variable index, operand count or exponent
    double value;
  };
  void emit(const Expr& e, int depth);

  std::vector<Instr> code_;
  int stack_size_ = 0;
  int max_var_ = -1;
};

}  // namespace esgain
