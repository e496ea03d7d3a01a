#include "esgain/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "esgain/error.hpp"

namespace esgain {

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;
  int index = 0;
  unsigned exponent = 0;
  std::vector<Expr> args;
  std::string key;
  std::size_t count = 1;
  std::size_t depth = 1;
  int max_var = -1;
};

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", std::fabs(v));
  std::string s(buf);
  if (std::signbit(v)) return "(-" + s + ")";
  return s;
}

std::string var_name(int index, int dim) {
  if (dim == 1) return "x";
  return "x" + std::to_string(index + 1);
}

std::string join(const std::vector<Expr>& args, const char* sep, int dim) {
  std::string out = "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += sep;
    out += to_string(args[i], dim);
  }
  return out + ")";
}

std::string render(Op op, double value, int index, unsigned exponent,
                   const std::vector<Expr>& args, int dim) {
  switch (op) {
    case Op::Const: return format_number(value);
    case Op::Var: return var_name(index, dim);
    case Op::Sum: return join(args, " + ", dim);
    case Op::Product: return join(args, " * ", dim);
    case Op::Neg: return "(-" + to_string(args[0], dim) + ")";
    case Op::Pow: return "(" + to_string(args[0], dim) + "^" + std::to_string(exponent) + ")";
    case Op::Sin: return "sin(" + to_string(args[0], dim) + ")";
    case Op::Cos: return "cos(" + to_string(args[0], dim) + ")";
    case Op::Exp: return "exp(" + to_string(args[0], dim) + ")";
  }
  return {};
}

}  // namespace

Expr::Expr() : Expr(constant(0.0)) {}

Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = value;
  n->key = render(Op::Const, value, 0, 0, {}, 0);
  return Expr(std::move(n));
}

Expr Expr::variable(int index) {
  if (index < 0) throw InvalidArgument("negative variable index");
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->index = index;
  n->max_var = index;
  n->key = render(Op::Var, 0.0, index, 0, {}, 0);
  return Expr(std::move(n));
}

Expr Expr::finish(std::shared_ptr<Node> n) {
  std::size_t count = 1, depth = 0;
  int max_var = -1;
  for (const Expr& a : n->args) {
    count += a.node_count();
    depth = std::max(depth, a.depth());
    max_var = std::max(max_var, a.max_variable());
  }
  n->count = count;
  n->depth = depth + 1;
  n->max_var = max_var;
  n->key = render(n->op, 0.0, 0, n->exponent, n->args, 0);
  return Expr(std::move(n));
}

Expr Expr::sum(std::vector<Expr> terms) {
  if (terms.size() < 2) throw InvalidArgument("sum needs at least two terms");
  auto n = std::make_shared<Node>();
  n->op = Op::Sum;
  n->args = std::move(terms);
  return finish(std::move(n));
}

Expr Expr::product(std::vector<Expr> factors) {
  if (factors.size() < 2) throw InvalidArgument("product needs at least two factors");
  auto n = std::make_shared<Node>();
  n->op = Op::Product;
  n->args = std::move(factors);
  return finish(std::move(n));
}

Expr Expr::neg(Expr arg) {
  auto n = std::make_shared<Node>();
  n->op = Op::Neg;
  n->args = {std::move(arg)};
  return finish(std::move(n));
}

Expr Expr::pow(Expr base, unsigned exponent) {
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->exponent = exponent;
  n->args = {std::move(base)};
  return finish(std::move(n));
}

Expr Expr::sin(Expr arg) {
  auto n = std::make_shared<Node>();
  n->op = Op::Sin;
  n->args = {std::move(arg)};
  return finish(std::move(n));
}

Expr Expr::cos(Expr arg) {
  auto n = std::make_shared<Node>();
  n->op = Op::Cos;
  n->args = {std::move(arg)};
  return finish(std::move(n));
}

Expr Expr::exp(Expr arg) {
  auto n = std::make_shared<Node>();
  n->op = Op::Exp;
  n->args = {std::move(arg)};
  return finish(std::move(n));
}

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
int Expr::index() const { return node_->index; }
unsigned Expr::exponent() const { return node_->exponent; }
const std::vector<Expr>& Expr::args() const { return node_->args; }
const std::string& Expr::key() const { return node_->key; }
std::size_t Expr::node_count() const { return node_->count; }
std::size_t Expr::depth() const { return node_->depth; }
int Expr::max_variable() const { return node_->max_var; }

std::string to_string(const Expr& e, int dim) {
  if (dim != 1) return e.key();
  return render(e.op(), e.value(), e.index(), e.exponent(), e.args(), 1);
}

// ---------------------------------------------------------------------------
// Simplifying constructors

Expr add_all(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  double c = 0.0;
  bool has_const = false;
  for (auto& t : terms) {
    if (t.op() == Op::Sum) {
      for (const Expr& s : t.args()) {
        if (s.is_constant()) {
          c += s.value();
          has_const = true;
        } else {
          flat.push_back(s);
        }
      }
    } else if (t.is_constant()) {
      c += t.value();
      has_const = true;
    } else {
      flat.push_back(std::move(t));
    }
  }
  if (has_const && c != 0.0) flat.push_back(Expr::constant(c));
  if (flat.empty()) return Expr::constant(0.0);
  if (flat.size() == 1) return flat.front();
  return Expr::sum(std::move(flat));
}

Expr multiply_all(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  double c = 1.0;
  for (auto& f : factors) {
    if (f.op() == Op::Product) {
      for (const Expr& s : f.args()) {
        if (s.is_constant()) c *= s.value();
        else flat.push_back(s);
      }
    } else if (f.is_constant()) {
      c *= f.value();
    } else {
      flat.push_back(std::move(f));
    }
  }
  if (c == 0.0) return Expr::constant(0.0);
  if (flat.empty()) return Expr::constant(c);
  if (c == -1.0) {
    Expr rest = flat.size() == 1 ? flat.front() : Expr::product(std::move(flat));
    return Expr::neg(std::move(rest));
  }
  if (c != 1.0) flat.insert(flat.begin(), Expr::constant(c));
  if (flat.size() == 1) return flat.front();
  return Expr::product(std::move(flat));
}

Expr operator+(const Expr& a, const Expr& b) { return add_all({a, b}); }

Expr operator-(const Expr& a) {
  switch (a.op()) {
    case Op::Const: return Expr::constant(-a.value());
    case Op::Neg: return a.args()[0];
    case Op::Product:
      if (a.args()[0].is_constant()) {
        std::vector<Expr> f = a.args();
        f[0] = Expr::constant(-f[0].value());
        return multiply_all(std::move(f));
      }
      return Expr::neg(a);
    default: return Expr::neg(a);
  }
}

Expr operator-(const Expr& a, const Expr& b) { return add_all({a, -b}); }

Expr operator*(const Expr& a, const Expr& b) {
  // Pull negations out so that sign lands on the leading constant.
  if (a.op() == Op::Neg) return -(a.args()[0] * b);
  if (b.op() == Op::Neg) return -(a * b.args()[0]);
  return multiply_all({a, b});
}

Expr operator*(double c, const Expr& a) { return Expr::constant(c) * a; }

Expr power(const Expr& base, unsigned exponent) {
  if (exponent == 0) return Expr::constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant()) {
    double r = 1.0;
    for (unsigned i = 0; i < exponent; ++i) r *= base.value();
    return Expr::constant(r);
  }
  if (base.op() == Op::Pow) return Expr::pow(base.args()[0], base.exponent() * exponent);
  return Expr::pow(base, exponent);
}

Expr sin(const Expr& arg) {
  if (arg.is_constant()) return Expr::constant(std::sin(arg.value()));
  return Expr::sin(arg);
}

Expr cos(const Expr& arg) {
  if (arg.is_constant()) return Expr::constant(std::cos(arg.value()));
  return Expr::cos(arg);
}

Expr exp(const Expr& arg) {
  if (arg.is_constant()) return Expr::constant(std::exp(arg.value()));
  return Expr::exp(arg);
}

// ---------------------------------------------------------------------------
// Differentiation

Expr differentiate(const Expr& e, int axis) {
  if (axis < 0) throw InvalidArgument("negative axis");
  if (e.max_variable() < axis) return Expr::constant(0.0);
  const auto& a = e.args();
  switch (e.op()) {
    case Op::Const: return Expr::constant(0.0);
    case Op::Var: return Expr::constant(e.index() == axis ? 1.0 : 0.0);
    case Op::Sum: {
      std::vector<Expr> d;
      d.reserve(a.size());
      for (const Expr& t : a) d.push_back(differentiate(t, axis));
      return add_all(std::move(d));
    }
    case Op::Product: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < a.size(); ++i) {
        Expr di = differentiate(a[i], axis);
        if (di.is_constant(0.0)) continue;
        std::vector<Expr> f = a;
        f[i] = di;
        Expr t = f[0];
        for (std::size_t j = 1; j < f.size(); ++j) t = t * f[j];
        terms.push_back(t);
      }
      return add_all(std::move(terms));
    }
    case Op::Neg: return -differentiate(a[0], axis);
    case Op::Pow: {
      Expr db = differentiate(a[0], axis);
      if (db.is_constant(0.0)) return Expr::constant(0.0);
      return Expr::constant(static_cast<double>(e.exponent())) *
             (power(a[0], e.exponent() - 1) * db);
    }
    case Op::Sin: return cos(a[0]) * differentiate(a[0], axis);
    case Op::Cos: return -(sin(a[0]) * differentiate(a[0], axis));
    case Op::Exp: return e * differentiate(a[0], axis);
  }
  return Expr::constant(0.0);
}

Expr differentiate(const Expr& e, int axis, unsigned k) {
  Expr d = e;
  for (unsigned i = 0; i < k; ++i) d = differentiate(d, axis);
  return d;
}

// ---------------------------------------------------------------------------
// Evaluation

double eval_unchecked(const Expr& e, std::span<const double> point) {
  const auto& a = e.args();
  switch (e.op()) {
    case Op::Const: return e.value();
    case Op::Var: return point[static_cast<std::size_t>(e.index())];
    case Op::Sum: {
      double s = 0.0;
      for (const Expr& t : a) s += eval_unchecked(t, point);
      return s;
    }
    case Op::Product: {
      double p = 1.0;
      for (const Expr& t : a) p *= eval_unchecked(t, point);
      return p;
    }
    case Op::Neg: return -eval_unchecked(a[0], point);
    case Op::Pow: {
      const double b = eval_unchecked(a[0], point);
      double r = 1.0;
      for (unsigned i = 0; i < e.exponent(); ++i) r *= b;
      return r;
    }
    case Op::Sin: return std::sin(eval_unchecked(a[0], point));
    case Op::Cos: return std::cos(eval_unchecked(a[0], point));
    case Op::Exp: return std::exp(eval_unchecked(a[0], point));
  }
  return 0.0;
}

double eval_expr(const Expr& e, std::span<const double> point) {
  if (e.max_variable() >= static_cast<int>(point.size()))
    throw InvalidArgument("point has " + std::to_string(point.size()) +
                          " coordinates, expression uses x" +
                          std::to_string(e.max_variable() + 1));
  const double v = eval_unchecked(e, point);
  if (!std::isfinite(v)) throw OverflowError("non-finite value of " + to_string(e, 2));
  return v;
}

CompiledExpr::CompiledExpr(const Expr& e) : max_var_(e.max_variable()) { emit(e, 1); }

void CompiledExpr::emit(const Expr& e, int depth) {
  stack_size_ = std::max(stack_size_, depth);
  const auto& a = e.args();
  switch (e.op()) {
    case Op::Const: code_.push_back({Op::Const, 0, e.value()}); return;
    case Op::Var: code_.push_back({Op::Var, static_cast<std::uint32_t>(e.index()), 0.0}); return;
    case Op::Sum:
    case Op::Product:
      for (std::size_t i = 0; i < a.size(); ++i) emit(a[i], depth + static_cast<int>(i));
      code_.push_back({e.op(), static_cast<std::uint32_t>(a.size()), 0.0});
      return;
    case Op::Pow:
      emit(a[0], depth);
      code_.push_back({Op::Pow, e.exponent(), 0.0});
      return;
    default:
      emit(a[0], depth);
      code_.push_back({e.op(), 0, 0.0});
      return;
  }
}

double CompiledExpr::operator()(std::span<const double> point) const {
  constexpr int kInline = 32;
  double inline_stack[kInline];
  std::vector<double> heap;
  double* st = inline_stack;
  if (stack_size_ > kInline) {
    heap.resize(static_cast<std::size_t>(stack_size_));
    st = heap.data();
  }
  int top = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: st[top++] = in.value; break;
      case Op::Var: st[top++] = point[in.arg]; break;
      case Op::Sum: {
        const int base = top - static_cast<int>(in.arg);
        double s = 0.0;
        for (int i = base; i < top; ++i) s += st[i];
        st[base] = s;
        top = base + 1;
        break;
      }
      case Op::Product: {
        const int base = top - static_cast<int>(in.arg);
        double p = 1.0;
        for (int i = base; i < top; ++i) p *= st[i];
        st[base] = p;
        top = base + 1;
        break;
      }
      case Op::Neg: st[top - 1] = -st[top - 1]; break;
      case Op::Pow: {
        const double b = st[top - 1];
        double r = 1.0;
        for (std::uint32_t i = 0; i < in.arg; ++i) r *= b;
        st[top - 1] = r;
        break;
      }
      case Op::Sin: st[top - 1] = std::sin(st[top - 1]); break;
      case Op::Cos: st[top - 1] = std::cos(st[top - 1]); break;
      case Op::Exp: st[top - 1] = std::exp(st[top - 1]); break;
    }
  }
  return top ? st[0] : 0.0;
}

}  // namespace esgain
