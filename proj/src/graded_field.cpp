#include "esgain/graded_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "esgain/error.hpp"

namespace esgain {

namespace {

constexpr double kCancelRel = 64 * std::numeric_limits<double>::epsilon();

using FactorMap = std::map<std::string, std::pair<Expr, unsigned>>;

void collect(const Expr& e, unsigned power, double& coef, FactorMap& out) {
  switch (e.op()) {
    case Op::Const:
      for (unsigned i = 0; i < power; ++i) coef *= e.value();
      return;
    case Op::Neg:
      if (power % 2) coef = -coef;
      collect(e.args()[0], power, coef, out);
      return;
    case Op::Product:
      for (const Expr& a : e.args()) collect(a, power, coef, out);
      return;
    case Op::Pow:
      collect(e.args()[0], power * e.exponent(), coef, out);
      return;
    default: {
      if (power == 0) return;
      auto [it, fresh] = out.try_emplace(e.key(), e, 0u);
      it->second.second += power;
      return;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Monomial

void Monomial::rebuild_key() {
  if (factors_.empty()) {
    key_ = "1";
    return;
  }
  key_.clear();
  for (const auto& [base, k] : factors_) {
    if (!key_.empty()) key_ += '*';
    key_ += base.key();
    if (k != 1) key_ += "^" + std::to_string(k);
  }
}

std::pair<double, Monomial> Monomial::split(const Expr& e) {
  double coef = 1.0;
  FactorMap fm;
  collect(e, 1, coef, fm);
  Monomial m;
  m.factors_.reserve(fm.size());
  for (auto& [key, fac] : fm) m.factors_.push_back(std::move(fac));
  m.rebuild_key();
  return {coef, std::move(m)};
}

Expr Monomial::to_expr() const {
  if (factors_.empty()) return Expr::constant(1.0);
  std::vector<Expr> fs;
  fs.reserve(factors_.size());
  for (const auto& [base, k] : factors_) fs.push_back(power(base, k));
  return multiply_all(std::move(fs));
}

double Monomial::eval(std::span<const double> point) const {
  double v = 1.0;
  for (const auto& [base, k] : factors_) {
    const double b = eval_unchecked(base, point);
    for (unsigned i = 0; i < k; ++i) v *= b;
  }
  return v;
}

Monomial operator*(const Monomial& a, const Monomial& b) {
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  Monomial r;
  r.factors_.reserve(a.factors_.size() + b.factors_.size());
  auto i = a.factors_.begin(), j = b.factors_.begin();
  while (i != a.factors_.end() || j != b.factors_.end()) {
    if (j == b.factors_.end() || (i != a.factors_.end() && i->first.key() < j->first.key())) {
      r.factors_.push_back(*i++);
    } else if (i == a.factors_.end() || j->first.key() < i->first.key()) {
      r.factors_.push_back(*j++);
    } else {
      r.factors_.emplace_back(i->first, i->second + j->second);
      ++i;
      ++j;
    }
  }
  r.rebuild_key();
  return r;
}

namespace {

// Derivatives of atoms recur constantly during bracket expansion.
const std::pair<double, Monomial>& atom_derivative(const Expr& atom, int axis) {
  thread_local std::unordered_map<std::string, std::pair<double, Monomial>> cache;
  std::string key = atom.key();
  key += '#';
  key += std::to_string(axis);
  auto it = cache.find(key);
  if (it == cache.end()) {
    Expr d = differentiate(atom, axis);
    std::pair<double, Monomial> v = d.is_constant(0.0) ? std::pair<double, Monomial>{0.0, {}}
                                                        : Monomial::split(d);
    it = cache.emplace(std::move(key), std::move(v)).first;
  }
  return it->second;
}

}  // namespace

std::vector<std::pair<double, Monomial>> Monomial::partial(int axis) const {
  std::vector<std::pair<double, Monomial>> out;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const auto& [base, k] = factors_[i];
    if (base.max_variable() < axis) continue;
    const auto& [c, dm] = atom_derivative(base, axis);
    if (c == 0.0) continue;
    Monomial rest;
    rest.factors_ = factors_;
    if (k == 1) rest.factors_.erase(rest.factors_.begin() + static_cast<long>(i));
    else rest.factors_[i].second = k - 1;
    rest.rebuild_key();
    out.emplace_back(static_cast<double>(k) * c, rest * dm);
  }
  return out;
}

// ---------------------------------------------------------------------------
// GradedField

GradedField::GradedField(int dim, int max_order)
    : dim_(dim), max_order_(max_order), harmonic_cap_(4 * max_order) {
  if (dim < 1) throw InvalidArgument("field dimension must be positive");
  if (max_order < 1) throw InvalidArgument("field order must be positive");
}

void GradedField::insert(Key key, const Monomial& mono, const TrigPoly& time) {
  if (time.is_zero()) return;
  if (time.max_harmonic() > harmonic_cap_)
    throw CapacityError("harmonic overflow at degree " + std::to_string(key.degree) + ": harmonic " +
                        std::to_string(time.max_harmonic()) + " exceeds cap " +
                        std::to_string(harmonic_cap_));
  auto it = terms_.find(key);
  if (it == terms_.end()) {
    if (terms_.size() >= term_cap_)
      throw CapacityError("term count exceeds cap " + std::to_string(term_cap_) + " at degree " +
                          std::to_string(key.degree));
    const int degree = key.degree, component = key.component;
    terms_.emplace(std::move(key), Entry{degree, component, mono, time});
    return;
  }
  TrigPoly sum = TrigPoly::add_cancelling(it->second.time, time, kCancelRel);
  if (sum.is_zero()) terms_.erase(it);
  else it->second.time = std::move(sum);
}

void GradedField::add(int component, int degree, const Monomial& mono, const TrigPoly& time) {
  if (component < 0 || component >= dim_) throw InvalidArgument("component out of range");
  if (degree < 1) throw InvalidArgument("epsilon degree must be at least 1");
  if (degree > max_order_) return;
  insert(Key{degree, component, mono.key()}, mono, time);
}

void GradedField::add(int component, int degree, const Expr& space, const TrigPoly& time) {
  if (space.is_constant(0.0)) return;
  auto [c, mono] = Monomial::split(space);
  if (c == 0.0) return;
  add(component, degree, mono, time * c);
}

void GradedField::add_term(const SeparableTerm& term) {
  if (static_cast<int>(term.space.size()) != dim_)
    throw InvalidArgument("term dimension does not match field dimension");
  for (int c = 0; c < dim_; ++c) add(c, term.eps_degree, term.space[c], term.time);
}

std::vector<GradedField::Entry> GradedField::entries() const {
  std::vector<Entry> out;
  out.reserve(terms_.size());
  for (const auto& [k, e] : terms_) out.push_back(e);
  return out;
}

std::vector<SeparableTerm> GradedField::terms() const {
  std::vector<SeparableTerm> out;
  out.reserve(terms_.size());
  for (const auto& [k, e] : terms_) {
    SeparableTerm t;
    t.space.assign(static_cast<std::size_t>(dim_), Expr::constant(0.0));
    t.space[e.component] = e.mono.to_expr();
    t.time = e.time;
    t.eps_degree = e.degree;
    out.push_back(std::move(t));
  }
  return out;
}

int GradedField::min_degree() const { return terms_.empty() ? 0 : terms_.begin()->first.degree; }

int GradedField::max_harmonic() const {
  int k = 0;
  for (const auto& [key, e] : terms_) k = std::max(k, e.time.max_harmonic());
  return k;
}

bool GradedField::is_autonomous() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const auto& kv) { return kv.second.time.is_constant(); });
}

namespace {

GradedField like(const GradedField& f, int order) {
  GradedField r(f.dim(), order);
  r.set_harmonic_cap(f.harmonic_cap());
  r.set_term_cap(f.term_cap());
  return r;
}

}  // namespace

GradedField GradedField::degree_part(int degree) const {
  GradedField r = like(*this, max_order_);
  for (const auto& [k, e] : terms_)
    if (e.degree == degree) r.insert(k, e.mono, e.time);
  return r;
}

GradedField GradedField::truncated(int order) const {
  GradedField r = like(*this, std::max(1, std::min(order, max_order_)));
  for (const auto& [k, e] : terms_)
    if (e.degree <= order) r.insert(k, e.mono, e.time);
  return r;
}

GradedField GradedField::time_mean() const {
  GradedField r = like(*this, max_order_);
  for (const auto& [k, e] : terms_) r.insert(k, e.mono, TrigPoly(e.time.mean()));
  return r;
}

GradedField GradedField::time_antiderivative() const {
  GradedField r = like(*this, max_order_);
  for (const auto& [k, e] : terms_) r.insert(k, e.mono, e.time.antiderivative());
  return r;
}

GradedField GradedField::time_derivative() const {
  GradedField r = like(*this, max_order_);
  for (const auto& [k, e] : terms_) r.insert(k, e.mono, e.time.derivative());
  return r;
}

GradedField GradedField::partial(int axis) const {
  GradedField r = like(*this, max_order_);
  for (const auto& [k, e] : terms_) {
    for (const auto& [c, dm] : e.mono.partial(axis)) r.add(e.component, e.degree, dm, e.time * c);
  }
  return r;
}

GradedField GradedField::scaled(double s) const {
  GradedField r = like(*this, max_order_);
  if (s == 0.0) return r;
  for (const auto& [k, e] : terms_) r.insert(k, e.mono, e.time * s);
  return r;
}

GradedField& GradedField::operator+=(const GradedField& o) {
  if (o.dim_ != dim_) throw InvalidArgument("dimension mismatch in field addition");
  for (const auto& [k, e] : o.terms_)
    if (e.degree <= max_order_) insert(k, e.mono, e.time);
  return *this;
}

GradedField& GradedField::operator-=(const GradedField& o) {
  if (o.dim_ != dim_) throw InvalidArgument("dimension mismatch in field subtraction");
  for (const auto& [k, e] : o.terms_)
    if (e.degree <= max_order_) insert(k, e.mono, e.time * -1.0);
  return *this;
}

std::vector<double> GradedField::eval(std::span<const double> y, double t, double eps) const {
  if (static_cast<int>(y.size()) != dim_) throw InvalidArgument("point dimension mismatch");
  std::vector<double> epow(static_cast<std::size_t>(max_order_) + 1, 1.0);
  for (std::size_t i = 1; i < epow.size(); ++i) epow[i] = epow[i - 1] * eps;
  std::vector<double> out(static_cast<std::size_t>(dim_), 0.0);
  for (const auto& [k, e] : terms_) out[e.component] += epow[e.degree] * e.mono.eval(y) * e.time(t);
  return out;
}

std::vector<double> GradedField::eval_degree(int degree, std::span<const double> y,
                                             double t) const {
  if (static_cast<int>(y.size()) != dim_) throw InvalidArgument("point dimension mismatch");
  std::vector<double> out(static_cast<std::size_t>(dim_), 0.0);
  for (const auto& [k, e] : terms_)
    if (e.degree == degree) out[e.component] += e.mono.eval(y) * e.time(t);
  return out;
}

std::vector<Expr> GradedField::autonomous_expr(int degree) const {
  std::vector<std::vector<Expr>> parts(static_cast<std::size_t>(dim_));
  for (const auto& [k, e] : terms_) {
    if (e.degree != degree) continue;
    if (!e.time.is_constant()) throw InvalidArgument("degree part is not autonomous");
    parts[e.component].push_back(e.time.mean() * e.mono.to_expr());
  }
  std::vector<Expr> out;
  out.reserve(parts.size());
  for (auto& p : parts) out.push_back(add_all(std::move(p)));
  return out;
}

std::string GradedField::to_string(int var_dim) const {
  std::string out;
  for (const auto& [k, e] : terms_) {
    out += "[" + std::to_string(e.component) + "] eps^" + std::to_string(e.degree) + " * (" +
           esgain::to_string(e.mono.to_expr(), var_dim) + ") * (" + e.time.to_string() + ")\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lie operators

namespace {

void require_same_dim(const GradedField& a, const GradedField& b) {
  if (a.dim() != b.dim())
    throw InvalidArgument("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
}

GradedField result_for(const GradedField& w, const GradedField& f, int trunc) {
  GradedField r(f.dim(), std::max(trunc, 1));
  r.set_harmonic_cap(std::max(w.harmonic_cap(), f.harmonic_cap()));
  r.set_term_cap(std::min(w.term_cap(), f.term_cap()));
  return r;
}

}  // namespace

GradedField directional_derivative(const GradedField& w, const GradedField& f, int trunc) {
  require_same_dim(w, f);
  GradedField r = result_for(w, f, trunc);
  if (w.is_zero() || f.is_zero()) return r;
  const int dim = f.dim();
  std::vector<std::vector<GradedField::Entry>> by_comp(static_cast<std::size_t>(dim));
  for (auto& e : w.entries()) by_comp[e.component].push_back(std::move(e));
  const int wmin = w.min_degree();
  for (const auto& fe : f.entries()) {
    if (fe.degree + wmin > trunc) continue;
    for (int k = 0; k < dim; ++k) {
      if (by_comp[k].empty()) continue;
      const auto parts = fe.mono.partial(k);
      for (const auto& [c, dm] : parts) {
        for (const auto& we : by_comp[k]) {
          const int deg = fe.degree + we.degree;
          if (deg > trunc) continue;
          r.add(fe.component, deg, dm * we.mono, (fe.time * we.time) * c);
        }
      }
    }
  }
  return r;
}

GradedField lie_bracket(const GradedField& w, const GradedField& f, int trunc) {
  GradedField r = directional_derivative(w, f, trunc);
  r -= directional_derivative(f, w, trunc);
  return r;
}

GradedField shifted_bracket(const GradedField& w, const GradedField& f, int trunc) {
  GradedField r = lie_bracket(w, f, trunc);
  r -= w.time_derivative().truncated(trunc);
  return r;
}

GradedField exp_lie_series(const GradedField& w, const GradedField& f, int trunc) {
  require_same_dim(w, f);
  GradedField result = result_for(w, f, trunc);
  result += f.truncated(trunc);
  GradedField term = shifted_bracket(w, f, trunc);
  for (int p = 2; !term.is_zero(); ++p) {
    result += term;
    term = lie_bracket(w, term, trunc).scaled(1.0 / p);
  }
  return result;
}

GradedField exp_identity(const GradedField& w, int trunc) {
  GradedField result = result_for(w, w, trunc);
  GradedField term = w.truncated(trunc);
  for (int p = 2; !term.is_zero(); ++p) {
    result += term;
    term = directional_derivative(w, term, trunc).scaled(1.0 / p);
  }
  return result;
}

GradedField exp_operator_apply(const GradedField& w, const std::optional<GradedField>& target,
                               int trunc) {
  if (target) return exp_lie_series(w, *target, trunc);
  return exp_identity(w, trunc);
}

}  // namespace esgain
