#include "esgain/trigpoly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "esgain/error.hpp"

namespace esgain {

TrigPoly::TrigPoly(double c0, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs)
    : c0_(c0), a_(std::move(cos_coeffs)), b_(std::move(sin_coeffs)) {
  const std::size_t k = std::max(a_.size(), b_.size());
  a_.resize(k, 0.0);
  b_.resize(k, 0.0);
  trim();
}

TrigPoly TrigPoly::cos_k(int k, double amplitude) {
  if (k < 0) throw InvalidArgument("negative harmonic");
  if (k == 0) return TrigPoly(amplitude);
  std::vector<double> a(static_cast<std::size_t>(k), 0.0);
  a.back() = amplitude;
  return TrigPoly(0.0, std::move(a), {});
}

TrigPoly TrigPoly::sin_k(int k, double amplitude) {
  if (k < 0) throw InvalidArgument("negative harmonic");
  if (k == 0) return TrigPoly();
  std::vector<double> b(static_cast<std::size_t>(k), 0.0);
  b.back() = amplitude;
  return TrigPoly(0.0, {}, std::move(b));
}

double TrigPoly::cos_coeff(int k) const {
  if (k == 0) return c0_;
  return k >= 1 && k <= max_harmonic() ? a_[static_cast<std::size_t>(k - 1)] : 0.0;
}

double TrigPoly::sin_coeff(int k) const {
  return k >= 1 && k <= max_harmonic() ? b_[static_cast<std::size_t>(k - 1)] : 0.0;
}

void TrigPoly::trim() {
  while (!a_.empty() && a_.back() == 0.0 && b_.back() == 0.0) {
    a_.pop_back();
    b_.pop_back();
  }
}

double TrigPoly::operator()(double t) const {
  double s = c0_;
  for (std::size_t k = 0; k < a_.size(); ++k) {
    const double kt = static_cast<double>(k + 1) * t;
    s += a_[k] * std::cos(kt) + b_[k] * std::sin(kt);
  }
  return s;
}

TrigPoly TrigPoly::derivative() const {
  TrigPoly d;
  d.a_.resize(a_.size());
  d.b_.resize(b_.size());
  for (std::size_t k = 0; k < a_.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    d.a_[k] = kk * b_[k];
    d.b_[k] = -kk * a_[k];
  }
  d.trim();
  return d;
}

TrigPoly TrigPoly::antiderivative() const {
  TrigPoly r;
  r.a_.resize(a_.size());
  r.b_.resize(b_.size());
  for (std::size_t k = 0; k < a_.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    r.a_[k] = -b_[k] / kk;
    r.b_[k] = a_[k] / kk;
  }
  r.trim();
  return r;
}

TrigPoly TrigPoly::oscillating_part() const {
  TrigPoly r = *this;
  r.c0_ = 0.0;
  return r;
}

TrigPoly& TrigPoly::operator+=(const TrigPoly& o) {
  c0_ += o.c0_;
  if (o.a_.size() > a_.size()) {
    a_.resize(o.a_.size(), 0.0);
    b_.resize(o.b_.size(), 0.0);
  }
  for (std::size_t k = 0; k < o.a_.size(); ++k) {
    a_[k] += o.a_[k];
    b_[k] += o.b_[k];
  }
  trim();
  return *this;
}

TrigPoly& TrigPoly::operator-=(const TrigPoly& o) { return *this += o * -1.0; }

TrigPoly& TrigPoly::operator*=(double s) {
  c0_ *= s;
  for (auto& v : a_) v *= s;
  for (auto& v : b_) v *= s;
  trim();
  return *this;
}

TrigPoly operator*(const TrigPoly& p, const TrigPoly& q) {
  const std::size_t kp = p.a_.size(), kq = q.a_.size();
  std::vector<double> a(kp + kq, 0.0), b(kp + kq, 0.0);
  double c0 = p.c0_ * q.c0_;
  auto add_cos = [&](long m, double v) {
    m = std::labs(m);
    if (m == 0) c0 += v;
    else a[static_cast<std::size_t>(m - 1)] += v;
  };
  auto add_sin = [&](long m, double v) {
    if (m == 0) return;
    if (m < 0) {
      m = -m;
      v = -v;
    }
    b[static_cast<std::size_t>(m - 1)] += v;
  };
  for (std::size_t j = 0; j < kp; ++j) {
    add_cos(static_cast<long>(j + 1), p.a_[j] * q.c0_);
    add_sin(static_cast<long>(j + 1), p.b_[j] * q.c0_);
  }
  for (std::size_t k = 0; k < kq; ++k) {
    add_cos(static_cast<long>(k + 1), q.a_[k] * p.c0_);
    add_sin(static_cast<long>(k + 1), q.b_[k] * p.c0_);
  }
  for (std::size_t j = 0; j < kp; ++j) {
    for (std::size_t k = 0; k < kq; ++k) {
      const long J = static_cast<long>(j + 1), K = static_cast<long>(k + 1);
      const double aa = 0.5 * p.a_[j] * q.a_[k];
      const double bb = 0.5 * p.b_[j] * q.b_[k];
      const double ab = 0.5 * p.a_[j] * q.b_[k];
      const double ba = 0.5 * p.b_[j] * q.a_[k];
      // cos j cos k, sin j sin k, cos j sin k, sin j cos k
      add_cos(J - K, aa + bb);
      add_cos(J + K, aa - bb);
      add_sin(J + K, ab + ba);
      add_sin(J - K, ba - ab);
    }
  }
  return TrigPoly(c0, std::move(a), std::move(b));
}

TrigPoly trig_mul(const TrigPoly& p, const TrigPoly& q) { return p * q; }

std::pair<double, TrigPoly> trig_mean_and_antiderivative(const TrigPoly& p) {
  return {p.mean(), p.antiderivative()};
}

TrigPoly TrigPoly::add_cancelling(const TrigPoly& p, const TrigPoly& q, double rel) {
  auto combine = [rel](double x, double y) {
    const double s = x + y;
    return std::fabs(s) <= rel * (std::fabs(x) + std::fabs(y)) ? 0.0 : s;
  };
  const std::size_t k = std::max(p.a_.size(), q.a_.size());
  std::vector<double> a(k), b(k);
  for (std::size_t i = 0; i < k; ++i) {
    a[i] = combine(p.cos_coeff(static_cast<int>(i + 1)), q.cos_coeff(static_cast<int>(i + 1)));
    b[i] = combine(p.sin_coeff(static_cast<int>(i + 1)), q.sin_coeff(static_cast<int>(i + 1)));
  }
  return TrigPoly(combine(p.c0_, q.c0_), std::move(a), std::move(b));
}

std::string TrigPoly::to_string() const {
  char buf[64];
  std::string out;
  auto append = [&](double v, const char* fn, std::size_t k) {
    if (v == 0.0) return;
    if (!out.empty()) out += " + ";
    if (k == 0) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
    } else if (k == 1) {
      std::snprintf(buf, sizeof buf, "%.17g*%s(t)", v, fn);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g*%s(%zut)", v, fn, k);
    }
    out += buf;
  };
  append(c0_, "", 0);
  for (std::size_t k = 0; k < a_.size(); ++k) {
    append(a_[k], "cos", k + 1);
    append(b_[k], "sin", k + 1);
  }
  return out.empty() ? "0" : out;
}

}  // namespace esgain
