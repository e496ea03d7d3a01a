#pragma once

#include <string>
#include <utility>
#include <vector>

namespace esgain {

/// Finite trigonometric polynomial of period 2*pi:
///   p(t) = c0 + sum_{k=1..K} (a_k cos kt + b_k sin kt).
/// Trailing harmonics whose coefficients are both exactly zero are trimmed.
class TrigPoly {
 public:
  TrigPoly() = default;
  explicit TrigPoly(double c0) : c0_(c0) {}
  TrigPoly(double c0, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs);

  static TrigPoly cos_k(int k, double amplitude = 1.0);
  static TrigPoly sin_k(int k, double amplitude = 1.0);

  double mean() const { return c0_; }
  int max_harmonic() const { return static_cast<int>(a_.size()); }
  /// a_k, zero when k exceeds the stored range.
  double cos_coeff(int k) const;
  /// b_k, zero when k exceeds the stored range.
  double sin_coeff(int k) const;

  bool is_zero() const { return c0_ == 0.0 && a_.empty(); }
  bool is_constant() const { return a_.empty(); }

  double operator()(double t) const;

  /// d/dt, harmonic-wise.
  TrigPoly derivative() const;
  /// Antiderivative of the zero-mean part; has zero mean itself.
  TrigPoly antiderivative() const;
  TrigPoly oscillating_part() const;

  TrigPoly& operator+=(const TrigPoly& o);
  TrigPoly& operator-=(const TrigPoly& o);
  TrigPoly& operator*=(double s);
  friend TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }
  friend TrigPoly operator-(TrigPoly a, const TrigPoly& b) { return a -= b; }
  friend TrigPoly operator*(TrigPoly a, double s) { return a *= s; }
  friend TrigPoly operator*(double s, TrigPoly a) { return a *= s; }
  friend TrigPoly operator*(const TrigPoly& p, const TrigPoly& q);
  friend bool operator==(const TrigPoly&, const TrigPoly&) = default;

  /// Sum where any coefficient that cancels to within `rel` of the operand
  /// magnitudes is set to exactly zero.
  static TrigPoly add_cancelling(const TrigPoly& p, const TrigPoly& q, double rel);

  std::string to_string() const;

 private:
  void trim();

  double c0_ = 0.0;
  std::vector<double> a_;  // a_[k-1] multiplies cos kt
  std::vector<double> b_;  // b_[k-1] multiplies sin kt
};

/// Exact product via product-to-sum identities.
TrigPoly trig_mul(const TrigPoly& p, const TrigPoly& q);

/// (mean, zero-mean antiderivative of p - mean).
std::pair<double, TrigPoly> trig_mean_and_antiderivative(const TrigPoly& p);

}  // namespace esgain
