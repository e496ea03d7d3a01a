#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "esgain/graded_field.hpp"

namespace esgain {

/// How the free constant K_i(y) of each generator is fixed.
enum class TransformConvention {
  ZeroMean,      ///< time-mean of every u_i vanishes, so mean(x) = y
  ZeroAtOrigin,  ///< u_i(y, 0) = 0, so x = y at t = 0 mod 2*pi
  ZeroMeanGenerator,  ///< K_i = 0: every w_i is the zero-mean antiderivative
};

struct AveragingDiagnostics {
  std::vector<std::size_t> g_terms;  ///< per degree
  std::vector<std::size_t> w_terms;
  std::vector<std::size_t> u_terms;
  /// Largest |time-mean coefficient| of u_i; exactly 0 under ZeroMean.
  std::vector<double> u_mean_residual;
};

/// Output of the order-n averaging engine for dy/dt = sum eps^i g_i(y) with
/// x = y + sum eps^i u_i(y, t). Index i-1 of each vector holds degree i.
struct AveragingResult {
  int order = 0;
  int dim = 0;
  TransformConvention convention = TransformConvention::ZeroMean;
  std::vector<GradedField> g;
  GradedField w{1, 1};
  std::vector<GradedField> u;
  AveragingDiagnostics diagnostics;

  /// sum_i g_i as one graded field (autonomous).
  GradedField averaged_field() const;
  /// sum_i u_i as one graded field.
  GradedField transform() const;
  /// Component expressions of g_degree.
  std::vector<Expr> g_expr(int degree) const;
};

/// Runs the averaging recursion to order n. For i = 1..n: E_i is the degree-i
/// part of exp(L~_w) f with w_1..w_{i-1}; g_i = mean(E_i); w_i integrates the
/// oscillating part of E_i, shifted by K_i(y) per `convention`.
/// Throws CapacityError on harmonic or term-count overflow.
AveragingResult average(const GradedField& field, int n,
                        TransformConvention convention = TransformConvention::ZeroMean);

/// x = y + sum_i eps^i u_i(y, t).
std::vector<double> transform_point(const AveragingResult& result, std::span<const double> y,
                                    double t, double eps);

struct ResidualSample {
  std::vector<double> y;
  double t = 0.0;
};

struct ResidualOptions {
  /// Samples whose transform Jacobian exceeds this condition number are a
  /// precondition violation.
  double max_condition = 1e6;
};

struct ResidualReport {
  std::vector<double> eps;
  /// sup over samples of the max-norm residual, one per eps.
  std::vector<double> sup_residual;
  /// Least-squares slope of log(sup_residual) against log(eps).
  double exponent = 0.0;
  /// All residuals were exactly zero; exponent is then reported as 0.
  bool identically_zero = false;
};

/// Residual r = (d_y U)^{-1} (f(U(y,t), t) - d_t U) - sum eps^i g_i(y) over the
/// samples for each eps, and the fitted power law sup|r| ~ eps^s (s ~ n + 1).
ResidualReport autonomy_residual(const GradedField& field, const AveragingResult& result,
                                 std::span<const double> eps_list,
                                 std::span<const ResidualSample> samples,
                                 ResidualOptions opts = {});

}  // namespace esgain
