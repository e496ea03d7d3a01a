#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "esgain/expr.hpp"
#include "esgain/graded_field.hpp"
#include "esgain/trigpoly.hpp"

namespace esgain {

enum class SchemeKind { Basic1D, Plant1D, Filtered1D, Planar };

std::string to_string(SchemeKind kind);
SchemeKind parse_scheme_kind(const std::string& name);

enum class Waveform { Sin, Cos };

struct DitherChannel {
  Waveform wave = Waveform::Sin;
  int harmonic = 1;

  double operator()(double t) const;
  TrigPoly trig() const;
  /// Zero-mean antiderivative.
  TrigPoly integral() const;
};

struct DitherSpec {
  std::vector<DitherChannel> channels;

  /// sin t for one channel, (cos t, sin t) for two.
  static DitherSpec standard(int channels);
};

/// Physical gains. Only the subset relevant to the scheme kind is read. The
/// averaging bookkeeping is a = eps^n, eta = p eps^m, with mu and gamma of
/// order eps for Filtered1D.
struct Gains {
  double a = 0.0;
  double eta = 0.0;
  int m = 1;
  int n = 1;
  double mu = 0.0;
  double gamma = 0.0;
  double omega = 1.0;

  /// eps = a^(1/n).
  double eps() const;
  /// p = eta / eps^m.
  double p() const;
};

struct SchemeInstance {
  SchemeKind kind = SchemeKind::Basic1D;
  Expr h;
  Gains gains;
  DitherSpec dither;
  /// Highest derivative of h kept when expanding h(x + a*dither).
  int taylor_order = 3;

  /// Number of states integrated by scheme_rhs.
  int state_dim() const;
  /// Number of arguments of h.
  int h_dim() const;
  /// Dither angular frequency in original time (omega for Plant1D, else 1).
  double dither_frequency() const;
  void validate() const;
};

/// Builds an instance with the standard dither and taylor_order = avg_order + 1.
SchemeInstance make_scheme(SchemeKind kind, const Expr& h, const Gains& gains, int avg_order = 2);

/// dx/dt = rhs(t, x), written into dx. States: Basic1D (x); Plant1D (z, x);
/// Filtered1D (x, hhat, j); Planar (x1, x2). All schemes use the descent sign.
using Rhs = std::function<void(double t, std::span<const double> x, std::span<double> dx)>;

Rhs scheme_rhs(const SchemeInstance& s);

/// The eps-graded field of the periodic part handed to the averaging engine,
/// expanded to `order`. Plant1D yields its reduced slow system in tau = omega t,
/// which is a Basic1D field. Throws InvalidArgument when taylor_order is too
/// small for the requested order.
GradedField scheme_graded_field(const SchemeInstance& s, int order);

/// Highest Taylor index needed for `order` under the instance's bookkeeping.
int required_taylor_order(const SchemeInstance& s, int order);

/// Hand-written averaged system with gains substituted. `dominant` is the
/// leading averaged field, `correction` the next displayed terms. The first
/// transform term is transform_space(y) * transform_time(t).
struct ReferenceAveraged {
  int dim = 1;
  std::vector<Expr> dominant;
  std::vector<Expr> correction;
  std::vector<Expr> transform_space;
  TrigPoly transform_time;
  std::string note;

  std::vector<Expr> field() const;
};

ReferenceAveraged reference_averaged(const SchemeInstance& s);

/// L_h g = h g' - h' g for scalar functions of one variable.
Expr lie_scalar(const Expr& h, const Expr& g);
/// L_h (L_h h').
Expr lie_composite(const Expr& h);

/// Gradient flow the scheme is designed to mimic, over the optimized
/// coordinates only (x for the 1-D schemes, (x1, x2) for Planar), in original
/// time: rate a*eta/2 for Basic1D, a*eta*omega/2 for Plant1D, eta for
/// Filtered1D, a*eta*mean(d_c^2) per Planar channel.
std::vector<Expr> ideal_flow(const SchemeInstance& s);

/// Indices of the optimized coordinates within the scheme state.
std::vector<int> optimized_states(SchemeKind kind);

}  // namespace esgain
