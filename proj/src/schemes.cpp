#include "esgain/schemes.hpp"

#include <cmath>
#include <numbers>

#include "esgain/error.hpp"

namespace esgain {

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Basic1D: return "Basic1D";
    case SchemeKind::Plant1D: return "Plant1D";
    case SchemeKind::Filtered1D: return "Filtered1D";
    case SchemeKind::Planar: return "Planar";
  }
  return "?";
}

SchemeKind parse_scheme_kind(const std::string& name) {
  for (auto k : {SchemeKind::Basic1D, SchemeKind::Plant1D, SchemeKind::Filtered1D,
                 SchemeKind::Planar})
    if (to_string(k) == name) return k;
  throw InvalidArgument("unknown scheme kind \"" + name + "\"");
}

double DitherChannel::operator()(double t) const {
  const double kt = harmonic * t;
  return wave == Waveform::Sin ? std::sin(kt) : std::cos(kt);
}

TrigPoly DitherChannel::trig() const {
  return wave == Waveform::Sin ? TrigPoly::sin_k(harmonic) : TrigPoly::cos_k(harmonic);
}

TrigPoly DitherChannel::integral() const { return trig().antiderivative(); }

DitherSpec DitherSpec::standard(int channels) {
  if (channels == 1) return {{{Waveform::Sin, 1}}};
  if (channels == 2) return {{{Waveform::Cos, 1}, {Waveform::Sin, 1}}};
  throw InvalidArgument("standard dither defined for 1 or 2 channels");
}

double Gains::eps() const { return std::pow(a, 1.0 / n); }
double Gains::p() const { return eta / std::pow(eps(), m); }

int SchemeInstance::state_dim() const {
  switch (kind) {
    case SchemeKind::Basic1D: return 1;
    case SchemeKind::Plant1D: return 2;
    case SchemeKind::Filtered1D: return 3;
    case SchemeKind::Planar: return 2;
  }
  return 0;
}

int SchemeInstance::h_dim() const { return kind == SchemeKind::Planar ? 2 : 1; }

double SchemeInstance::dither_frequency() const {
  return kind == SchemeKind::Plant1D ? gains.omega : 1.0;
}

void SchemeInstance::validate() const {
  const Gains& g = gains;
  if (!(g.a >= 0.0) || !std::isfinite(g.a)) throw InvalidArgument("gain a must be >= 0");
  if (!(g.eta >= 0.0) || !std::isfinite(g.eta)) throw InvalidArgument("gain eta must be >= 0");
  if (g.m < 1 || g.n < 1) throw InvalidArgument("exponents m, n must be positive integers");
  if (kind == SchemeKind::Filtered1D) {
    if (!(g.mu > 0.0) || !std::isfinite(g.mu)) throw InvalidArgument("gain mu must be positive");
    if (!(g.gamma > 0.0) || !std::isfinite(g.gamma))
      throw InvalidArgument("gain gamma must be positive");
  }
  if (kind == SchemeKind::Plant1D && (!(g.omega > 0.0) || !std::isfinite(g.omega)))
    throw InvalidArgument("dither frequency omega must be positive");
  if (h.max_variable() >= h_dim())
    throw InvalidArgument("h uses more variables than the scheme provides");
  const std::size_t channels = kind == SchemeKind::Planar ? 2 : 1;
  if (dither.channels.size() != channels)
    throw InvalidArgument(to_string(kind) + " needs " + std::to_string(channels) +
                          " dither channel(s)");
  for (const auto& c : dither.channels)
    if (c.harmonic < 1) throw InvalidArgument("dither harmonics must be positive");
  if (taylor_order < 0) throw InvalidArgument("taylor order must be non-negative");
}

SchemeInstance make_scheme(SchemeKind kind, const Expr& h, const Gains& gains, int avg_order) {
  SchemeInstance s;
  s.kind = kind;
  s.h = h;
  s.gains = gains;
  s.dither = DitherSpec::standard(kind == SchemeKind::Planar ? 2 : 1);
  s.taylor_order = avg_order + 1;
  return s;
}

// ---------------------------------------------------------------------------
// Right-hand sides

Rhs scheme_rhs(const SchemeInstance& s) {
  s.validate();
  const Gains g = s.gains;
  const CompiledExpr h(s.h);
  switch (s.kind) {
    case SchemeKind::Basic1D: {
      const DitherChannel d = s.dither.channels[0];
      return [=](double t, std::span<const double> x, std::span<double> dx) {
        const double dt = d(t);
        const double arg = x[0] + g.a * dt;
        dx[0] = -g.eta * h(std::span<const double>(&arg, 1)) * dt;
      };
    }
    case SchemeKind::Plant1D: {
      return [=](double t, std::span<const double> x, std::span<double> dx) {
        const double st = std::sin(g.omega * t);
        dx[0] = -x[0] + x[1] + g.a * st;
        dx[1] = -g.eta * g.omega * h(x.subspan(0, 1)) * st;
      };
    }
    case SchemeKind::Filtered1D: {
      const DitherChannel d = s.dither.channels[0];
      return [=](double t, std::span<const double> x, std::span<double> dx) {
        const double u = d(t);
        const double arg = x[0] + g.a * u;
        const double innov = h(std::span<const double>(&arg, 1)) - x[1];
        dx[0] = -g.eta * x[2];
        dx[1] = g.mu * innov;
        dx[2] = g.gamma * (-0.5 * g.a * x[2] + innov * u);
      };
    }
    case SchemeKind::Planar: {
      const DitherChannel d1 = s.dither.channels[0], d2 = s.dither.channels[1];
      return [=](double t, std::span<const double> x, std::span<double> dx) {
        const double u1 = d1(t), u2 = d2(t);
        const double arg[2] = {x[0] + g.a * u1, x[1] + g.a * u2};
        const double hv = h(arg);
        dx[0] = -g.eta * u1 * hv;
        dx[1] = -g.eta * u2 * hv;
      };
    }
  }
  throw InvalidArgument("unknown scheme kind");
}

// ---------------------------------------------------------------------------
// Graded fields

namespace {

struct TaylorTerm {
  int k;
  Expr coef;
  TrigPoly time;
};

TrigPoly trig_power(const TrigPoly& base, int k) {
  TrigPoly out(1.0);
  for (int i = 0; i < k; ++i) out = out * base;
  return out;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// h(x + a d(t)) = sum_k a^k sum_{|alpha| = k} d^alpha D^alpha h / alpha!.
std::vector<TaylorTerm> taylor_terms(const Expr& h, const DitherSpec& dither, int kmax) {
  std::vector<TaylorTerm> out;
  if (dither.channels.size() == 1) {
    const TrigPoly d = dither.channels[0].trig();
    Expr dh = h;
    for (int k = 0; k <= kmax; ++k) {
      if (k > 0) dh = differentiate(dh, 0);
      out.push_back({k, (1.0 / factorial(k)) * dh, trig_power(d, k)});
    }
    return out;
  }
  const TrigPoly d1 = dither.channels[0].trig(), d2 = dither.channels[1].trig();
  for (int k = 0; k <= kmax; ++k) {
    for (int i = k; i >= 0; --i) {
      const int j = k - i;
      const Expr dh = differentiate(differentiate(h, 0, static_cast<unsigned>(i)), 1,
                                    static_cast<unsigned>(j));
      out.push_back({k, (1.0 / (factorial(i) * factorial(j))) * dh,
                     trig_power(d1, i) * trig_power(d2, j)});
    }
  }
  return out;
}

int lowest_degree(const SchemeInstance& s) {
  return s.kind == SchemeKind::Filtered1D ? 1 : s.gains.m;
}

}  // namespace

int required_taylor_order(const SchemeInstance& s, int order) {
  const int base = lowest_degree(s);
  if (order < base) return 0;
  return (order - base) / s.gains.n;
}

GradedField scheme_graded_field(const SchemeInstance& s, int order) {
  s.validate();
  if (order < 1) throw InvalidArgument("graded field order must be at least 1");
  if (!(s.gains.a > 0.0)) throw InvalidArgument("the graded field needs a positive dither amplitude");
  const int kmax = required_taylor_order(s, order);
  if (kmax > s.taylor_order)
    throw InvalidArgument("order " + std::to_string(order) + " needs Taylor terms up to " +
                          std::to_string(kmax) + ", taylor_order is " +
                          std::to_string(s.taylor_order));
  const Gains& g = s.gains;
  const double p = g.p();
  const int m = g.m, n = g.n;

  switch (s.kind) {
    case SchemeKind::Basic1D:
    case SchemeKind::Plant1D: {
      GradedField f(1, order);
      const DitherSpec dither =
          s.kind == SchemeKind::Plant1D ? DitherSpec::standard(1) : s.dither;
      const TrigPoly d = dither.channels[0].trig();
      for (const auto& t : taylor_terms(s.h, dither, kmax))
        f.add(0, m + n * t.k, (-p) * t.coef, t.time * d);
      return f;
    }
    case SchemeKind::Filtered1D: {
      GradedField f(3, order);
      const double eps = g.eps();
      const double mu = g.mu / eps, gamma = g.gamma / eps;
      const Expr hhat = Expr::variable(1), j = Expr::variable(2);
      const TrigPoly u = s.dither.channels[0].trig();
      f.add(0, m, (-p) * j, TrigPoly(1.0));
      f.add(1, 1, (-mu) * hhat, TrigPoly(1.0));
      f.add(2, 1 + n, (-0.5 * gamma) * j, TrigPoly(1.0));
      f.add(2, 1, (-gamma) * hhat, u);
      for (const auto& t : taylor_terms(s.h, s.dither, kmax)) {
        f.add(1, 1 + n * t.k, mu * t.coef, t.time);
        f.add(2, 1 + n * t.k, gamma * t.coef, t.time * u);
      }
      return f;
    }
    case SchemeKind::Planar: {
      GradedField f(2, order);
      const TrigPoly d[2] = {s.dither.channels[0].trig(), s.dither.channels[1].trig()};
      for (const auto& t : taylor_terms(s.h, s.dither, kmax))
        for (int c = 0; c < 2; ++c) f.add(c, m + n * t.k, (-p) * t.coef, t.time * d[c]);
      return f;
    }
  }
  throw InvalidArgument("unknown scheme kind");
}

// ---------------------------------------------------------------------------
// Reference averaged systems

std::vector<Expr> ReferenceAveraged::field() const {
  std::vector<Expr> out;
  for (int c = 0; c < dim; ++c)
    out.push_back(dominant[c] + (c < static_cast<int>(correction.size()) ? correction[c] : Expr()));
  return out;
}

Expr lie_scalar(const Expr& h, const Expr& g) {
  return h * differentiate(g, 0) - differentiate(h, 0) * g;
}

Expr lie_composite(const Expr& h) { return lie_scalar(h, lie_scalar(h, differentiate(h, 0))); }

namespace {

double mean_product(const TrigPoly& p, const TrigPoly& q) { return (p * q).mean(); }

}  // namespace

ReferenceAveraged reference_averaged(const SchemeInstance& s) {
  s.validate();
  const double a = s.gains.a, eta = s.gains.eta;
  ReferenceAveraged r;
  switch (s.kind) {
    case SchemeKind::Plant1D:
      throw InvalidArgument("Plant1D has no closed-form averaged system; use its Basic1D slow part");
    case SchemeKind::Basic1D: {
      const TrigPoly d = s.dither.channels[0].trig();
      const Expr h1 = differentiate(s.h, 0), h3 = differentiate(s.h, 0, 3);
      r.dim = 1;
      r.dominant = {(-a * eta * mean_product(d, d)) * h1};
      r.correction = {(-1.0 / 16.0) * (a * eta * eta * eta * lie_composite(s.h) +
                                       eta * a * a * a * h3)};
      r.transform_space = {eta * s.h};
      r.transform_time = TrigPoly::sin_k(1);
      r.note =
          "correction holds for a sin t dither under zero-mean generators; transform shown "
          "with sin t phase as displayed (the engine yields the cos t phase)";
      return r;
    }
    case SchemeKind::Planar: {
      r.dim = 2;
      TrigPoly d[2], D[2];
      for (int c = 0; c < 2; ++c) {
        d[c] = s.dither.channels[c].trig();
        D[c] = s.dither.channels[c].integral();
      }
      const Expr grad[2] = {differentiate(s.h, 0), differentiate(s.h, 1)};
      for (int c = 0; c < 2; ++c) {
        std::vector<Expr> dom, cross;
        for (int j = 0; j < 2; ++j) {
          dom.push_back((-a * eta * mean_product(d[c], d[j])) * grad[j]);
          const double corr = mean_product(d[c], D[j]) - mean_product(D[c], d[j]);
          cross.push_back((0.5 * eta * eta * corr) * (s.h * grad[j]));
        }
        r.dominant.push_back(add_all(dom));
        r.correction.push_back(add_all(cross));
        r.transform_space.push_back((-eta) * s.h);
      }
      r.transform_time = D[0];
      r.note =
          "descent sign; cross terms carry the factor h(y) required for dimensional "
          "consistency; transform_time is the first channel's, the second uses its own "
          "dither integral";
      return r;
    }
    case SchemeKind::Filtered1D: {
      const double mu = s.gains.mu, gamma = s.gains.gamma;
      const Expr hhat = Expr::variable(1), j = Expr::variable(2);
      const Expr h0 = s.h, h1 = differentiate(h0, 0), h2 = differentiate(h0, 0, 2),
                 h3 = differentiate(h0, 0, 3);
      const Expr htilde = hhat - h0;
      const Expr hdot_av = (-eta) * (h1 * j);
      r.dim = 3;
      r.dominant = {(-eta) * j, mu * (h0 - hhat), (0.5 * a * gamma) * (h1 - j)};
      // Displayed corrections, rewritten in (x, hhat, j) with
      // d/dt hhat = d/dt htilde + hdot_av and d/dt j = d/dt jtilde + h'' xdot.
      r.correction = {
          Expr(),
          2.0 * hdot_av + (-0.25 * mu * a * a) * h2,
          (-0.5 * eta * gamma * gamma) * (htilde * h1) +
              (0.5 * a * gamma) * ((-mu * mu) * h1 + (eta * mu) * (j * h2) + (a * a / 8.0) * h3)};
      r.transform_space = {(eta * gamma) * htilde, Expr(), Expr()};
      r.transform_time = TrigPoly::sin_k(1);
      r.note = "corrections follow the display literally; see the engine for authoritative terms";
      return r;
    }
  }
  throw InvalidArgument("unknown scheme kind");
}

std::vector<Expr> ideal_flow(const SchemeInstance& s) {
  const double a = s.gains.a, eta = s.gains.eta;
  switch (s.kind) {
    case SchemeKind::Basic1D: {
      const TrigPoly d = s.dither.channels[0].trig();
      return {(-a * eta * mean_product(d, d)) * differentiate(s.h, 0)};
    }
    case SchemeKind::Plant1D:
      return {(-0.5 * a * eta * s.gains.omega) * differentiate(s.h, 0)};
    case SchemeKind::Filtered1D:
      return {(-eta) * differentiate(s.h, 0)};
    case SchemeKind::Planar: {
      std::vector<Expr> out;
      for (int c = 0; c < 2; ++c) {
        const TrigPoly d = s.dither.channels[c].trig();
        out.push_back((-a * eta * mean_product(d, d)) * differentiate(s.h, c));
      }
      return out;
    }
  }
  throw InvalidArgument("unknown scheme kind");
}

std::vector<int> optimized_states(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Basic1D: return {0};
    case SchemeKind::Plant1D: return {1};
    case SchemeKind::Filtered1D: return {0};
    case SchemeKind::Planar: return {0, 1};
  }
  return {};
}

}  // namespace esgain
