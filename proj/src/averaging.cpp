#include "esgain/averaging.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "esgain/error.hpp"

namespace esgain {

GradedField AveragingResult::averaged_field() const {
  GradedField out(dim, std::max(order, 1));
  for (const auto& gi : g) out += gi;
  return out;
}

GradedField AveragingResult::transform() const {
  GradedField out(dim, std::max(order, 1));
  for (const auto& ui : u) out += ui;
  return out;
}

std::vector<Expr> AveragingResult::g_expr(int degree) const {
  if (degree < 1 || degree > order) throw InvalidArgument("degree outside averaging order");
  return g[static_cast<std::size_t>(degree - 1)].autonomous_expr(degree);
}

namespace {

// The constant-in-time field K_i(y) to subtract from w_i.
GradedField free_constant(const GradedField& ui, TransformConvention convention) {
  GradedField k(ui.dim(), ui.max_order());
  for (const auto& e : ui.entries()) {
    const double c = convention == TransformConvention::ZeroMean ? e.time.mean() : e.time(0.0);
    if (c != 0.0) k.add(e.component, e.degree, e.mono, TrigPoly(c));
  }
  return k;
}

double max_mean(const GradedField& f) {
  double m = 0.0;
  for (const auto& e : f.entries()) m = std::max(m, std::fabs(e.time.mean()));
  return m;
}

}  // namespace

AveragingResult average(const GradedField& field, int n, TransformConvention convention) {
  if (n < 1) throw InvalidArgument("averaging order must be at least 1");
  if (field.max_order() < n)
    throw InvalidArgument("field is graded to order " + std::to_string(field.max_order()) +
                          ", averaging needs " + std::to_string(n));
  const int dim = field.dim();
  AveragingResult r;
  r.order = n;
  r.dim = dim;
  r.convention = convention;
  GradedField f = field.truncated(n);

  GradedField w(dim, n);
  w.set_harmonic_cap(field.harmonic_cap());
  w.set_term_cap(field.term_cap());

  for (int i = 1; i <= n; ++i) {
    const GradedField e = exp_lie_series(w, f, i).degree_part(i);
    GradedField gi = e.time_mean();
    GradedField wi = (e - gi).time_antiderivative();

    GradedField trial = w;
    trial += wi;
    const GradedField ui0 = exp_identity(trial, i).degree_part(i);
    if (convention != TransformConvention::ZeroMeanGenerator) wi -= free_constant(ui0, convention);
    w += wi;

    if (!gi.is_autonomous()) throw Error("internal: averaged field is not autonomous");
    r.diagnostics.g_terms.push_back(gi.term_count());
    r.diagnostics.w_terms.push_back(wi.term_count());
    r.g.push_back(std::move(gi));
  }

  const GradedField uall = exp_identity(w, n);
  for (int i = 1; i <= n; ++i) {
    GradedField ui = uall.degree_part(i);
    r.diagnostics.u_terms.push_back(ui.term_count());
    r.diagnostics.u_mean_residual.push_back(max_mean(ui));
    r.u.push_back(std::move(ui));
  }
  r.w = std::move(w);
  return r;
}

std::vector<double> transform_point(const AveragingResult& result, std::span<const double> y,
                                    double t, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (static_cast<int>(y.size()) != result.dim) throw InvalidArgument("point dimension mismatch");
  std::vector<double> x(y.begin(), y.end());
  double ep = 1.0;
  for (const auto& ui : result.u) {
    ep *= eps;
    const int degree = static_cast<int>(&ui - result.u.data()) + 1;
    const auto v = ui.eval_degree(degree, y, t);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += ep * v[k];
  }
  return x;
}

ResidualReport autonomy_residual(const GradedField& field, const AveragingResult& result,
                                 std::span<const double> eps_list,
                                 std::span<const ResidualSample> samples, ResidualOptions opts) {
  if (samples.empty()) throw InvalidArgument("residual needs at least one sample");
  if (eps_list.empty()) throw InvalidArgument("residual needs at least one eps");
  const int dim = result.dim;
  if (field.dim() != dim) throw InvalidArgument("field and averaging result dimensions differ");

  const GradedField u = result.transform();
  const GradedField ut = u.time_derivative();
  const GradedField g = result.averaged_field();
  std::vector<GradedField> du;
  for (int k = 0; k < dim; ++k) du.push_back(u.partial(k));

  ResidualReport rep;
  for (const double eps : eps_list) {
    if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
    double sup = 0.0;
    for (const auto& s : samples) {
      if (static_cast<int>(s.y.size()) != dim) throw InvalidArgument("sample dimension mismatch");
      Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(dim, dim);
      for (int k = 0; k < dim; ++k) {
        const auto col = du[k].eval(s.y, s.t, eps);
        for (int c = 0; c < dim; ++c) jac(c, k) += col[c];
      }
      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
      const auto sv = svd.singularValues();
      const double cond = sv(0) / sv(sv.size() - 1);
      if (!(cond <= opts.max_condition)) {
        std::ostringstream msg;
        msg << "transform Jacobian near singular (condition " << cond << ") at eps=" << eps
            << ", t=" << s.t << ", y=(";
        for (std::size_t k = 0; k < s.y.size(); ++k) msg << (k ? ", " : "") << s.y[k];
        msg << ")";
        throw InvalidArgument(msg.str());
      }
      std::vector<double> x = s.y;
      const auto uy = u.eval(s.y, s.t, eps);
      for (int c = 0; c < dim; ++c) x[c] += uy[c];
      const auto fx = field.eval(x, s.t, eps);
      const auto dt = ut.eval(s.y, s.t, eps);
      const auto gy = g.eval(s.y, s.t, eps);
      Eigen::VectorXd rhs(dim);
      for (int c = 0; c < dim; ++c) rhs(c) = fx[c] - dt[c];
      const Eigen::VectorXd ydot = jac.partialPivLu().solve(rhs);
      for (int c = 0; c < dim; ++c) sup = std::max(sup, std::fabs(ydot(c) - gy[c]));
    }
    if (!std::isfinite(sup)) throw OverflowError("non-finite autonomy residual");
    rep.eps.push_back(eps);
    rep.sup_residual.push_back(sup);
  }

  // Fit on the strictly positive residuals only.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < rep.eps.size(); ++i) {
    if (rep.sup_residual[i] <= 0.0) continue;
    const double lx = std::log(rep.eps[i]), ly = std::log(rep.sup_residual[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m == 0) {
    rep.identically_zero = true;
    rep.exponent = 0.0;
  } else if (m >= 2) {
    const double den = m * sxx - sx * sx;
    rep.exponent = den != 0.0 ? (m * sxy - sx * sy) / den : 0.0;
  }
  return rep;
}

}  // namespace esgain
