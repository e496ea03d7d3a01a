#include "esgain/contraction.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "esgain/error.hpp"
#include "esgain/schemes.hpp"

namespace esgain {

double BoundsLedger::norm(int i) const {
  if (i < 0 || i >= static_cast<int>(norms.size()))
    throw InvalidArgument("ledger has no bound on derivative " + std::to_string(i));
  return norms[static_cast<std::size_t>(i)];
}

double BoundsLedger::composite(const std::string& name) const {
  const auto it = composites.find(name);
  if (it == composites.end()) throw InvalidArgument("ledger has no composite \"" + name + "\"");
  return it->second;
}

namespace {

std::vector<Expr> partials_of_order(const Expr& h, int dim, int order) {
  if (dim == 1) return {differentiate(h, 0, static_cast<unsigned>(order))};
  std::vector<Expr> out;
  for (int i = order; i >= 0; --i)
    out.push_back(differentiate(differentiate(h, 0, static_cast<unsigned>(i)), 1,
                                static_cast<unsigned>(order - i)));
  return out;
}

double min_hessian_eigen(const Expr& h, int dim, const std::vector<double>& x) {
  if (dim == 1) return eval_expr(differentiate(h, 0, 2), x);
  Eigen::Matrix2d H;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) H(i, j) = eval_expr(differentiate(differentiate(h, i), j), x);
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(H).eigenvalues()(0);
}

}  // namespace

BoundsLedger build_ledger(const Expr& h, const Domain& dom, int N, const LedgerOptions& opts) {
  if (N < 3) throw InvalidArgument("ledger needs derivatives up to at least order 3");
  const int dim = dom.dim();
  if (dim < 1 || dim > 2) throw InvalidArgument("ledger supports 1-D and 2-D objectives");
  if (h.max_variable() >= dim) throw InvalidArgument("h uses more variables than the domain");

  BoundsLedger L;
  L.domain = dom;
  for (int i = 0; i <= N; ++i) {
    double best = 0.0;
    for (const Expr& d : partials_of_order(h, dim, i))
      best = std::max(best, scan_supnorm(d, dom, opts.scan).value);
    L.norms.push_back(best);
  }

  L.x_star = opts.x_star ? *opts.x_star : scan_argmin(h, dom, opts.scan);
  if (static_cast<int>(L.x_star.size()) != dim)
    throw InvalidArgument("declared optimum has the wrong dimension");
  if (opts.kappa_mode == KappaMode::AtOptimum) {
    L.kappa = min_hessian_eigen(h, dim, L.x_star);
  } else if (dim == 1) {
    const Expr h2 = differentiate(h, 0, 2);
    L.kappa = eval_expr(h2, scan_argmin(h2, dom, opts.scan));
  } else {
    ScanOptions coarse = opts.scan;
    if (coarse.samples == 0) coarse.samples = 201;
    const auto& ax = dom.axes();
    double k = INFINITY;
    const std::size_t n = coarse.samples;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const std::vector<double> x = {ax[0].lo + (ax[0].hi - ax[0].lo) * i / (n - 1),
                                       ax[1].lo + (ax[1].hi - ax[1].lo) * j / (n - 1)};
        k = std::min(k, min_hessian_eigen(h, dim, x));
      }
    L.kappa = k;
  }
  if (!(L.kappa > 0.0)) {
    std::ostringstream msg;
    msg << "kappa = " << L.kappa << " <= 0: h is not strictly convex at the optimum (";
    for (std::size_t i = 0; i < L.x_star.size(); ++i) msg << (i ? ", " : "") << L.x_star[i];
    msg << ")";
    throw InvalidArgument(msg.str());
  }
  if (dim == 1) L.composites["L2h_h1"] = scan_supnorm(lie_composite(h), dom, opts.scan).value;
  return L;
}

ContractionEstimate contraction_rate(const std::vector<Expr>& field, const Domain& dom,
                                     const std::vector<double>& metric,
                                     std::size_t samples_per_axis) {
  const int dim = static_cast<int>(field.size());
  if (dim < 1 || dom.dim() != dim || static_cast<int>(metric.size()) != dim)
    throw InvalidArgument("field, domain and metric dimensions differ");
  for (double m : metric)
    if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgument("metric entries must be positive");
  std::vector<CompiledExpr> jac;
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) jac.emplace_back(differentiate(field[r], c));

  std::size_t n = samples_per_axis;
  if (n == 0) n = dim == 1 ? 2001 : 201;
  if (n < 2) throw InvalidArgument("need at least two samples per axis");
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= n;

  ContractionEstimate est;
  est.metric = metric;
  double worst = -INFINITY;
  std::vector<double> x(static_cast<std::size_t>(dim));
  Eigen::MatrixXd F(dim, dim);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (int d = 0; d < dim; ++d) {
      const auto& ax = dom.axis(d);
      x[d] = ax.lo + (ax.hi - ax.lo) * static_cast<double>(rest % n) / (n - 1);
      rest /= n;
    }
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) {
        const double v = jac[r * dim + c](x);
        if (!std::isfinite(v)) throw OverflowError("non-finite Jacobian entry");
        F(r, c) = metric[r] * v / metric[c];
      }
    const Eigen::MatrixXd S = 0.5 * (F + F.transpose());
    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S).eigenvalues()(dim - 1);
    if (lmax > worst) {
      worst = lmax;
      est.worst_point = x;
    }
  }
  est.beta = -worst;
  est.chi = *std::max_element(metric.begin(), metric.end()) /
            *std::min_element(metric.begin(), metric.end());
  est.kappa_robust = est.beta / est.chi;
  return est;
}

double robustness_tube(double kappa_robust, double r_bound) {
  if (!(kappa_robust > 0.0)) throw InvalidArgument("robustness rate must be positive");
  if (!(r_bound >= 0.0)) throw InvalidArgument("perturbation bound must be non-negative");
  return r_bound / kappa_robust;
}

double singular_perturbation_bound(const SingularPerturbationInputs& in) {
  if (!(in.d > 0.0 && in.alpha > 0.0 && in.nu > 0.0 && in.lambda_z > 0.0))
    throw InvalidArgument("singular perturbation inputs must be positive");
  return in.d * in.alpha * in.nu / in.lambda_z;
}

double plant_slow_bound(double a, double eta, double omega, double norm_h, double norm_h1) {
  if (!(a > 0.0 && eta > 0.0 && omega > 0.0))
    throw InvalidArgument("a, eta and omega must be positive");
  if (!(norm_h >= 0.0 && norm_h1 >= 0.0)) throw InvalidArgument("norms must be non-negative");
  return eta * omega * omega * norm_h1 * (eta * norm_h + a);
}

ErrorBudget assemble_budget(double K1, double K2, double K3, double K4, double kappa_robust) {
  for (double k : {K1, K2, K3, K4})
    if (!(k >= 0.0)) throw InvalidArgument("budget terms must be non-negative");
  ErrorBudget b{K1, K2, K3, K4, 0.0, 0.0};
  b.delta1 = robustness_tube(kappa_robust, K2 + K3 + K4);
  b.delta2 = K1;
  return b;
}

}  // namespace esgain
