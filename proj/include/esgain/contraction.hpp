#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "esgain/domain.hpp"
#include "esgain/expr.hpp"

namespace esgain {

enum class KappaMode {
  AtOptimum,  ///< kappa = curvature of h at the target optimum
  DomainMin,  ///< kappa = smallest curvature over the whole domain
};

/// Sup-norm estimates of h and its derivatives on a domain.
struct BoundsLedger {
  Domain domain;
  /// norms[i] = ||h^(i)||; for 2-D h, the largest sup-norm over all partials of order i.
  std::vector<double> norms;
  double kappa = 0.0;
  /// Optimum used for kappa.
  std::vector<double> x_star;
  /// Named extra bounds; "L2h_h1" = ||L_h(L_h h')|| for 1-D h.
  std::map<std::string, double> composites;

  double norm(int i) const;
  double composite(const std::string& name) const;
};

struct LedgerOptions {
  std::optional<std::vector<double>> x_star;
  KappaMode kappa_mode = KappaMode::AtOptimum;
  ScanOptions scan;
};

/// Scans every derivative of h up to order N (N >= 3) on `dom`. kappa is
/// h''(x*) (smallest Hessian eigenvalue in 2-D) with x* the declared optimum or
/// the scanned argmin. Throws InvalidArgument when kappa <= 0.
BoundsLedger build_ledger(const Expr& h, const Domain& dom, int N, const LedgerOptions& opts = {});

struct ContractionEstimate {
  double beta = 0.0;
  double chi = 1.0;
  double kappa_robust = 0.0;
  std::vector<double> metric;
  /// Sample where the symmetric part is least negative.
  std::vector<double> worst_point;

  bool contracting() const { return beta > 0.0; }
};

/// beta = -max over a dense grid of lambda_max(sym(Theta J Theta^-1)) for the
/// constant diagonal metric Theta; chi = max(metric) / min(metric).
ContractionEstimate contraction_rate(const std::vector<Expr>& field, const Domain& dom,
                                     const std::vector<double>& metric,
                                     std::size_t samples_per_axis = 0);

/// |R| / kappa.
double robustness_tube(double kappa_robust, double r_bound);

struct SingularPerturbationInputs {
  double d = 0.0;
  double alpha = 0.0;
  double nu = 0.0;
  double lambda_z = 0.0;
};

/// d * alpha * nu / lambda_z.
double singular_perturbation_bound(const SingularPerturbationInputs& in);

/// Bound on |xdot - xdot_s| for the first-order plant in original time:
/// eta * omega^2 * ||h'|| * (eta * ||h|| + a).
double plant_slow_bound(double a, double eta, double omega, double norm_h, double norm_h1);

/// K1 bounds |dU|, K2 |dg_s|, K3 |R_s|, K4 |R_nu|; delta1 = (K2 + K3 + K4) / kappa
/// is the averaged-vs-ideal tube and delta2 = K1 the oscillation envelope.
struct ErrorBudget {
  double K1 = 0.0;
  double K2 = 0.0;
  double K3 = 0.0;
  double K4 = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
};

ErrorBudget assemble_budget(double K1, double K2, double K3, double K4, double kappa_robust);

}  // namespace esgain
