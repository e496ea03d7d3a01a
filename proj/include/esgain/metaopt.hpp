#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "esgain/averaging.hpp"
#include "esgain/contraction.hpp"
#include "esgain/schemes.hpp"

namespace esgain {

/// One inequality value(a, eta) <= bound of a gain-selection problem.
struct Constraint {
  std::string name;
  /// Human-readable formula with the ledger norms substituted.
  std::string formula;
  double bound = 0.0;
  std::function<double(double a, double eta)> value;
};

struct ConstraintReport {
  std::string name;
  std::string formula;
  double value = 0.0;
  double bound = 0.0;
  bool active = false;
};

struct GridOptions {
  std::size_t points = 200;
  double lo = 1e-4;
  double hi = 10.0;
  unsigned threads = 1;
};

/// Next-order terms of the basic scheme's averaged system and transform as
/// sums of monomials in the physical gains:
///   R_g(a, eta) = safety * sum_k g_coef[k] eta^k a^(g_degree - k)
///   R_u(a, eta) = safety * sum_k u_coef[k] eta^k a^(u_degree - k)
/// Each coefficient is the sup over the domain (and over t for R_u) of the
/// matching engine term.
struct RemainderModel {
  int g_degree = 6;
  int u_degree = 2;
  std::vector<double> g_coef;
  std::vector<double> u_coef;
  double safety = 2.0;

  double Rg(double a, double eta) const;
  double Ru(double a, double eta) const;
};

RemainderModel build_remainder_model(const Expr& h, const Domain& dom, double safety = 2.0,
                                     ScanOptions scan = {});

struct MetaOptProblem {
  SchemeKind kind = SchemeKind::Basic1D;
  BoundsLedger ledger;
  /// 1 guaranteed (delta1 + delta2 <= delta), 2 split (delta_i <= Delta_i),
  /// 3 dominant terms only, 4 dither excursion included (a + delta1 + delta2 <= delta).
  int strategy = 3;
  double delta = 0.02;
  double delta1 = 0.01;
  double delta2 = 0.01;
  int m = 1;
  int n = 1;
  /// Use eta*||h'|| instead of eta*||h|| for the oscillation envelope.
  bool delta2_uses_h1 = false;
  /// Required for strategies 1, 2 and 4.
  std::optional<RemainderModel> remainder;
  GridOptions grid;
};

struct ConsistencyReport {
  double p = 0.0;
  double p_lo = 1.0 / 3.0;
  double p_hi = 3.0;
  bool p_near_unity = false;
  /// sup |neglected| / sup |dominant| along the sampled path.
  double ratio = 0.0;
  double ratio_limit = 0.1;
  bool neglected_small = false;
  int dominant_degree = 0;
  std::vector<int> neglected_degrees;
};

struct FrequencyTuning {
  double omega = 0.0;
  /// Stationary point of a*eta*w/2 - eta*w^2*(eta*||h|| + a).
  double omega_stationary = 0.0;
  double objective_at_omega = 0.0;
  double objective_at_stationary = 0.0;
};

struct MetaOptSolution {
  SchemeKind kind = SchemeKind::Basic1D;
  Gains gains;
  double p = 0.0;
  double objective = 0.0;
  ErrorBudget budget;
  std::vector<ConstraintReport> constraints;
  std::vector<std::string> active;
  std::optional<ConsistencyReport> consistency;
  std::optional<FrequencyTuning> frequency;
  /// Method name and constraint assembly, as (key, text) pairs.
  std::vector<std::pair<std::string, std::string>> provenance;
};

/// a = sqrt(8 Delta1 kappa / ||h'''||), eta = Delta2 / ||h||, p = eta / a^3.
MetaOptSolution solve_strategy3_closed_form(const BoundsLedger& ledger, double delta1,
                                            double delta2);

/// Maximizer of eta*a under eta^p1 a^q1 <= K1 and eta^p2 a^q2 <= K2, both active.
/// Requires p1/q1 < 1 < p2/q2.
std::pair<double, double> solve_monomial(double p1, double q1, double K1, double p2, double q2,
                                         double K2);

/// Constraint set of a problem; exposed for certificates and tests.
std::vector<Constraint> build_constraints(const MetaOptProblem& prob);

/// Maximizes eta*a subject to `constraints` on a log grid over [lo, hi]^2
/// followed by a deterministic refinement. Throws InfeasibleError naming the
/// most violated constraint when no grid point is feasible.
std::pair<double, double> maximize_product(const std::vector<Constraint>& constraints,
                                           const GridOptions& grid);

MetaOptSolution solve_numeric(const MetaOptProblem& prob);

/// omega = a / (2 (eta ||h|| + a)); the stationary point a / (4 (eta ||h|| + a))
/// and both objective values are returned as diagnostics.
FrequencyTuning tune_frequency(const BoundsLedger& ledger, double a, double eta);

struct FilteredTuningOptions {
  std::size_t points = 32;
  double a_lo = 1e-3, a_hi = 1.0;
  double mu_lo = 1e-4, mu_hi = 10.0;
  double gamma_lo = 1e-2, gamma_hi = 100.0;
  unsigned threads = 1;
};

/// Maximizes eta for the filtered scheme under
///   (i)  eta*gamma*H <= Delta1, H = (a^2/4)||h''|| + eta ||h'||^2 / mu
///   (ii) |j~| / kappa <= Delta2 with |j~| from the robustness tube at rate a*gamma/2.
MetaOptSolution tune_filtered(const BoundsLedger& ledger, double delta1, double delta2,
                              const FilteredTuningOptions& opts = {});

/// Constraint values of the filtered assembly at given gains: {oscillation, estimate}.
std::pair<double, double> filtered_constraints(const BoundsLedger& ledger, double a, double eta,
                                               double mu, double gamma);

struct ConsistencyOptions {
  double p_lo = 1.0 / 3.0;
  double p_hi = 3.0;
  double ratio_limit = 0.1;
  std::size_t samples = 401;
};

/// p-range check and the ratio of the neglected averaged terms (every degree
/// above the dominant one in `result`) to the dominant term, sup-norms over
/// y sampled on the segment from x* to x0.
ConsistencyReport consistency_report(const MetaOptSolution& sol, const AveragingResult& result,
                                     double x_star, double x0, const ConsistencyOptions& opts = {});

}  // namespace esgain
