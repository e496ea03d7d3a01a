#include "esgain/metaopt.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "esgain/error.hpp"
#include "esgain/parallel.hpp"

namespace esgain {

namespace {

constexpr double kActiveRel = 1e-9;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double log_point(double lo, double hi, std::size_t i, std::size_t n) {
  if (n == 1) return lo;
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) /
                                     static_cast<double>(n - 1));
}

std::vector<ConstraintReport> report(const std::vector<Constraint>& cs, double a, double eta) {
  std::vector<ConstraintReport> out;
  for (const auto& c : cs) {
    const double v = c.value(a, eta);
    out.push_back({c.name, c.formula, v, c.bound, std::fabs(v - c.bound) <= kActiveRel * c.bound});
  }
  return out;
}

std::vector<std::string> active_names(const std::vector<ConstraintReport>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs)
    if (r.active) out.push_back(r.name);
  return out;
}

// Golden-section maximization of f on [lo, hi].
template <class F>
double golden_max(F f, double lo, double hi, double tol) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
  }
  return f1 >= f2 ? x1 : x2;
}

// Largest x in [lo, hi] with feasible(x), assuming feasibility is monotone
// decreasing in x. Returns a negative value when lo is infeasible.
template <class F>
double largest_feasible(F feasible, double lo, double hi) {
  if (feasible(hi)) return hi;
  if (!feasible(lo)) return -1.0;
  double l = std::log(lo), u = std::log(hi);
  for (int it = 0; it < 200 && u - l > 1e-15 * std::max(1.0, std::fabs(l)); ++it) {
    const double mid = 0.5 * (l + u);
    if (feasible(std::exp(mid))) l = mid;
    else u = mid;
  }
  return std::exp(l);
}

}  // namespace

// ---------------------------------------------------------------------------
// Remainder model

double RemainderModel::Rg(double a, double eta) const {
  double s = 0.0;
  for (std::size_t k = 0; k < g_coef.size(); ++k)
    s += g_coef[k] * std::pow(eta, static_cast<double>(k)) *
         std::pow(a, static_cast<double>(g_degree) - static_cast<double>(k));
  return safety * s;
}

double RemainderModel::Ru(double a, double eta) const {
  double s = 0.0;
  for (std::size_t k = 0; k < u_coef.size(); ++k)
    s += u_coef[k] * std::pow(eta, static_cast<double>(k)) *
         std::pow(a, static_cast<double>(u_degree) - static_cast<double>(k));
  return safety * s;
}

namespace {

// sup over samples of |c_k| where field(sample; p) = sum_k c_k(sample) p^k,
// recovered by interpolation through p = 1..degree+1.
std::vector<double> interpolated_sup(
    int degree, std::size_t samples,
    const std::function<std::vector<double>(double p)>& values_at) {
  const int np = degree + 1;
  Eigen::MatrixXd V(np, np);
  std::vector<std::vector<double>> vals;
  for (int j = 0; j < np; ++j) {
    const double p = j + 1.0;
    for (int k = 0; k < np; ++k) V(j, k) = std::pow(p, k);
    vals.push_back(values_at(p));
    if (vals.back().size() != samples) throw Error("internal: sample count mismatch");
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
  std::vector<double> sup(static_cast<std::size_t>(np), 0.0);
  Eigen::VectorXd rhs(np);
  for (std::size_t s = 0; s < samples; ++s) {
    for (int j = 0; j < np; ++j) rhs(j) = vals[j][s];
    const Eigen::VectorXd c = lu.solve(rhs);
    for (int k = 0; k < np; ++k) sup[k] = std::max(sup[k], std::fabs(c(k)));
  }
  // Interpolation noise on structurally absent powers.
  double top = 0.0;
  for (double v : sup) top = std::max(top, v);
  for (double& v : sup)
    if (v < 1e-9 * top) v = 0.0;
  return sup;
}

}  // namespace

RemainderModel build_remainder_model(const Expr& h, const Domain& dom, double safety,
                                     ScanOptions scan) {
  if (dom.dim() != 1) throw InvalidArgument("remainder model supports 1-D objectives");
  if (!(safety > 0.0)) throw InvalidArgument("safety factor must be positive");
  RemainderModel model;
  model.safety = safety;
  const std::size_t ny = scan.samples ? scan.samples : 2001;
  const std::size_t nt = 64;
  const auto& ax = dom.axis(0);
  std::vector<double> ys(ny);
  for (std::size_t i = 0; i < ny; ++i)
    ys[i] = ax.lo + (ax.hi - ax.lo) * static_cast<double>(i) / static_cast<double>(ny - 1);

  auto averaged = [&](double p) {
    Gains g;
    g.a = 1.0;
    g.eta = p;
    const SchemeInstance s = make_scheme(SchemeKind::Basic1D, h, g, model.g_degree);
    return average(scheme_graded_field(s, model.g_degree), model.g_degree);
  };

  model.g_coef = interpolated_sup(model.g_degree, ny, [&](double p) {
    const AveragingResult r = averaged(p);
    std::vector<double> out;
    for (double y : ys) out.push_back(r.g[model.g_degree - 1].eval_degree(model.g_degree, std::span(&y, 1), 0.0)[0]);
    return out;
  });
  model.u_coef = interpolated_sup(model.u_degree, ny * nt, [&](double p) {
    const AveragingResult r = averaged(p);
    std::vector<double> out;
    for (double y : ys)
      for (std::size_t k = 0; k < nt; ++k) {
        const double t = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(nt);
        out.push_back(r.u[model.u_degree - 1].eval_degree(model.u_degree, std::span(&y, 1), t)[0]);
      }
    return out;
  });
  return model;
}

// ---------------------------------------------------------------------------
// Closed forms

MetaOptSolution solve_strategy3_closed_form(const BoundsLedger& ledger, double delta1,
                                            double delta2) {
  if (!(delta1 > 0.0 && delta2 > 0.0)) throw InvalidArgument("tolerances must be positive");
  const double H0 = ledger.norm(0), H3 = ledger.norm(3), kappa = ledger.kappa;
  if (!(H3 > 0.0)) throw InvalidArgument("||h'''|| = 0: closed form undefined");
  if (!(H0 > 0.0)) throw InvalidArgument("||h|| = 0: closed form undefined");
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");

  MetaOptSolution sol;
  sol.kind = SchemeKind::Basic1D;
  sol.gains.a = std::sqrt(8.0 * delta1 * kappa / H3);
  sol.gains.eta = delta2 / H0;
  sol.gains.m = 3;
  sol.gains.n = 1;
  sol.p = sol.gains.eta / std::pow(sol.gains.a, 3);
  sol.objective = sol.gains.a * sol.gains.eta;

  const std::vector<Constraint> cs = {
      {"delta1", "a^2*" + fmt(H3) + "/(8*" + fmt(kappa) + ")", delta1,
       [=](double a, double) { return a * a * H3 / (8.0 * kappa); }},
      {"delta2", "eta*" + fmt(H0), delta2, [=](double, double eta) { return eta * H0; }},
  };
  sol.constraints = report(cs, sol.gains.a, sol.gains.eta);
  sol.active = active_names(sol.constraints);
  const double K2 = sol.gains.eta * std::pow(sol.gains.a, 3) * H3 / 16.0;
  sol.budget = assemble_budget(sol.gains.eta * H0, K2, 0.0, 0.0,
                               0.5 * sol.gains.a * sol.gains.eta * kappa);
  sol.provenance = {{"method", "closed form, strategy 3 with eta = p eps^3, a = eps"},
                    {"a", "sqrt(8*Delta1*kappa/||h'''||)"},
                    {"eta", "Delta2/||h||"}};
  return sol;
}

std::pair<double, double> solve_monomial(double p1, double q1, double K1, double p2, double q2,
                                         double K2) {
  if (!(K1 > 0.0 && K2 > 0.0)) throw InvalidArgument("monomial bounds must be positive");
  const double inf = std::numeric_limits<double>::infinity();
  const double r1 = q1 != 0.0 ? p1 / q1 : (p1 > 0 ? inf : -inf);
  const double r2 = q2 != 0.0 ? p2 / q2 : (p2 > 0 ? inf : -inf);
  if (!(r1 < 1.0 && 1.0 < r2))
    throw InfeasibleError("monomial problem unbounded: need p1/q1 < 1 < p2/q2");
  const double den = q2 * p1 - q1 * p2;
  if (den == 0.0) throw InfeasibleError("monomial constraints are parallel (q2 p1 = q1 p2)");
  const double a = std::pow(K2, p1 / den) * std::pow(K1, -p2 / den);
  const double eta = std::pow(K2, -q1 / den) * std::pow(K1, q2 / den);
  return {a, eta};
}

// ---------------------------------------------------------------------------
// Numeric strategies

std::vector<Constraint> build_constraints(const MetaOptProblem& prob) {
  if (prob.kind != SchemeKind::Basic1D && prob.kind != SchemeKind::Plant1D)
    throw InvalidArgument("numeric strategies apply to the map schemes Basic1D and Plant1D");
  if (prob.strategy < 1 || prob.strategy > 4) throw InvalidArgument("strategy must be 1..4");
  if (prob.m < 1 || prob.n < 1) throw InvalidArgument("exponents m, n must be positive");
  const BoundsLedger& L = prob.ledger;
  const double H3 = L.norm(3), kappa = L.kappa;
  const double Hosc = prob.delta2_uses_h1 ? L.norm(1) : L.norm(0);
  const std::string hosc = prob.delta2_uses_h1 ? "||h'||" : "||h||";
  const bool use_eta3 = prob.m <= prob.n, use_a3 = prob.m >= prob.n;
  const double L2 = use_eta3 ? L.composite("L2h_h1") : 0.0;
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");

  // Displayed sub-dominant averaged term, |dg_s| <= K2(a, eta).
  auto K2 = [=](double a, double eta) {
    return ((use_a3 ? eta * a * a * a * H3 : 0.0) + (use_eta3 ? a * eta * eta * eta * L2 : 0.0)) /
           16.0;
  };
  std::string k2 = "(" + std::string(use_a3 ? "eta*a^3*" + fmt(H3) : "") +
                   (use_a3 && use_eta3 ? " + " : "") +
                   (use_eta3 ? "a*eta^3*" + fmt(L2) : "") + ")/16";

  const bool with_rem = prob.strategy != 3;
  if (with_rem && !prob.remainder)
    throw InvalidArgument("strategy " + std::to_string(prob.strategy) + " needs a remainder model");
  const RemainderModel rem = with_rem ? *prob.remainder : RemainderModel{};
  auto delta1 = [=](double a, double eta) {
    return 2.0 * (K2(a, eta) + (with_rem ? rem.Rg(a, eta) : 0.0)) / (a * eta * kappa);
  };
  auto delta2 = [=](double a, double eta) {
    return eta * Hosc + (with_rem ? rem.Ru(a, eta) : 0.0);
  };
  const std::string d1 = "2*(" + k2 + (with_rem ? " + R_g" : "") + ")/(a*eta*" + fmt(kappa) + ")";
  const std::string d2 = "eta*" + fmt(Hosc) + (with_rem ? " + R_u" : "") + "  [" + hosc + "]";

  for (double d : {prob.delta, prob.delta1, prob.delta2})
    if (!(d > 0.0)) throw InvalidArgument("tolerances must be positive");
  switch (prob.strategy) {
    case 1:
      return {{"delta1+delta2", d1 + " + " + d2, prob.delta,
               [=](double a, double eta) { return delta1(a, eta) + delta2(a, eta); }}};
    case 2:
    case 3:
      return {{"delta1", d1, prob.delta1, delta1}, {"delta2", d2, prob.delta2, delta2}};
    default:
      return {{"a+delta1+delta2", "a + " + d1 + " + " + d2, prob.delta,
               [=](double a, double eta) { return a + delta1(a, eta) + delta2(a, eta); }}};
  }
}

std::pair<double, double> maximize_product(const std::vector<Constraint>& cs,
                                           const GridOptions& grid) {
  if (cs.empty()) throw InvalidArgument("no constraints");
  if (grid.points < 2 || !(grid.lo > 0.0) || !(grid.hi > grid.lo))
    throw InvalidArgument("invalid search grid");
  const std::size_t N = grid.points;
  auto feasible = [&](double a, double eta) {
    for (const auto& c : cs) {
      const double v = c.value(a, eta);
      if (!(v <= c.bound)) return false;
    }
    return true;
  };

  // Per-row best feasible eta index, plus the least-violating point per row.
  std::vector<long> row_best(N, -1);
  std::vector<double> row_violation(N, INFINITY);
  std::vector<std::size_t> row_worst_constraint(N, 0);
  parallel_for(N, grid.threads, [&](std::size_t i) {
    const double a = log_point(grid.lo, grid.hi, i, N);
    double best = -1.0;
    for (std::size_t j = 0; j < N; ++j) {
      const double eta = log_point(grid.lo, grid.hi, j, N);
      double worst = 0.0;
      std::size_t worst_c = 0;
      for (std::size_t k = 0; k < cs.size(); ++k) {
        const double v = cs[k].value(a, eta);
        const double ratio = std::isfinite(v) ? v / cs[k].bound : INFINITY;
        if (ratio > worst) {
          worst = ratio;
          worst_c = k;
        }
      }
      if (worst <= 1.0) {
        if (a * eta > best) {
          best = a * eta;
          row_best[i] = static_cast<long>(j);
        }
      } else if (worst < row_violation[i]) {
        row_violation[i] = worst;
        row_worst_constraint[i] = worst_c;
      }
    }
  });

  long bi = -1, bj = -1;
  double best = -1.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (row_best[i] < 0) continue;
    const double v = log_point(grid.lo, grid.hi, i, N) *
                     log_point(grid.lo, grid.hi, static_cast<std::size_t>(row_best[i]), N);
    if (v > best) {
      best = v;
      bi = static_cast<long>(i);
      bj = row_best[i];
    }
  }
  if (bi < 0) {
    std::size_t wi = 0;
    for (std::size_t i = 1; i < N; ++i)
      if (row_violation[i] < row_violation[wi]) wi = i;
    const auto& c = cs[row_worst_constraint[wi]];
    throw InfeasibleError("no feasible grid point; most violated constraint " + c.name + " (" +
                          c.formula + " <= " + fmt(c.bound) + ") exceeds its bound by a factor " +
                          fmt(row_violation[wi]));
  }

  auto eta_max = [&](double a) {
    return largest_feasible([&](double eta) { return feasible(a, eta); }, grid.lo, grid.hi);
  };
  const double la = std::log(grid.lo), lh = std::log(grid.hi);
  const double step = (lh - la) / static_cast<double>(N - 1);
  const double lc = std::log(log_point(grid.lo, grid.hi, static_cast<std::size_t>(bi), N));
  const double l0 = std::max(la, lc - step), l1 = std::min(lh, lc + step);
  const double lbest = golden_max(
      [&](double l) {
        const double a = std::exp(l);
        const double e = eta_max(a);
        return e > 0.0 ? a * e : -1.0;
      },
      l0, l1, 1e-13);
  double a = std::exp(lbest), eta = eta_max(a);
  const double ga = log_point(grid.lo, grid.hi, static_cast<std::size_t>(bi), N);
  const double ge = log_point(grid.lo, grid.hi, static_cast<std::size_t>(bj), N);
  if (!(eta > 0.0) || a * eta < ga * ge) {
    a = ga;
    eta = eta_max(ga);
  }
  return {a, eta};
}

MetaOptSolution solve_numeric(const MetaOptProblem& prob) {
  const auto cs = build_constraints(prob);
  const auto [a, eta] = maximize_product(cs, prob.grid);
  MetaOptSolution sol;
  sol.kind = prob.kind;
  sol.gains.a = a;
  sol.gains.eta = eta;
  sol.gains.m = prob.m;
  sol.gains.n = prob.n;
  sol.p = sol.gains.p();
  sol.objective = a * eta;
  sol.constraints = report(cs, a, eta);
  sol.active = active_names(sol.constraints);

  const BoundsLedger& L = prob.ledger;
  const bool with_rem = prob.strategy != 3;
  const double Hosc = prob.delta2_uses_h1 ? L.norm(1) : L.norm(0);
  const bool use_eta3 = prob.m <= prob.n, use_a3 = prob.m >= prob.n;
  const double K2 = ((use_a3 ? eta * a * a * a * L.norm(3) : 0.0) +
                     (use_eta3 ? a * eta * eta * eta * L.composite("L2h_h1") : 0.0)) /
                    16.0;
  const double Rg = with_rem ? prob.remainder->Rg(a, eta) : 0.0;
  const double Ru = with_rem ? prob.remainder->Ru(a, eta) : 0.0;
  sol.budget = assemble_budget(eta * Hosc + Ru, K2, Rg, 0.0, 0.5 * a * eta * L.kappa);

  sol.provenance.emplace_back("method", "log grid " + std::to_string(prob.grid.points) + "x" +
                                            std::to_string(prob.grid.points) + " over [" +
                                            fmt(prob.grid.lo) + ", " + fmt(prob.grid.hi) +
                                            "]^2, then golden-section on a with eta_max(a)");
  sol.provenance.emplace_back("strategy", std::to_string(prob.strategy));
  sol.provenance.emplace_back("bookkeeping", "eta = p eps^" + std::to_string(prob.m) +
                                                 ", a = eps^" + std::to_string(prob.n));
  for (const auto& c : cs) sol.provenance.emplace_back(c.name, c.formula + " <= " + fmt(c.bound));
  if (with_rem) {
    sol.provenance.emplace_back(
        "remainders", "R_g, R_u: sup of the next engine terms (degree " +
                          std::to_string(prob.remainder->g_degree) + " averaged, degree " +
                          std::to_string(prob.remainder->u_degree) + " transform) times " +
                          fmt(prob.remainder->safety));
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Dither frequency

FrequencyTuning tune_frequency(const BoundsLedger& ledger, double a, double eta) {
  if (!(a > 0.0 && eta > 0.0)) throw InvalidArgument("a and eta must be positive");
  const double c = eta * ledger.norm(0) + a;
  auto objective = [&](double w) { return a * eta * w / 2.0 - eta * w * w * c; };
  FrequencyTuning f;
  f.omega = a / (2.0 * c);
  f.omega_stationary = a / (4.0 * c);
  f.objective_at_omega = objective(f.omega);
  f.objective_at_stationary = objective(f.omega_stationary);
  return f;
}

// ---------------------------------------------------------------------------
// Filtered scheme

std::pair<double, double> filtered_constraints(const BoundsLedger& L, double a, double eta,
                                               double mu, double gamma) {
  const double H1 = L.norm(1), H2 = L.norm(2), H3 = L.norm(3);
  const double H = 0.25 * a * a * H2 + eta * H1 * H1 / mu;
  const double osc = eta * gamma * H;
  const double forcing = eta * H2 * H1 + 0.5 * eta * gamma * gamma * H * H1 +
                         0.5 * a * gamma * (mu * mu * H1 + eta * mu * H1 * H2 + a * a * H3 / 8.0);
  const double jt = forcing / (0.5 * a * gamma);
  return {osc, jt / L.kappa};
}

MetaOptSolution tune_filtered(const BoundsLedger& L, double delta1, double delta2,
                              const FilteredTuningOptions& o) {
  if (!(delta1 > 0.0 && delta2 > 0.0)) throw InvalidArgument("tolerances must be positive");
  if (!(o.mu_lo > 0.0) || !(o.a_lo > 0.0) || !(o.gamma_lo > 0.0))
    throw InvalidArgument("filtered search bounds must be positive");
  if (o.points < 2) throw InvalidArgument("filtered search needs at least 2 points per axis");
  const double eta_lo = 1e-10, eta_hi = 10.0;
  auto eta_max = [&](double a, double mu, double gamma) {
    return largest_feasible(
        [&](double eta) {
          const auto [c1, c2] = filtered_constraints(L, a, eta, mu, gamma);
          return c1 <= delta1 && c2 <= delta2;
        },
        eta_lo, eta_hi);
  };

  const std::size_t N = o.points;
  std::vector<double> best(N * N, -1.0);
  std::vector<std::size_t> best_k(N * N, 0);
  parallel_for(N * N, o.threads, [&](std::size_t ij) {
    const double a = log_point(o.a_lo, o.a_hi, ij / N, N);
    const double mu = log_point(o.mu_lo, o.mu_hi, ij % N, N);
    for (std::size_t k = 0; k < N; ++k) {
      const double e = eta_max(a, mu, log_point(o.gamma_lo, o.gamma_hi, k, N));
      if (e > best[ij]) {
        best[ij] = e;
        best_k[ij] = k;
      }
    }
  });
  std::size_t bij = 0;
  for (std::size_t ij = 1; ij < N * N; ++ij)
    if (best[ij] > best[bij]) bij = ij;
  if (!(best[bij] > 0.0))
    throw InfeasibleError("no feasible (a, mu, gamma) grid point for the filtered scheme");

  double lx[3] = {std::log(log_point(o.a_lo, o.a_hi, bij / N, N)),
                  std::log(log_point(o.mu_lo, o.mu_hi, bij % N, N)),
                  std::log(log_point(o.gamma_lo, o.gamma_hi, best_k[bij], N))};
  const double lo[3] = {std::log(o.a_lo), std::log(o.mu_lo), std::log(o.gamma_lo)};
  const double hi[3] = {std::log(o.a_hi), std::log(o.mu_hi), std::log(o.gamma_hi)};
  auto value = [&](const double* v) {
    return eta_max(std::exp(v[0]), std::exp(v[1]), std::exp(v[2]));
  };
  double width[3];
  for (int d = 0; d < 3; ++d) width[d] = (hi[d] - lo[d]) / static_cast<double>(N - 1);
  double current = value(lx);
  for (int sweep = 0; sweep < 8; ++sweep) {
    for (int d = 0; d < 3; ++d) {
      double trial[3] = {lx[0], lx[1], lx[2]};
      const double l0 = std::max(lo[d], lx[d] - width[d]), l1 = std::min(hi[d], lx[d] + width[d]);
      const double arg = golden_max(
          [&](double v) {
            trial[d] = v;
            return value(trial);
          },
          l0, l1, 1e-10);
      trial[d] = arg;
      const double v = value(trial);
      if (v > current) {
        current = v;
        lx[d] = arg;
      }
      width[d] *= 0.5;
    }
  }

  MetaOptSolution sol;
  sol.kind = SchemeKind::Filtered1D;
  sol.gains.a = std::exp(lx[0]);
  sol.gains.mu = std::exp(lx[1]);
  sol.gains.gamma = std::exp(lx[2]);
  sol.gains.eta = current;
  sol.p = sol.gains.p();
  sol.objective = current;
  const double a = sol.gains.a, mu = sol.gains.mu, gamma = sol.gains.gamma;
  const std::vector<Constraint> cs = {
      {"oscillation", "eta*gamma*((a^2/4)*" + fmt(L.norm(2)) + " + eta*" + fmt(L.norm(1)) +
                          "^2/mu)",
       delta1, [&](double aa, double e) { return filtered_constraints(L, aa, e, mu, gamma).first; }},
      {"estimate",
       "[eta*||h''||*||h'|| + (eta*gamma^2/2)*H*||h'|| + (a*gamma/2)*(mu^2*||h'|| + "
       "eta*mu*||h'||*||h''|| + (a^2/8)*||h'''||)]/(a*gamma/2)/kappa",
       delta2, [&](double aa, double e) { return filtered_constraints(L, aa, e, mu, gamma).second; }},
  };
  sol.constraints = report(cs, a, sol.gains.eta);
  sol.active = active_names(sol.constraints);
  const auto [osc, est] = filtered_constraints(L, a, sol.gains.eta, mu, gamma);
  sol.budget.K1 = osc;
  sol.budget.delta2 = osc;
  sol.budget.delta1 = est * L.kappa;
  sol.provenance = {
      {"method", "log grid " + std::to_string(N) + "^3 over (a, mu, gamma), eta_max by bisection, "
                 "then coordinate golden-section sweeps"},
      {"oscillation", "|x - x_av| ~ eta*gamma*|h~|, |h~| <= (a^2/4)||h''|| + eta||h'||^2/mu "
                      "(robustness tube of the h~ dynamics at rate mu)"},
      {"estimate", "robustness tube of the j~ dynamics at rate a*gamma/2 with every displayed "
                   "forcing term, |j| bounded by ||h'||"}};
  return sol;
}

// ---------------------------------------------------------------------------
// Consistency

ConsistencyReport consistency_report(const MetaOptSolution& sol, const AveragingResult& result,
                                     double x_star, double x0, const ConsistencyOptions& o) {
  if (result.dim != 1) throw InvalidArgument("consistency report supports 1-D schemes");
  if (o.samples < 2) throw InvalidArgument("need at least two path samples");
  ConsistencyReport r;
  r.p = sol.p;
  r.p_lo = o.p_lo;
  r.p_hi = o.p_hi;
  r.p_near_unity = sol.p >= o.p_lo && sol.p <= o.p_hi;
  r.ratio_limit = o.ratio_limit;

  for (int i = 1; i <= result.order; ++i) {
    if (result.g[i - 1].is_zero()) continue;
    if (r.dominant_degree == 0) r.dominant_degree = i;
    else r.neglected_degrees.push_back(i);
  }
  if (r.dominant_degree == 0) throw InvalidArgument("averaged system is identically zero");

  const double eps = sol.gains.eps();
  double dom = 0.0, neg = 0.0;
  for (std::size_t k = 0; k < o.samples; ++k) {
    const double y = x_star + (x0 - x_star) * static_cast<double>(k) / (o.samples - 1);
    const std::span<const double> ys(&y, 1);
    dom = std::max(dom, std::fabs(std::pow(eps, r.dominant_degree) *
                                  result.g[r.dominant_degree - 1].eval_degree(r.dominant_degree, ys, 0.0)[0]));
    double s = 0.0;
    for (int d : r.neglected_degrees)
      s += std::pow(eps, d) * result.g[d - 1].eval_degree(d, ys, 0.0)[0];
    neg = std::max(neg, std::fabs(s));
  }
  r.ratio = dom > 0.0 ? neg / dom : (neg > 0.0 ? INFINITY : 0.0);
  r.neglected_small = r.ratio <= o.ratio_limit;
  return r;
}

}  // namespace esgain
