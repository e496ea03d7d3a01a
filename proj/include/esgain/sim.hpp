#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "esgain/averaging.hpp"
#include "esgain/schemes.hpp"

namespace esgain {

/// Uniformly sampled solution. Row k of `states` is the state at t0 + k * dt * stride.
struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  std::size_t stride = 1;
  int dim = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::string label;

  std::size_t size() const { return times.size(); }
  double sample_spacing() const { return dt * static_cast<double>(stride); }
  /// CSV with header "t,state0,state1,...".
  void write_csv(std::ostream& out) const;
};

/// Classical fixed-step RK4 from t0 to t0 + T (rounded up to whole steps),
/// recording every `stride`-th step. Throws OverflowError with the abort time
/// when the state becomes non-finite.
Trajectory integrate(const Rhs& rhs, std::vector<double> x0, double T, double dt,
                     std::size_t stride = 1, double t0 = 0.0);

/// dy/dt = time_scale * sum_i eps^i g_i(y).
Rhs averaged_rhs(const AveragingResult& result, double eps, double time_scale = 1.0);
/// Autonomous right-hand side from component expressions.
Rhs autonomous_rhs(const std::vector<Expr>& field);

/// Solves x0 = y + sum eps^i u_i(y, t) for y by fixed-point iteration.
std::vector<double> initial_averaged_state(const AveragingResult& result,
                                           const std::vector<double>& x0, double t, double eps);

struct ErrorMetrics {
  double sup_full_vs_averaged = 0.0;
  double sup_averaged_vs_ideal = 0.0;
  double asymptotic_error = 0.0;
  double mean_descent_rate = 0.0;
};

struct CompareOptions {
  /// Optimum over the ideal coordinates.
  std::vector<double> x_star;
  /// Columns of the full trajectory holding the averaged coordinates; empty = all.
  std::vector<int> full_states;
  /// Columns of the averaged trajectory matching the ideal one; empty = all.
  std::vector<int> ideal_states;
  /// Transform time = time_scale * t (omega for the plant scheme).
  double time_scale = 1.0;
};

/// Metrics between a full trajectory x, an averaged trajectory y and an ideal
/// trajectory z sampled on the same grid; x is compared with U(y(t), t).
ErrorMetrics compare(const Trajectory& full, const Trajectory& averaged, const Trajectory& ideal,
                     const AveragingResult& transform, double eps, const CompareOptions& opts);

/// First time after which max_k |x_k - x*_k| <= band over the listed state
/// columns (all when empty) until the end; +infinity if never, 0 if always.
double convergence_time(const Trajectory& traj, const std::vector<double>& x_star, double band,
                        const std::vector<int>& states = {});

/// sup over the final `fraction` of the horizon of max_k |x_k - x*_k|.
double asymptotic_error(const Trajectory& traj, const std::vector<double>& x_star,
                        const std::vector<int>& states = {}, double fraction = 0.2);

/// Plant scheme: sup_t |xdot - xdot_s| along the full trajectory, where xdot_s
/// is the slow-state derivative with the plant frozen at its equilibrium
/// z = x + a sin(omega t). The step is refined until
/// the unit plant time constant spans at least 10 steps.
double plant_slow_deviation(const SchemeInstance& s, const std::vector<double>& x0,
                            double periods, double steps_per_period = 200.0);

struct PerfMapOptions {
  double x0 = 1.0;
  double x_star = 0.0;
  double horizon_periods = 300.0;
  double steps_per_period = 200.0;
  /// eta = p * a^(m / n).
  int m = 3;
  int n = 1;
  unsigned threads = 1;
};

struct PerfCell {
  double a = 0.0;
  double p = 0.0;
  /// 1 / (time for the period-averaged |x - x*| to halve); 0 if it never does.
  double speed = 0.0;
  /// sup |x - x*| over the final 20% of the horizon; +inf for failed cells.
  double error = std::numeric_limits<double>::infinity();
  bool feasible = false;
};

struct PerfMap {
  std::vector<double> a_grid;
  std::vector<double> p_grid;
  /// Row-major over (a_grid x p_grid).
  std::vector<PerfCell> cells;

  const PerfCell& at(std::size_t ia, std::size_t ip) const { return cells[ia * p_grid.size() + ip]; }
  /// Header "a,p,speed,error,feasible".
  void write_csv(std::ostream& out) const;
};

/// log-spaced grid of n points on [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// Evaluates one Basic1D cell from x0 (Plant and filtered schemes are not mapped).
PerfCell performance_cell(const Expr& h, double a, double p, const PerfMapOptions& opts);

PerfMap performance_map(const Expr& h, const std::vector<double>& a_grid,
                        const std::vector<double>& p_grid, const PerfMapOptions& opts);

}  // namespace esgain
