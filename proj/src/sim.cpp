#include "esgain/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "esgain/error.hpp"
#include "esgain/parallel.hpp"

namespace esgain {

namespace {

void put_number(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPlantStepsPerTimeConstant = 10.0;

}  // namespace

void Trajectory::write_csv(std::ostream& out) const {
  out << "t";
  for (int k = 0; k < dim; ++k) out << ",state" << k;
  out << "\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    put_number(out, times[i]);
    for (double v : states[i]) {
      out << ",";
      put_number(out, v);
    }
    out << "\n";
  }
}

Trajectory integrate(const Rhs& rhs, std::vector<double> x0, double T, double dt,
                     std::size_t stride, double t0) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  if (!(T >= dt)) throw InvalidArgument("horizon must be at least one step");
  if (stride == 0) throw InvalidArgument("stride must be positive");
  if (x0.empty()) throw InvalidArgument("empty initial state");
  const std::size_t n = x0.size();
  const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));

  Trajectory tr;
  tr.t0 = t0;
  tr.dt = dt;
  tr.stride = stride;
  tr.dim = static_cast<int>(n);
  tr.times.reserve(steps / stride + 2);
  tr.states.reserve(steps / stride + 2);
  tr.times.push_back(t0);
  tr.states.push_back(x0);

  std::vector<double> x = std::move(x0), k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (std::size_t s = 1; s <= steps; ++s) {
    const double t = t0 + static_cast<double>(s - 1) * dt;
    rhs(t, x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    rhs(t + 0.5 * dt, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    rhs(t + 0.5 * dt, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
    rhs(t + dt, tmp, k4);
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      finite = finite && std::isfinite(x[i]);
    }
    if (!finite) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "state overflow at t = %.17g", t + dt);
      throw OverflowError(buf);
    }
    if (s % stride == 0) {
      tr.times.push_back(t0 + static_cast<double>(s) * dt);
      tr.states.push_back(x);
    }
  }
  return tr;
}

Rhs averaged_rhs(const AveragingResult& result, double eps, double time_scale) {
  const GradedField g = result.averaged_field();
  return [g, eps, time_scale](double, std::span<const double> y, std::span<double> dy) {
    const auto v = g.eval(y, 0.0, eps);
    for (std::size_t i = 0; i < v.size(); ++i) dy[i] = time_scale * v[i];
  };
}

Rhs autonomous_rhs(const std::vector<Expr>& field) {
  std::vector<CompiledExpr> f(field.begin(), field.end());
  return [f](double, std::span<const double> y, std::span<double> dy) {
    for (std::size_t i = 0; i < f.size(); ++i) dy[i] = f[i](y);
  };
}

std::vector<double> initial_averaged_state(const AveragingResult& result,
                                           const std::vector<double>& x0, double t, double eps) {
  std::vector<double> y = x0;
  for (int it = 0; it < 200; ++it) {
    const auto x = transform_point(result, y, t, eps);
    double change = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = x[i] - x0[i];
      y[i] -= d;
      change = std::max(change, std::fabs(d));
    }
    if (change <= 1e-15 * (1.0 + std::fabs(y[0]))) break;
  }
  return y;
}

namespace {

std::vector<int> all_states(int dim) {
  std::vector<int> s(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) s[i] = i;
  return s;
}

double max_dev(const std::vector<double>& x, const std::vector<double>& x_star,
               const std::vector<int>& states) {
  double m = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k)
    m = std::max(m, std::fabs(x[static_cast<std::size_t>(states[k])] - x_star[k]));
  return m;
}

}  // namespace

ErrorMetrics compare(const Trajectory& full, const Trajectory& averaged, const Trajectory& ideal,
                     const AveragingResult& transform, double eps, const CompareOptions& opts) {
  if (full.size() != averaged.size() || full.size() != ideal.size() || full.size() == 0)
    throw InvalidArgument("trajectories must share one time grid");
  for (std::size_t i = 0; i < full.size(); ++i) {
    const double tol = 1e-9 * (1.0 + std::fabs(full.times[i]));
    if (std::fabs(full.times[i] - averaged.times[i]) > tol ||
        std::fabs(full.times[i] - ideal.times[i]) > tol)
      throw InvalidArgument("trajectory time grids differ");
  }
  const std::vector<int> cols = opts.full_states.empty() ? all_states(averaged.dim) : opts.full_states;
  const std::vector<int> opt = opts.ideal_states.empty() ? all_states(averaged.dim) : opts.ideal_states;
  if (static_cast<int>(cols.size()) != averaged.dim)
    throw InvalidArgument("full state selection does not match the averaged dimension");
  if (static_cast<int>(opt.size()) != ideal.dim)
    throw InvalidArgument("ideal state selection does not match the ideal dimension");
  for (int c : cols)
    if (c < 0 || c >= full.dim) throw InvalidArgument("full state column out of range");
  for (int c : opt)
    if (c < 0 || c >= averaged.dim) throw InvalidArgument("averaged state column out of range");
  if (opts.x_star.size() != opt.size()) throw InvalidArgument("x_star has the wrong dimension");

  ErrorMetrics m;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto& y = averaged.states[i];
    const auto u = transform_point(transform, y, opts.time_scale * full.times[i], eps);
    for (std::size_t k = 0; k < cols.size(); ++k)
      m.sup_full_vs_averaged =
          std::max(m.sup_full_vs_averaged, std::fabs(full.states[i][cols[k]] - u[k]));
    for (std::size_t k = 0; k < opt.size(); ++k)
      m.sup_averaged_vs_ideal =
          std::max(m.sup_averaged_vs_ideal, std::fabs(y[opt[k]] - ideal.states[i][k]));
  }
  std::vector<int> full_opt;
  for (int c : opt) full_opt.push_back(cols[static_cast<std::size_t>(c)]);
  m.asymptotic_error = asymptotic_error(full, opts.x_star, full_opt);
  const double T = full.times.back() - full.times.front();
  if (T > 0.0)
    m.mean_descent_rate = std::max(0.0, (max_dev(averaged.states.front(), opts.x_star, opt) -
                                         max_dev(averaged.states.back(), opts.x_star, opt)) /
                                            T);
  return m;
}

double convergence_time(const Trajectory& traj, const std::vector<double>& x_star, double band,
                        const std::vector<int>& states) {
  if (!(band > 0.0)) throw InvalidArgument("band must be positive");
  const std::vector<int> cols = states.empty() ? all_states(traj.dim) : states;
  if (x_star.size() != cols.size()) throw InvalidArgument("x_star has the wrong dimension");
  if (traj.size() == 0) throw InvalidArgument("empty trajectory");
  std::size_t last_out = traj.size();
  for (std::size_t i = traj.size(); i-- > 0;)
    if (max_dev(traj.states[i], x_star, cols) > band) {
      last_out = i;
      break;
    }
  if (last_out == traj.size()) return 0.0;
  if (last_out + 1 == traj.size()) return std::numeric_limits<double>::infinity();
  return traj.times[last_out + 1] - traj.times.front();
}

double asymptotic_error(const Trajectory& traj, const std::vector<double>& x_star,
                        const std::vector<int>& states, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("fraction must be in (0, 1]");
  const std::vector<int> cols = states.empty() ? all_states(traj.dim) : states;
  if (x_star.size() != cols.size()) throw InvalidArgument("x_star has the wrong dimension");
  const double t_end = traj.times.back();
  const double t_from = t_end - fraction * (t_end - traj.times.front());
  double e = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.times[i] >= t_from - 1e-12) e = std::max(e, max_dev(traj.states[i], x_star, cols));
  return e;
}

double plant_slow_deviation(const SchemeInstance& s, const std::vector<double>& x0,
                            double periods, double steps_per_period) {
  if (s.kind != SchemeKind::Plant1D) throw InvalidArgument("plant deviation needs a Plant1D scheme");
  s.validate();
  const double omega = s.gains.omega;
  if (!(steps_per_period >= 4.0)) throw InvalidArgument("need at least 4 steps per period");
  const double dt =
      kTwoPi / omega / std::max(steps_per_period, std::ceil(kPlantStepsPerTimeConstant * kTwoPi / omega));
  const Rhs rhs = scheme_rhs(s);
  const CompiledExpr h(s.h);
  const Trajectory tr = integrate(rhs, x0, periods * kTwoPi / omega, dt);
  const double a = s.gains.a, eta = s.gains.eta;
  double sup = 0.0;
  std::vector<double> dx(2);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.times[i];
    rhs(t, tr.states[i], dx);
    const double st = std::sin(omega * t);
    const double gamma = tr.states[i][1] + a * st;
    const double slow = -eta * omega * h(std::span<const double>(&gamma, 1)) * st;
    sup = std::max(sup, std::fabs(dx[1] - slow));
  }
  return sup;
}

void PerfMap::write_csv(std::ostream& out) const {
  out << "a,p,speed,error,feasible\n";
  for (const auto& c : cells) {
    put_number(out, c.a);
    out << ",";
    put_number(out, c.p);
    out << ",";
    put_number(out, c.speed);
    out << ",";
    if (std::isfinite(c.error)) put_number(out, c.error);
    else out << "inf";
    out << "," << (c.feasible ? 1 : 0) << "\n";
  }
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw InvalidArgument("invalid log grid");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) /
                                       static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

PerfCell performance_cell(const Expr& h, double a, double p, const PerfMapOptions& o) {
  if (!(o.horizon_periods > 0.0) || !(o.steps_per_period >= 4.0))
    throw InvalidArgument("invalid horizon or step count");
  PerfCell cell;
  cell.a = a;
  cell.p = p;
  Gains g;
  g.a = a;
  g.m = o.m;
  g.n = o.n;
  g.eta = p * std::pow(a, static_cast<double>(o.m) / o.n);
  const SchemeInstance s = make_scheme(SchemeKind::Basic1D, h, g, 2);
  const Rhs rhs = scheme_rhs(s);

  const auto per = static_cast<std::size_t>(std::llround(o.steps_per_period));
  const auto periods = static_cast<std::size_t>(std::ceil(o.horizon_periods));
  const double dt = kTwoPi / static_cast<double>(per);
  const std::size_t total = per * periods;
  const std::size_t window_from = total - static_cast<std::size_t>(0.2 * static_cast<double>(total));
  const double start = std::fabs(o.x0 - o.x_star);

  double x = o.x0, k1, k2, k3, k4, tmp;
  double period_sum = 0.0, error = std::fabs(x - o.x_star);
  double t_half = -1.0;
  auto f = [&](double t, double xv) {
    double out;
    rhs(t, std::span<const double>(&xv, 1), std::span<double>(&out, 1));
    return out;
  };
  for (std::size_t s_i = 1; s_i <= total; ++s_i) {
    const double t = static_cast<double>(s_i - 1) * dt;
    k1 = f(t, x);
    tmp = x + 0.5 * dt * k1;
    k2 = f(t + 0.5 * dt, tmp);
    tmp = x + 0.5 * dt * k2;
    k3 = f(t + 0.5 * dt, tmp);
    tmp = x + dt * k3;
    k4 = f(t + dt, tmp);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(x)) return cell;
    period_sum += x;
    if (s_i % per == 0) {
      const double mean = period_sum / static_cast<double>(per);
      period_sum = 0.0;
      if (t_half < 0.0 && std::fabs(mean - o.x_star) <= 0.5 * start)
        t_half = static_cast<double>(s_i) * dt;
    }
    if (s_i == window_from) error = 0.0;
    if (s_i >= window_from) error = std::max(error, std::fabs(x - o.x_star));
  }
  cell.feasible = true;
  cell.error = error;
  cell.speed = t_half > 0.0 ? 1.0 / t_half : 0.0;
  return cell;
}

PerfMap performance_map(const Expr& h, const std::vector<double>& a_grid,
                        const std::vector<double>& p_grid, const PerfMapOptions& opts) {
  auto increasing = [](const std::vector<double>& g) {
    if (g.empty()) return false;
    for (std::size_t i = 1; i < g.size(); ++i)
      if (!(g[i] > g[i - 1])) return false;
    return g.front() > 0.0;
  };
  if (!increasing(a_grid) || !increasing(p_grid))
    throw InvalidArgument("performance map grids must be positive and strictly increasing");
  PerfMap map;
  map.a_grid = a_grid;
  map.p_grid = p_grid;
  map.cells.resize(a_grid.size() * p_grid.size());
  parallel_for(map.cells.size(), opts.threads, [&](std::size_t idx) {
    map.cells[idx] =
        performance_cell(h, a_grid[idx / p_grid.size()], p_grid[idx % p_grid.size()], opts);
  });
  return map;
}

}  // namespace esgain
