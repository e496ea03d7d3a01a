#include "app.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "esgain/error.hpp"

namespace esgain::app {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------------
// Config readers

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double read_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path + " must be finite");
  return d;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& block) {
  const json* v = find(obj, key);
  return v ? read_number(*v, block + "." + key) : fallback;
}

int int_or(const json& obj, const char* key, int fallback, const std::string& block) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw ConfigError(block + "." + key + " must be an integer");
  return v->get<int>();
}

bool bool_or(const json& obj, const char* key, bool fallback, const std::string& block) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(block + "." + key + " must be true or false");
  return v->get<bool>();
}

std::string string_or(const json& obj, const char* key, const std::string& fallback,
                      const std::string& block) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError(block + "." + key + " must be a string");
  return v->get<std::string>();
}

std::vector<double> vector_of(const json& v, const std::string& path) {
  if (v.is_number()) return {read_number(v, path)};
  if (!v.is_array()) throw ConfigError(path + " must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(read_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::pair<double, double> range_of(const json& v, const std::string& path) {
  const auto r = vector_of(v, path);
  if (r.size() != 2 || !(r[0] < r[1])) throw ConfigError(path + " must be [lo, hi] with lo < hi");
  return {r[0], r[1]};
}

const json& block_of(const json& root, const char* key) {
  static const json empty = json::object();
  const json* b = find(root, key);
  if (!b) return empty;
  if (!b->is_object()) throw ConfigError(std::string(key) + " must be an object");
  return *b;
}

TransformConvention parse_convention(const std::string& s) {
  if (s == "zero_mean") return TransformConvention::ZeroMean;
  if (s == "zero_at_origin") return TransformConvention::ZeroAtOrigin;
  if (s == "zero_mean_generator") return TransformConvention::ZeroMeanGenerator;
  throw ConfigError("scheme.convention must be zero_mean, zero_at_origin or zero_mean_generator");
}

std::string convention_name(TransformConvention c) {
  switch (c) {
    case TransformConvention::ZeroMean: return "zero_mean";
    case TransformConvention::ZeroAtOrigin: return "zero_at_origin";
    case TransformConvention::ZeroMeanGenerator: return "zero_mean_generator";
  }
  return "?";
}

SchemeBlock parse_scheme(const json& b) {
  SchemeBlock out;
  const std::string kind_text = string_or(b, "kind", "", "scheme");
  if (kind_text.empty()) throw ConfigError("scheme.kind is required");
  SchemeKind kind;
  try {
    kind = parse_scheme_kind(kind_text);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("scheme.kind: ") + e.what());
  }
  out.h_text = string_or(b, "h", "", "scheme");
  if (out.h_text.empty()) throw ConfigError("scheme.h is required");
  const int dim = kind == SchemeKind::Planar ? 2 : 1;
  Expr h;
  try {
    h = parse_expr(out.h_text, dim);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("scheme.h: ") + e.what());
  }

  const json& gj = block_of(b, "gains");
  Gains g;
  g.a = number_or(gj, "a", 0.0, "scheme.gains");
  g.m = int_or(gj, "m", 1, "scheme.gains");
  g.n = int_or(gj, "n", 1, "scheme.gains");
  if (g.m < 1 || g.n < 1) throw ConfigError("scheme.gains.m and n must be positive");
  const bool has_eta = find(gj, "eta"), has_p = find(gj, "p");
  if (has_eta == has_p) throw ConfigError("scheme.gains needs exactly one of eta and p");
  g.eta = has_eta ? number_or(gj, "eta", 0.0, "scheme.gains")
                  : number_or(gj, "p", 0.0, "scheme.gains") *
                        std::pow(g.a, static_cast<double>(g.m) / g.n);
  g.mu = number_or(gj, "mu", 0.0, "scheme.gains");
  g.gamma = number_or(gj, "gamma", 0.0, "scheme.gains");
  g.omega = number_or(gj, "omega", 1.0, "scheme.gains");

  out.avg_order = int_or(b, "avg_order", g.m + g.n, "scheme");
  if (out.avg_order < 1 || out.avg_order > 12) throw ConfigError("scheme.avg_order must be in 1..12");
  out.convention = parse_convention(string_or(b, "convention", "zero_mean", "scheme"));

  SchemeInstance s = make_scheme(kind, h, g, out.avg_order);
  if (const json* d = find(b, "dither")) {
    if (!d->is_array()) throw ConfigError("scheme.dither must be an array of channels");
    s.dither.channels.clear();
    for (std::size_t i = 0; i < d->size(); ++i) {
      const json& c = (*d)[i];
      const std::string path = "scheme.dither[" + std::to_string(i) + "]";
      if (!c.is_object()) throw ConfigError(path + " must be an object");
      DitherChannel ch;
      const std::string wave = string_or(c, "wave", "sin", path);
      if (wave == "sin") ch.wave = Waveform::Sin;
      else if (wave == "cos") ch.wave = Waveform::Cos;
      else throw ConfigError(path + ".wave must be sin or cos");
      ch.harmonic = int_or(c, "harmonic", 1, path);
      s.dither.channels.push_back(ch);
    }
  }
  s.taylor_order = std::max(3, required_taylor_order(s, out.avg_order));
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("scheme: ") + e.what());
  }
  out.instance = std::move(s);
  return out;
}

LedgerBlock parse_ledger(const json& b, int dim) {
  LedgerBlock out;
  std::vector<Interval> axes(static_cast<std::size_t>(dim), Interval{-1.0, 1.0});
  if (const json* d = find(b, "domain")) {
    if (!d->is_array() || d->empty()) throw ConfigError("ledger.domain must be a list of [lo, hi]");
    if ((*d)[0].is_number()) {
      const auto [lo, hi] = range_of(*d, "ledger.domain");
      axes.assign(1, Interval{lo, hi});
    } else {
      axes.clear();
      for (std::size_t i = 0; i < d->size(); ++i) {
        const auto [lo, hi] = range_of((*d)[i], "ledger.domain[" + std::to_string(i) + "]");
        axes.push_back({lo, hi});
      }
    }
    if (static_cast<int>(axes.size()) != dim)
      throw ConfigError("ledger.domain needs " + std::to_string(dim) + " interval(s)");
  }
  out.domain = Domain(axes);
  out.order = int_or(b, "order", 3, "ledger");
  if (out.order < 3) throw ConfigError("ledger.order must be at least 3");
  if (const json* x = find(b, "x_star")) {
    auto xs = vector_of(*x, "ledger.x_star");
    if (static_cast<int>(xs.size()) != dim) throw ConfigError("ledger.x_star has the wrong dimension");
    out.options.x_star = xs;
  }
  const std::string mode = string_or(b, "kappa_mode", "at_optimum", "ledger");
  if (mode == "at_optimum") out.options.kappa_mode = KappaMode::AtOptimum;
  else if (mode == "domain_min") out.options.kappa_mode = KappaMode::DomainMin;
  else throw ConfigError("ledger.kappa_mode must be at_optimum or domain_min");
  const int samples = int_or(b, "samples", 0, "ledger");
  if (samples < 0) throw ConfigError("ledger.samples must be non-negative");
  out.options.scan.samples = static_cast<std::size_t>(samples);
  const json& ov = block_of(b, "overrides");
  if (const json* n = find(ov, "norms")) out.norm_overrides = vector_of(*n, "ledger.overrides.norms");
  if (find(ov, "kappa")) {
    out.kappa_override = number_or(ov, "kappa", 0.0, "ledger.overrides");
    if (!(*out.kappa_override > 0.0)) throw ConfigError("ledger.overrides.kappa must be positive");
  }
  return out;
}

TuningBlock parse_tuning(const json& b) {
  TuningBlock t;
  t.method = string_or(b, "method", "auto", "tuning");
  if (t.method != "auto" && t.method != "closed_form" && t.method != "numeric" &&
      t.method != "filtered")
    throw ConfigError("tuning.method must be auto, closed_form, numeric or filtered");
  t.strategy = int_or(b, "strategy", 3, "tuning");
  if (t.strategy < 1 || t.strategy > 4) throw ConfigError("tuning.strategy must be 1..4");
  t.delta = number_or(b, "delta", 0.02, "tuning");
  t.delta1 = number_or(b, "delta1", 0.01, "tuning");
  t.delta2 = number_or(b, "delta2", 0.01, "tuning");
  if (!(t.delta > 0 && t.delta1 > 0 && t.delta2 > 0))
    throw ConfigError("tuning deltas must be positive");
  t.m = int_or(b, "m", 1, "tuning");
  t.n = int_or(b, "n", 1, "tuning");
  if (t.m < 1 || t.n < 1) throw ConfigError("tuning.m and n must be positive");
  t.delta2_uses_h1 = bool_or(b, "delta2_uses_h1", false, "tuning");
  t.remainder_safety = number_or(b, "remainder_safety", 2.0, "tuning");
  const json& g = block_of(b, "grid");
  t.grid.points = static_cast<std::size_t>(int_or(g, "points", 200, "tuning.grid"));
  t.grid.lo = number_or(g, "lo", 1e-4, "tuning.grid");
  t.grid.hi = number_or(g, "hi", 10.0, "tuning.grid");
  if (t.grid.points < 2 || !(t.grid.lo > 0.0 && t.grid.hi > t.grid.lo))
    throw ConfigError("tuning.grid needs points >= 2 and 0 < lo < hi");
  const json& f = block_of(b, "filtered");
  t.filtered.points = static_cast<std::size_t>(int_or(f, "points", 32, "tuning.filtered"));
  if (t.filtered.points < 2) throw ConfigError("tuning.filtered.points must be at least 2");
  const json& c = block_of(b, "consistency");
  t.consistency.p_lo = number_or(c, "p_lo", 1.0 / 3.0, "tuning.consistency");
  t.consistency.p_hi = number_or(c, "p_hi", 3.0, "tuning.consistency");
  t.consistency.ratio_limit = number_or(c, "ratio_limit", 0.1, "tuning.consistency");
  if (find(c, "x0")) t.consistency_x0 = number_or(c, "x0", 0.0, "tuning.consistency");
  if (find(c, "order")) t.consistency_order = int_or(c, "order", 4, "tuning.consistency");
  return t;
}

SimBlock parse_sim(const json& b) {
  SimBlock s;
  if (find(b, "dt")) {
    s.dt = number_or(b, "dt", 0.0, "sim");
    if (!(*s.dt > 0.0)) throw ConfigError("sim.dt must be positive");
  }
  s.horizon_periods = number_or(b, "horizon_periods", 300.0, "sim");
  if (!(s.horizon_periods > 0.0)) throw ConfigError("sim.horizon_periods must be positive");
  if (const json* x = find(b, "x0")) s.x0 = vector_of(*x, "sim.x0");
  const int stride = int_or(b, "stride", 1, "sim");
  if (stride < 1) throw ConfigError("sim.stride must be positive");
  s.stride = static_cast<std::size_t>(stride);
  if (find(b, "band")) {
    s.band = number_or(b, "band", 0.0, "sim");
    if (!(*s.band > 0.0)) throw ConfigError("sim.band must be positive");
  }
  if (const json* x = find(b, "x_star")) s.x_star = vector_of(*x, "sim.x_star");
  return s;
}

PerfMapBlock parse_perfmap(const json& b) {
  PerfMapBlock p;
  if (const json* r = find(b, "a_range")) std::tie(p.a_lo, p.a_hi) = range_of(*r, "perfmap.a_range");
  if (const json* r = find(b, "p_range")) std::tie(p.p_lo, p.p_hi) = range_of(*r, "perfmap.p_range");
  if (!(p.a_lo > 0.0 && p.p_lo > 0.0)) throw ConfigError("perfmap ranges must be positive");
  if (const json* n = find(b, "points")) {
    const auto v = vector_of(*n, "perfmap.points");
    if (v.empty() || v.size() > 2 || v[0] < 2 || v.back() < 2 ||
        v[0] != std::floor(v[0]) || v.back() != std::floor(v.back()))
      throw ConfigError("perfmap.points must be an integer >= 2 or a pair of them");
    p.a_points = static_cast<std::size_t>(v[0]);
    p.p_points = static_cast<std::size_t>(v.back());
  }
  PerfMapOptions& o = p.options;
  o.horizon_periods = number_or(b, "horizon_periods", 300.0, "perfmap");
  o.steps_per_period = number_or(b, "steps_per_period", 200.0, "perfmap");
  if (!(o.horizon_periods > 0.0) || !(o.steps_per_period >= 4.0))
    throw ConfigError("perfmap needs horizon_periods > 0 and steps_per_period >= 4");
  o.m = int_or(b, "m", 3, "perfmap");
  o.n = int_or(b, "n", 1, "perfmap");
  if (o.m < 1 || o.n < 1) throw ConfigError("perfmap.m and n must be positive");
  o.x0 = number_or(b, "x0", 1.0, "perfmap");
  o.x_star = number_or(b, "x_star", 0.0, "perfmap");
  return p;
}

// ---------------------------------------------------------------------------
// Output helpers

void dump_value(const json& j, std::string& out, int indent, int level) {
  const std::string pad = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * (level + 1)), ' ') : "";
  const std::string close = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * level), ' ') : "";
  const char* sep = indent > 0 ? ": " : ":";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",";
        first = false;
        out += pad + json(it.key()).dump() + sep;
        dump_value(it.value(), out, indent, level + 1);
      }
      out += close + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",";
        out += pad;
        dump_value(j[i], out, indent, level + 1);
      }
      out += close + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

std::string number_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json stamp(const RunConfig& cfg, const std::string& command) {
  return {{"tool", "esgain"}, {"version", kToolVersion}, {"config_hash", cfg.hash},
          {"command", command}};
}

std::string csv_stamp(const RunConfig& cfg, const std::string& command) {
  return std::string("# esgain ") + kToolVersion + " command=" + command +
         " config_hash=" + cfg.hash + "\n";
}

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw Error("cannot open " + (dir / name).string() + " for writing");
  return out;
}

void write_json_file(const std::filesystem::path& dir, const std::string& name, const json& j) {
  auto out = open_out(dir, name);
  out << dump_json(j) << "\n";
}

const SchemeBlock& need_scheme(const RunConfig& cfg) {
  if (!cfg.scheme) throw ConfigError("this command needs a scheme block");
  return *cfg.scheme;
}

json gains_json(const Gains& g, SchemeKind kind) {
  json j = {{"a", g.a}, {"eta", g.eta}, {"m", g.m}, {"n", g.n}};
  if (kind == SchemeKind::Filtered1D) {
    j["mu"] = g.mu;
    j["gamma"] = g.gamma;
  }
  if (kind == SchemeKind::Plant1D) j["omega"] = g.omega;
  return j;
}

json ledger_json(const BoundsLedger& L) {
  json c = json::object();
  for (const auto& [k, v] : L.composites) c[k] = v;
  return {{"norms", L.norms}, {"kappa", L.kappa}, {"x_star", L.x_star}, {"composites", c}};
}

BoundsLedger make_ledger(const RunConfig& cfg, const SchemeBlock& sb) {
  BoundsLedger L;
  try {
    L = build_ledger(sb.instance.h, cfg.ledger.domain, cfg.ledger.order, cfg.ledger.options);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("ledger: ") + e.what());
  }
  for (std::size_t i = 0; i < cfg.ledger.norm_overrides.size() && i < L.norms.size(); ++i)
    L.norms[i] = cfg.ledger.norm_overrides[i];
  if (cfg.ledger.kappa_override) L.kappa = *cfg.ledger.kappa_override;
  return L;
}

// ---------------------------------------------------------------------------
// tune

json solution_json(const MetaOptSolution& sol) {
  json cons = json::array();
  for (const auto& c : sol.constraints)
    cons.push_back({{"name", c.name}, {"formula", c.formula}, {"value", c.value},
                    {"bound", c.bound}, {"active", c.active}});
  json prov = json::array();
  for (const auto& [k, v] : sol.provenance) prov.push_back({{"key", k}, {"text", v}});
  json j = {{"kind", to_string(sol.kind)},
            {"gains", gains_json(sol.gains, sol.kind)},
            {"p", sol.p},
            {"objective", sol.objective},
            {"budget",
             {{"K1", sol.budget.K1}, {"K2", sol.budget.K2}, {"K3", sol.budget.K3},
              {"K4", sol.budget.K4}, {"delta1", sol.budget.delta1}, {"delta2", sol.budget.delta2}}},
            {"constraints", cons},
            {"active", sol.active},
            {"provenance", prov}};
  if (sol.consistency) {
    const auto& c = *sol.consistency;
    j["consistency"] = {{"p", c.p},
                        {"p_lo", c.p_lo},
                        {"p_hi", c.p_hi},
                        {"p_near_unity", c.p_near_unity},
                        {"ratio", c.ratio},
                        {"ratio_limit", c.ratio_limit},
                        {"neglected_small", c.neglected_small},
                        {"dominant_degree", c.dominant_degree},
                        {"neglected_degrees", c.neglected_degrees}};
  }
  if (sol.frequency) {
    const auto& f = *sol.frequency;
    j["frequency"] = {{"omega", f.omega},
                      {"omega_stationary", f.omega_stationary},
                      {"objective_at_omega", f.objective_at_omega},
                      {"objective_at_stationary", f.objective_at_stationary}};
  }
  return j;
}

int run_tune(RunConfig& cfg, const RunOptions& opts, std::ostream& log) {
  const SchemeBlock& sb = need_scheme(cfg);
  const SchemeKind kind = sb.instance.kind;
  if (kind == SchemeKind::Planar) throw ConfigError("tune supports the one-dimensional schemes");
  const TuningBlock& t = cfg.tuning;
  const BoundsLedger L = make_ledger(cfg, sb);
  if (opts.verbose) log << "ledger kappa " << number_text(L.kappa) << "\n";

  MetaOptSolution sol;
  std::string method = t.method;
  if (method == "auto") {
    if (kind == SchemeKind::Filtered1D) method = "filtered";
    else method = (t.strategy == 3 && t.m > t.n) ? "closed_form" : "numeric";
  }
  if ((method == "filtered") != (kind == SchemeKind::Filtered1D))
    throw ConfigError("tuning.method " + method + " does not apply to " + to_string(kind));

  if (method == "filtered") {
    FilteredTuningOptions fo = t.filtered;
    fo.threads = opts.threads;
    sol = tune_filtered(L, t.delta1, t.delta2, fo);
  } else if (method == "closed_form") {
    if (t.strategy != 3) throw ConfigError("the closed form solves strategy 3 only");
    sol = solve_strategy3_closed_form(L, t.delta1, t.delta2);
    sol.kind = kind;
  } else {
    MetaOptProblem prob;
    prob.kind = kind;
    prob.ledger = L;
    prob.strategy = t.strategy;
    prob.delta = t.delta;
    prob.delta1 = t.delta1;
    prob.delta2 = t.delta2;
    prob.m = t.m;
    prob.n = t.n;
    prob.delta2_uses_h1 = t.delta2_uses_h1;
    prob.grid = t.grid;
    prob.grid.threads = opts.threads;
    if (t.strategy != 3) {
      if (opts.verbose) log << "building remainder model\n";
      prob.remainder = build_remainder_model(sb.instance.h, cfg.ledger.domain, t.remainder_safety,
                                             cfg.ledger.options.scan);
    }
    sol = solve_numeric(prob);
  }

  if (kind != SchemeKind::Filtered1D) {
    const int m = sol.gains.m, n = sol.gains.n;
    const int order = t.consistency_order.value_or(m + 3 * n);
    SchemeInstance s = make_scheme(SchemeKind::Basic1D, sb.instance.h, sol.gains, order);
    s.taylor_order = std::max(3, required_taylor_order(s, order));
    const AveragingResult res = average(scheme_graded_field(s, order), order);
    const double x_star = L.x_star.at(0);
    const double x0 = t.consistency_x0.value_or(cfg.ledger.domain.axis(0).hi);
    sol.consistency = consistency_report(sol, res, x_star, x0, t.consistency);
  }
  if (kind == SchemeKind::Plant1D) {
    sol.frequency = tune_frequency(L, sol.gains.a, sol.gains.eta);
    sol.gains.omega = sol.frequency->omega;
  }

  json out = stamp(cfg, "tune");
  out["ledger"] = ledger_json(L);
  out["solution"] = solution_json(sol);
  write_json_file(cfg.out_dir, "tune.json", out);
  if (opts.verbose)
    log << "a = " << number_text(sol.gains.a) << ", eta = " << number_text(sol.gains.eta) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

int run_simulate(RunConfig& cfg, const RunOptions& opts, std::ostream& log) {
  const SchemeBlock& sb = need_scheme(cfg);
  const SchemeInstance& s = sb.instance;
  const int n = s.state_dim();
  const SimBlock& sim = cfg.sim;
  if (static_cast<int>(sim.x0.size()) != n)
    throw ConfigError("sim.x0 needs " + std::to_string(n) + " entries for " + to_string(s.kind));
  const double period = kTwoPi / s.dither_frequency();
  const double dt = sim.dt.value_or(period / 200.0);
  if (s.kind == SchemeKind::Plant1D && 1.0 / dt < 10.0)
    throw ConfigError("sim.dt too large for the plant time constant (need 1/dt >= 10)");
  const double T = sim.horizon_periods * period;

  if (opts.verbose) log << "integrating full system\n";
  Trajectory full = integrate(scheme_rhs(s), sim.x0, T, dt, sim.stride);

  const GradedField field = scheme_graded_field(s, sb.avg_order);
  const AveragingResult res = average(field, sb.avg_order, sb.convention);
  const double eps = s.gains.eps();
  const double scale = s.kind == SchemeKind::Plant1D ? s.gains.omega : 1.0;

  std::vector<int> full_states;
  std::vector<int> ideal_states;
  const std::vector<int> opt = optimized_states(s.kind);
  switch (s.kind) {
    case SchemeKind::Plant1D:
      full_states = {1};
      ideal_states = {0};
      break;
    case SchemeKind::Filtered1D:
      full_states = {0, 1, 2};
      ideal_states = {0};
      break;
    default:
      for (int i = 0; i < n; ++i) full_states.push_back(i);
      ideal_states = full_states;
  }
  std::vector<double> x_av0;
  for (int c : full_states) x_av0.push_back(sim.x0[static_cast<std::size_t>(c)]);
  const auto y0 = initial_averaged_state(res, x_av0, 0.0, eps);
  if (opts.verbose) log << "integrating averaged system\n";
  Trajectory averaged = integrate(averaged_rhs(res, eps, scale), y0, T, dt, sim.stride);
  std::vector<double> z0;
  for (int c : opt) z0.push_back(sim.x0[static_cast<std::size_t>(c)]);
  Trajectory ideal = integrate(autonomous_rhs(ideal_flow(s)), z0, T, dt, sim.stride);

  CompareOptions co;
  co.full_states = full_states;
  co.ideal_states = ideal_states;
  co.time_scale = scale;
  co.x_star = sim.x_star;
  if (co.x_star.empty()) {
    if (cfg.ledger.options.x_star) co.x_star = *cfg.ledger.options.x_star;
    else co.x_star.assign(opt.size(), 0.0);
  }
  if (co.x_star.size() != opt.size()) throw ConfigError("sim.x_star has the wrong dimension");
  const ErrorMetrics m = compare(full, averaged, ideal, res, eps, co);

  json out = stamp(cfg, "simulate");
  out["scheme"] = to_string(s.kind);
  out["gains"] = gains_json(s.gains, s.kind);
  out["dt"] = dt;
  out["horizon"] = T;
  out["avg_order"] = sb.avg_order;
  out["convention"] = convention_name(sb.convention);
  out["metrics"] = {{"sup_full_vs_averaged", m.sup_full_vs_averaged},
                    {"sup_averaged_vs_ideal", m.sup_averaged_vs_ideal},
                    {"asymptotic_error", m.asymptotic_error},
                    {"mean_descent_rate", m.mean_descent_rate}};
  if (sim.band) {
    const double ct = convergence_time(full, co.x_star, *sim.band, opt);
    out["convergence"] = {{"band", *sim.band}, {"time", ct}, {"periods", ct / period},
                          {"reached", std::isfinite(ct)}};
  }
  write_json_file(cfg.out_dir, "metrics.json", out);
  const std::pair<const char*, const Trajectory*> files[] = {
      {"trajectory.csv", &full}, {"averaged.csv", &averaged}, {"ideal.csv", &ideal}};
  for (const auto& [name, tr] : files) {
    auto f = open_out(cfg.out_dir, name);
    f << csv_stamp(cfg, "simulate");
    tr->write_csv(f);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// perfmap

int run_perfmap(RunConfig& cfg, const RunOptions& opts, std::ostream& log) {
  const SchemeBlock& sb = need_scheme(cfg);
  if (sb.instance.kind != SchemeKind::Basic1D)
    throw ConfigError("perfmap maps the Basic1D scheme only");
  const PerfMapBlock& pm = cfg.perfmap;
  PerfMapOptions o = pm.options;
  o.threads = opts.threads;
  const auto a_grid = log_grid(pm.a_lo, pm.a_hi, pm.a_points);
  const auto p_grid = log_grid(pm.p_lo, pm.p_hi, pm.p_points);
  if (opts.verbose)
    log << "performance map " << a_grid.size() << "x" << p_grid.size() << " cells\n";
  const PerfMap map = performance_map(sb.instance.h, a_grid, p_grid, o);
  auto f = open_out(cfg.out_dir, "perfmap.csv");
  f << csv_stamp(cfg, "perfmap");
  map.write_csv(f);
  return 0;
}

// ---------------------------------------------------------------------------
// average

json field_listing(const GradedField& f, int var_dim) {
  json lines = json::array();
  std::istringstream in(f.to_string(var_dim));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(line);
  return lines;
}

int run_average(RunConfig& cfg, const RunOptions& opts, std::ostream& log) {
  const SchemeBlock& sb = need_scheme(cfg);
  const SchemeInstance& s = sb.instance;
  const int var_dim = s.h_dim();
  const GradedField field = scheme_graded_field(s, sb.avg_order);
  if (opts.verbose) log << "averaging to order " << sb.avg_order << "\n";
  const AveragingResult res = average(field, sb.avg_order, sb.convention);

  json degrees = json::array();
  std::ostringstream text;
  text << "averaged system for " << to_string(s.kind) << ", order " << sb.avg_order << ", "
       << convention_name(sb.convention) << " transform\n";
  for (int i = 1; i <= res.order; ++i) {
    const auto g = res.g_expr(i);
    json comps = json::array();
    for (const auto& e : g) comps.push_back(to_string(e, var_dim));
    const GradedField& u = res.u[static_cast<std::size_t>(i - 1)];
    degrees.push_back({{"degree", i},
                       {"g", comps},
                       {"g_terms", res.diagnostics.g_terms[static_cast<std::size_t>(i - 1)]},
                       {"u", field_listing(u, var_dim)},
                       {"u_mean_residual",
                        res.diagnostics.u_mean_residual[static_cast<std::size_t>(i - 1)]}});
    text << "degree " << i << "\n";
    for (std::size_t c = 0; c < g.size(); ++c)
      text << "  g[" << c << "] = " << to_string(g[c], var_dim) << "\n";
    if (!u.is_zero()) {
      std::istringstream in(u.to_string(var_dim));
      for (std::string line; std::getline(in, line);)
        if (!line.empty()) text << "  u: " << line << "\n";
    }
  }

  json out = stamp(cfg, "average");
  out["scheme"] = to_string(s.kind);
  out["h"] = to_string(s.h, var_dim);
  out["gains"] = gains_json(s.gains, s.kind);
  out["eps"] = s.gains.eps();
  out["p"] = s.gains.p();
  out["order"] = res.order;
  out["convention"] = convention_name(sb.convention);
  out["degrees"] = degrees;
  if (s.kind != SchemeKind::Plant1D) {
    const ReferenceAveraged ref = reference_averaged(s);
    json dom = json::array(), corr = json::array();
    for (const auto& e : ref.dominant) dom.push_back(to_string(e, var_dim));
    for (const auto& e : ref.correction) corr.push_back(to_string(e, var_dim));
    out["reference"] = {{"dominant", dom}, {"correction", corr}, {"note", ref.note}};
  }
  write_json_file(cfg.out_dir, "average.json", out);
  auto f = open_out(cfg.out_dir, "average.txt");
  f << "# esgain " << kToolVersion << " config_hash=" << cfg.hash << "\n" << text.str();
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<std::vector<double>> sample_points(const Domain& dom, int per_axis) {
  std::vector<std::vector<double>> pts;
  auto coord = [&](int axis, int k) {
    const Interval& I = dom.axis(axis);
    return I.lo + (I.hi - I.lo) * (k + 0.5) / per_axis;
  };
  if (dom.dim() == 1) {
    for (int i = 0; i < per_axis; ++i) pts.push_back({coord(0, i)});
  } else {
    for (int i = 0; i < per_axis; ++i)
      for (int j = 0; j < per_axis; ++j) pts.push_back({coord(0, i), coord(1, j)});
  }
  return pts;
}

Check check_derivatives(const Expr& h, const Domain& dom) {
  Check c{"derivative_vs_finite_difference", true, ""};
  double worst = 0.0;
  for (int axis = 0; axis < dom.dim(); ++axis) {
    Expr f = h;
    for (int k = 1; k <= 3; ++k) {
      const Expr df = differentiate(f, axis);
      for (auto x : sample_points(dom, dom.dim() == 1 ? 25 : 7)) {
        const double step = 1e-5 * (1.0 + std::fabs(x[axis]));
        auto xp = x, xm = x;
        xp[axis] += step;
        xm[axis] -= step;
        const double fd = (eval_expr(f, xp) - eval_expr(f, xm)) / (2.0 * step);
        const double ex = eval_expr(df, x);
        const double err = std::fabs(fd - ex) / (1.0 + std::fabs(ex));
        worst = std::max(worst, err);
      }
      f = df;
    }
  }
  c.passed = worst < 1e-6;
  c.detail = "max relative gap " + number_text(worst);
  return c;
}

Check check_roundtrip(const Expr& h, const Domain& dom) {
  Check c{"parse_print_roundtrip", true, ""};
  const Expr back = parse_expr(to_string(h, dom.dim()), dom.dim());
  double worst = 0.0;
  for (auto x : sample_points(dom, dom.dim() == 1 ? 25 : 7))
    worst = std::max(worst, std::fabs(eval_expr(h, x) - eval_expr(back, x)));
  c.passed = worst <= 1e-12;
  c.detail = "max gap " + number_text(worst);
  return c;
}

Check check_zero_mean(const SchemeBlock& sb) {
  Check c{"transform_zero_mean", true, ""};
  const auto res = average(scheme_graded_field(sb.instance, sb.avg_order), sb.avg_order,
                           TransformConvention::ZeroMean);
  double worst = 0.0;
  for (double r : res.diagnostics.u_mean_residual) worst = std::max(worst, r);
  c.passed = worst <= 1e-12;
  c.detail = "largest mean coefficient " + number_text(worst);
  return c;
}

Check check_determinism(const SchemeBlock& sb) {
  Check c{"averaging_determinism", true, ""};
  const auto f = scheme_graded_field(sb.instance, sb.avg_order);
  const auto r1 = average(f, sb.avg_order, sb.convention);
  const auto r2 = average(f, sb.avg_order, sb.convention);
  const int d = sb.instance.h_dim();
  c.passed = r1.averaged_field().to_string(d) == r2.averaged_field().to_string(d) &&
             r1.transform().to_string(d) == r2.transform().to_string(d);
  c.detail = c.passed ? "identical term listings" : "term listings differ";
  return c;
}

Check check_dominant(const SchemeBlock& sb, const Domain& dom) {
  Check c{"dominant_term_matches_reference", true, ""};
  const SchemeInstance& s = sb.instance;
  SchemeInstance ref_s = s;
  if (s.kind == SchemeKind::Plant1D) {
    ref_s.kind = SchemeKind::Basic1D;
    ref_s.dither = DitherSpec::standard(1);
  }
  const int deg = s.kind == SchemeKind::Filtered1D ? 1 + s.gains.n : s.gains.m + s.gains.n;
  if (sb.avg_order < deg) {
    c.detail = "skipped: avg_order below the dominant degree " + std::to_string(deg);
    return c;
  }
  const auto res = average(scheme_graded_field(ref_s, deg), deg, sb.convention);
  const ReferenceAveraged ref = reference_averaged(ref_s);
  // Planar cross terms sit at degree 2m, inside the dominant band when m <= n.
  const bool with_correction = s.kind == SchemeKind::Planar && s.gains.m <= s.gains.n;
  const double eps = s.gains.eps();
  double worst = 0.0;
  const int dim = res.dim;
  for (auto x : sample_points(dom, dom.dim() == 1 ? 25 : 7)) {
    std::vector<double> y(static_cast<std::size_t>(dim), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k];
    if (s.kind == SchemeKind::Filtered1D) {
      y[1] = eval_expr(s.h, x) + 0.1;
      y[2] = 0.2;
    }
    std::vector<double> engine(static_cast<std::size_t>(dim), 0.0);
    for (int i = 1; i <= deg; ++i) {
      const auto gi = res.g[static_cast<std::size_t>(i - 1)].eval(y, 0.0, eps);
      for (int k = 0; k < dim; ++k) engine[k] += gi[k];
    }
    for (int k = 0; k < dim; ++k) {
      const double r = eval_expr(with_correction ? ref.field()[k] : ref.dominant[k], y);
      worst = std::max(worst, std::fabs(engine[k] - r) / (1e-12 + std::fabs(r) + std::fabs(engine[k])));
    }
  }
  c.passed = worst <= 1e-9;
  c.detail = "max relative gap " + number_text(worst) + " at degrees <= " + std::to_string(deg);
  return c;
}

Check check_remainder(const SchemeBlock& sb, const Domain& dom) {
  Check c{"remainder_order", true, ""};
  const SchemeInstance& s = sb.instance;
  if (s.kind == SchemeKind::Filtered1D) {
    c.detail = "skipped: the filtered gains scale with eps";
    return c;
  }
  SchemeInstance probe = s;
  if (s.kind == SchemeKind::Plant1D) {
    probe.kind = SchemeKind::Basic1D;
    probe.dither = DitherSpec::standard(1);
  }
  const int order = sb.avg_order;
  const int kmax = required_taylor_order(probe, order + 2 * probe.gains.n + probe.gains.m);
  probe.taylor_order = std::max(probe.taylor_order, kmax);
  const GradedField field = scheme_graded_field(probe, order + probe.gains.m + 2 * probe.gains.n);
  const auto res = average(field.truncated(order), order, sb.convention);
  std::vector<ResidualSample> samples;
  for (auto x : sample_points(dom, dom.dim() == 1 ? 6 : 3))
    for (double t : {0.3, 1.9, 4.1}) samples.push_back({x, t});
  const double e0 = order <= 4 ? 0.04 : 0.2;
  const std::vector<double> eps = {e0, e0 / 2.0, e0 / 4.0};
  const auto rep = autonomy_residual(field, res, eps, samples);
  if (rep.identically_zero) {
    c.detail = "residual identically zero";
    return c;
  }
  c.passed = std::fabs(rep.exponent - (order + 1)) <= 0.3;
  c.detail = "exponent " + number_text(rep.exponent) + ", expected " + std::to_string(order + 1);
  return c;
}

Check check_rk4() {
  Check c{"rk4_order", true, ""};
  const Rhs decay = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = -x[0]; };
  const double e1 = std::fabs(integrate(decay, {1.0}, 1.0, 0.1).states.back()[0] - std::exp(-1.0));
  const double e2 = std::fabs(integrate(decay, {1.0}, 1.0, 0.05).states.back()[0] - std::exp(-1.0));
  const double ratio = e1 / e2;
  c.passed = std::fabs(ratio - 16.0) <= 0.2 * 16.0;
  c.detail = "error ratio " + number_text(ratio);
  return c;
}

int run_verify(RunConfig& cfg, const RunOptions& opts, std::ostream& log) {
  const SchemeBlock& sb = need_scheme(cfg);
  const Domain& dom = cfg.ledger.domain;
  std::vector<Check> checks;
  checks.push_back(check_derivatives(sb.instance.h, dom));
  checks.push_back(check_roundtrip(sb.instance.h, dom));
  checks.push_back(check_zero_mean(sb));
  checks.push_back(check_determinism(sb));
  checks.push_back(check_dominant(sb, dom));
  checks.push_back(check_remainder(sb, dom));
  checks.push_back(check_rk4());
  bool all = true;
  json list = json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    list.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    if (opts.verbose) log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  }
  json out = stamp(cfg, "verify");
  out["scheme"] = to_string(sb.instance.kind);
  out["checks"] = list;
  out["passed"] = all;
  write_json_file(cfg.out_dir, "verify.json", out);
  return all ? 0 : 1;
}

}  // namespace

std::string config_hash(const json& j) {
  const std::string text = j.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  cfg.raw = j;
  cfg.hash = config_hash(j);
  const json& sb = block_of(j, "scheme");
  if (!sb.empty()) cfg.scheme = parse_scheme(sb);
  const int dim = cfg.scheme ? cfg.scheme->instance.h_dim() : 1;
  cfg.ledger = parse_ledger(block_of(j, "ledger"), dim);
  cfg.tuning = parse_tuning(block_of(j, "tuning"));
  cfg.sim = parse_sim(block_of(j, "sim"));
  cfg.perfmap = parse_perfmap(block_of(j, "perfmap"));
  const json& out = block_of(j, "output");
  cfg.out_dir = string_or(out, "dir", ".", "output");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

std::string dump_json(const json& j, int indent) {
  std::string out;
  dump_value(j, out, indent, 0);
  return out;
}

int run_command(const std::string& command, RunConfig& cfg, const RunOptions& opts,
                std::ostream& log) {
  if (opts.out_dir) cfg.out_dir = *opts.out_dir;
  const auto start = std::chrono::steady_clock::now();
  int status = 0;
  if (command == "tune") status = run_tune(cfg, opts, log);
  else if (command == "simulate") status = run_simulate(cfg, opts, log);
  else if (command == "perfmap") status = run_perfmap(cfg, opts, log);
  else if (command == "average") status = run_average(cfg, opts, log);
  else if (command == "verify") status = run_verify(cfg, opts, log);
  else throw ConfigError("unknown command " + command);
  if (opts.verbose) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << command << " finished in " << number_text(s) << " s\n";
  }
  return status;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
      dynamic_cast<const ParseError*>(&e) || dynamic_cast<const json::exception*>(&e))
    return 2;
  if (dynamic_cast<const InfeasibleError*>(&e)) return 3;
  if (dynamic_cast<const OverflowError*>(&e)) return 4;
  return 1;
}

json error_json(const std::exception& e) {
  const int code = exit_code_for(e);
  const char* kind = code == 2 ? "config" : code == 3 ? "infeasible" : code == 4 ? "overflow" : "internal";
  return {{"error", {{"kind", kind}, {"message", e.what()}, {"exit_code", code}}},
          {"tool", "esgain"},
          {"version", kToolVersion}};
}

}  // namespace esgain::app
