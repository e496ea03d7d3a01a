#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "esgain/averaging.hpp"
#include "esgain/contraction.hpp"
#include "esgain/error.hpp"
#include "esgain/metaopt.hpp"
#include "esgain/schemes.hpp"
#include "esgain/sim.hpp"

namespace py = pybind11;
using namespace esgain;

namespace {

py::dict solution_dict(const MetaOptSolution& s) {
  py::dict gains;
  gains["a"] = s.gains.a;
  gains["eta"] = s.gains.eta;
  gains["m"] = s.gains.m;
  gains["n"] = s.gains.n;
  if (s.kind == SchemeKind::Filtered1D) {
    gains["mu"] = s.gains.mu;
    gains["gamma"] = s.gains.gamma;
  }
  if (s.kind == SchemeKind::Plant1D) gains["omega"] = s.gains.omega;

  py::dict d;
  d["kind"] = to_string(s.kind);
  d["gains"] = gains;
  d["p"] = s.p;
  d["objective"] = s.objective;
  py::dict budget;
  budget["K1"] = s.budget.K1;
  budget["K2"] = s.budget.K2;
  budget["K3"] = s.budget.K3;
  budget["K4"] = s.budget.K4;
  budget["delta1"] = s.budget.delta1;
  budget["delta2"] = s.budget.delta2;
  d["budget"] = budget;
  py::list cons;
  for (const auto& c : s.constraints) {
    py::dict cd;
    cd["name"] = c.name;
    cd["formula"] = c.formula;
    cd["value"] = c.value;
    cd["bound"] = c.bound;
    cd["active"] = c.active;
    cons.append(cd);
  }
  d["constraints"] = cons;
  d["active"] = s.active;
  d["provenance"] = s.provenance;
  if (s.consistency) {
    py::dict c;
    c["p"] = s.consistency->p;
    c["p_near_unity"] = s.consistency->p_near_unity;
    c["ratio"] = s.consistency->ratio;
    c["neglected_small"] = s.consistency->neglected_small;
    d["consistency"] = c;
  }
  if (s.frequency) {
    py::dict f;
    f["omega"] = s.frequency->omega;
    f["omega_stationary"] = s.frequency->omega_stationary;
    d["frequency"] = f;
  }
  return d;
}

TransformConvention convention_of(const std::string& s) {
  if (s == "zero_mean") return TransformConvention::ZeroMean;
  if (s == "zero_at_origin") return TransformConvention::ZeroAtOrigin;
  if (s == "zero_mean_generator") return TransformConvention::ZeroMeanGenerator;
  throw InvalidArgument("unknown transform convention " + s);
}

py::array_t<double> states_array(const Trajectory& t) {
  py::array_t<double> out({t.size(), static_cast<std::size_t>(t.dim)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < t.size(); ++i)
    for (int k = 0; k < t.dim; ++k) m(i, k) = t.states[i][static_cast<std::size_t>(k)];
  return out;
}

}  // namespace

PYBIND11_MODULE(_esgain, m) {
  m.doc() = "Extremum seeking averaging, gain tuning and simulation";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<OverflowError>(m, "OverflowError", PyExc_ArithmeticError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);

  py::class_<Expr>(m, "Expr")
      .def(py::init([](const std::string& text, int dim) { return parse_expr(text, dim); }),
           py::arg("text"), py::arg("dim") = 1)
      .def("__call__", [](const Expr& e, std::vector<double> x) { return eval_expr(e, x); })
      .def("derivative",
           [](const Expr& e, int axis, unsigned k) { return differentiate(e, axis, k); },
           py::arg("axis") = 0, py::arg("order") = 1)
      .def("to_string", [](const Expr& e, int dim) { return to_string(e, dim); },
           py::arg("dim") = 1)
      .def("__str__", [](const Expr& e) { return to_string(e, std::max(1, e.max_variable() + 1)); });

  py::class_<Gains>(m, "Gains")
      .def(py::init([](double a, double eta, int m_, int n_, double mu, double gamma,
                       double omega) {
             Gains g;
             g.a = a;
             g.eta = eta;
             g.m = m_;
             g.n = n_;
             g.mu = mu;
             g.gamma = gamma;
             g.omega = omega;
             return g;
           }),
           py::arg("a"), py::arg("eta"), py::arg("m") = 1, py::arg("n") = 1, py::arg("mu") = 0.0,
           py::arg("gamma") = 0.0, py::arg("omega") = 1.0)
      .def_readwrite("a", &Gains::a)
      .def_readwrite("eta", &Gains::eta)
      .def_readwrite("m", &Gains::m)
      .def_readwrite("n", &Gains::n)
      .def_readwrite("mu", &Gains::mu)
      .def_readwrite("gamma", &Gains::gamma)
      .def_readwrite("omega", &Gains::omega)
      .def_property_readonly("eps", &Gains::eps)
      .def_property_readonly("p", &Gains::p);

  py::class_<SchemeInstance>(m, "Scheme")
      .def(py::init([](const std::string& kind, const Expr& h, const Gains& g, int avg_order) {
             return make_scheme(parse_scheme_kind(kind), h, g, avg_order);
           }),
           py::arg("kind"), py::arg("h"), py::arg("gains"), py::arg("avg_order") = 2)
      .def_property_readonly("kind", [](const SchemeInstance& s) { return to_string(s.kind); })
      .def_readwrite("gains", &SchemeInstance::gains)
      .def_readwrite("taylor_order", &SchemeInstance::taylor_order)
      .def_property_readonly("state_dim", &SchemeInstance::state_dim)
      .def("rhs", [](const SchemeInstance& s, double t, std::vector<double> x) {
        std::vector<double> dx(x.size());
        scheme_rhs(s)(t, x, dx);
        return dx;
      });

  py::class_<BoundsLedger>(m, "BoundsLedger")
      .def_readonly("norms", &BoundsLedger::norms)
      .def_readonly("kappa", &BoundsLedger::kappa)
      .def_readonly("x_star", &BoundsLedger::x_star)
      .def_readonly("composites", &BoundsLedger::composites)
      .def("norm", &BoundsLedger::norm);

  m.def(
      "build_ledger",
      [](const Expr& h, double lo, double hi, int order, std::optional<double> x_star) {
        LedgerOptions o;
        if (x_star) o.x_star = std::vector<double>{*x_star};
        return build_ledger(h, Domain::interval(lo, hi), order, o);
      },
      py::arg("h"), py::arg("lo") = -1.0, py::arg("hi") = 1.0, py::arg("order") = 3,
      py::arg("x_star") = py::none(), "Sup-norm ledger of a one-dimensional h on [lo, hi].");

  m.def(
      "solve_closed_form",
      [](const BoundsLedger& L, double d1, double d2) {
        return solution_dict(solve_strategy3_closed_form(L, d1, d2));
      },
      py::arg("ledger"), py::arg("delta1") = 0.01, py::arg("delta2") = 0.01);

  m.def(
      "solve_numeric",
      [](const BoundsLedger& L, int strategy, double delta1, double delta2, double delta, int m_,
         int n_, std::optional<Expr> h, unsigned threads) {
        MetaOptProblem prob;
        prob.ledger = L;
        prob.strategy = strategy;
        prob.delta = delta;
        prob.delta1 = delta1;
        prob.delta2 = delta2;
        prob.m = m_;
        prob.n = n_;
        prob.grid.threads = threads;
        if (strategy != 3 && !h) throw InvalidArgument("strategies 1, 2 and 4 need h for the remainder model");
        MetaOptSolution sol;
        {
          py::gil_scoped_release release;
          if (strategy != 3) prob.remainder = build_remainder_model(*h, L.domain);
          sol = solve_numeric(prob);
        }
        return solution_dict(sol);
      },
      py::arg("ledger"), py::arg("strategy") = 3, py::arg("delta1") = 0.01,
      py::arg("delta2") = 0.01, py::arg("delta") = 0.02, py::arg("m") = 1, py::arg("n") = 1,
      py::arg("h") = py::none(), py::arg("threads") = 1);

  m.def(
      "tune_frequency",
      [](const BoundsLedger& L, double a, double eta) {
        const auto f = tune_frequency(L, a, eta);
        py::dict d;
        d["omega"] = f.omega;
        d["omega_stationary"] = f.omega_stationary;
        d["objective_at_omega"] = f.objective_at_omega;
        d["objective_at_stationary"] = f.objective_at_stationary;
        return d;
      },
      py::arg("ledger"), py::arg("a"), py::arg("eta"));

  m.def(
      "tune_filtered",
      [](const BoundsLedger& L, double d1, double d2) {
        return solution_dict(tune_filtered(L, d1, d2));
      },
      py::arg("ledger"), py::arg("delta1") = 0.01, py::arg("delta2") = 0.01);

  py::class_<AveragingResult>(m, "AveragingResult")
      .def_readonly("order", &AveragingResult::order)
      .def_readonly("dim", &AveragingResult::dim)
      .def("g", &AveragingResult::g_expr, py::arg("degree"))
      .def("averaged", [](const AveragingResult& r, std::vector<double> y,
                          double eps) { return r.averaged_field().eval(y, 0.0, eps); })
      .def("transform", [](const AveragingResult& r, std::vector<double> y, double t,
                           double eps) { return transform_point(r, y, t, eps); });

  m.def(
      "average",
      [](const SchemeInstance& s, int order, const std::string& convention) {
        SchemeInstance probe = s;
        probe.taylor_order = std::max(probe.taylor_order, required_taylor_order(probe, order));
        return average(scheme_graded_field(probe, order), order, convention_of(convention));
      },
      py::arg("scheme"), py::arg("order"), py::arg("convention") = "zero_mean");

  m.def(
      "simulate",
      [](const SchemeInstance& s, std::vector<double> x0, double horizon, double dt,
         std::size_t stride) {
        Trajectory t;
        {
          py::gil_scoped_release release;
          t = integrate(scheme_rhs(s), std::move(x0), horizon, dt, stride);
        }
        return py::make_tuple(py::array_t<double>(t.times.size(), t.times.data()),
                              states_array(t));
      },
      py::arg("scheme"), py::arg("x0"), py::arg("horizon"), py::arg("dt"), py::arg("stride") = 1,
      "RK4 trajectory of the scheme; returns (times, states).");

  m.def(
      "convergence_time",
      [](py::array_t<double> times, py::array_t<double> x, double x_star, double band) {
        auto tv = times.unchecked<1>();
        auto xv = x.unchecked<1>();
        if (tv.shape(0) != xv.shape(0)) throw InvalidArgument("times and x differ in length");
        Trajectory t;
        t.dim = 1;
        for (py::ssize_t i = 0; i < tv.shape(0); ++i) {
          t.times.push_back(tv(i));
          t.states.push_back({xv(i)});
        }
        return convergence_time(t, {x_star}, band);
      },
      py::arg("times"), py::arg("x"), py::arg("x_star"), py::arg("band"));

  m.def(
      "performance_map",
      [](const Expr& h, std::vector<double> a_grid, std::vector<double> p_grid,
         double horizon_periods, unsigned threads) {
        PerfMapOptions o;
        o.horizon_periods = horizon_periods;
        o.threads = threads;
        PerfMap map;
        {
          py::gil_scoped_release release;
          map = performance_map(h, a_grid, p_grid, o);
        }
        const std::size_t na = a_grid.size(), np = p_grid.size();
        py::array_t<double> speed({na, np}), error({na, np});
        py::array_t<bool> feasible({na, np});
        auto s = speed.mutable_unchecked<2>();
        auto e = error.mutable_unchecked<2>();
        auto f = feasible.mutable_unchecked<2>();
        for (std::size_t i = 0; i < na; ++i)
          for (std::size_t j = 0; j < np; ++j) {
            s(i, j) = map.at(i, j).speed;
            e(i, j) = map.at(i, j).error;
            f(i, j) = map.at(i, j).feasible;
          }
        return py::make_tuple(speed, error, feasible);
      },
      py::arg("h"), py::arg("a_grid"), py::arg("p_grid"), py::arg("horizon_periods") = 300.0,
      py::arg("threads") = 0, "Basic1D map with eta = p a^3; returns (speed, error, feasible).");

  m.def("log_grid", &log_grid, py::arg("lo"), py::arg("hi"), py::arg("n"));
}
