import math

import numpy as np
import pytest

import esgain

H = "-cos(x) + 0.16666666666666666*x^3"


def test_expr_derivative_and_eval():
    h = esgain.Expr(H)
    d1 = h.derivative()
    assert d1([0.5]) == pytest.approx(math.sin(0.5) + 0.5 * 0.25, abs=1e-14)
    assert h.derivative(order=3)([0.0]) == pytest.approx(1.0)


def test_parse_error_is_value_error():
    with pytest.raises(ValueError):
        esgain.Expr("1/x")


def test_ledger_and_closed_form():
    ledger = esgain.build_ledger(esgain.Expr(H), -1.0, 1.0, 3, 0.0)
    assert ledger.kappa == pytest.approx(1.0)
    assert ledger.norms[3] == pytest.approx(1.0 + math.sin(1.0), rel=1e-9)
    sol = esgain.solve_closed_form(ledger, 0.01, 0.01)
    assert sol["gains"]["eta"] == pytest.approx(0.01, abs=1e-6)
    assert sol["gains"]["a"] == pytest.approx(0.209, abs=3e-3)


def test_frequency():
    ledger = esgain.build_ledger(esgain.Expr(H), x_star=0.0)
    f = esgain.tune_frequency(ledger, 0.209, 0.01)
    assert f["omega"] == pytest.approx(0.209 / (2 * (0.01 + 0.209)))


def test_average_dominant_term():
    h = esgain.Expr(H)
    scheme = esgain.Scheme("Basic1D", h, esgain.Gains(a=0.1, eta=0.05), avg_order=2)
    res = esgain.average(scheme, 2)
    g2 = res.g(2)[0]
    p = 0.5
    for y in (-0.7, 0.1, 0.9):
        assert g2([y]) == pytest.approx(-0.5 * p * h.derivative()([y]), abs=1e-13)


def test_simulate_and_convergence():
    h = esgain.Expr(H)
    scheme = esgain.Scheme("Basic1D", h, esgain.Gains(a=0.2084311, eta=0.01, m=3, n=1))
    t, x = esgain.simulate(scheme, [1.0], 400 * 2 * math.pi, 2 * math.pi / 200, stride=10)
    assert x.shape == (t.shape[0], 1)
    assert np.all(np.isfinite(x))
    assert abs(x[-1, 0]) < abs(x[0, 0])
    ct = esgain.convergence_time(t, x[:, 0], 0.0, 0.5)
    assert 0.0 < ct < t[-1]


def test_performance_map_shape():
    h = esgain.Expr(H)
    speed, error, feasible = esgain.performance_map(
        h, esgain.log_grid(0.05, 0.5, 3), esgain.log_grid(0.5, 2.0, 2), horizon_periods=20, threads=1
    )
    assert speed.shape == (3, 2) and error.shape == (3, 2) and feasible.shape == (3, 2)
    assert feasible.all()
