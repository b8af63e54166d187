import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import frozen
from qepf.distributions import make_model
from qepf.errors import DomainError, InfiniteMeanError
from qepf.persistence import (
    Quadrature,
    hazard_quantile,
    lmoment_tail_check,
    lorenz,
    mean,
    model_curve,
    mrq,
    qepf,
    qepf_quadrature,
    qepf_via_lorenz,
    qepf_via_ttt,
    ttt,
    vitality,
)

FAMILIES = [
    make_model("uniform"),
    make_model("exponential", **{"lambda": 2.0}),
    make_model("loglogistic", alpha=2.0, beta=3.0),
    make_model("power", alpha=2.0, beta=2.0),
    make_model("weibull", k=2.0),
    make_model("gamma", k=2.5, theta=3.0),
    make_model("pareto", alpha=2.5),
    make_model("lmrqd", alpha=0.5, mu=5.0),
    make_model("betahalfone"),
    make_model("lognormal", meanlog=0.3, sdlog=0.5),
]
IDS = [m.describe() for m in FAMILIES]
GRID = [round(0.05 * i, 2) for i in range(1, 20)]


def test_vitality_examples():
    assert vitality(make_model("uniform"), 0.5) == pytest.approx(0.75, rel=1e-12)
    assert vitality(make_model("exponential"), 1e-12) == pytest.approx(1.0, rel=1e-9)
    assert vitality(make_model("betahalfone"), 0.5) == pytest.approx(1.75 / 3, rel=1e-12)


def test_qepf_examples():
    assert qepf(make_model("pareto", alpha=2.5), 0.85) == pytest.approx(1.6667, abs=5e-5)
    assert qepf(make_model("exponential", **{"lambda": 3.0}), 0.5) == pytest.approx(1 + 1 / math.log(2), rel=1e-14)
    assert qepf(make_model("betahalfone"), 0.9) == pytest.approx(2.71 / (3 * 0.81), rel=1e-14)


def test_mrq_examples():
    assert mrq(make_model("betahalfone"), 0.5) == pytest.approx(1 / 3, rel=1e-12)
    assert mrq(make_model("uniform"), 0.5) == pytest.approx(0.25, rel=1e-12)
    for u in (0.1, 0.5, 0.9, 0.999):
        assert mrq(make_model("exponential"), u) == pytest.approx(1.0, rel=1e-9)


def test_hazard_examples():
    assert hazard_quantile(make_model("betahalfone"), 0.1) == pytest.approx(1 / (2 * 0.1 * 0.9), rel=1e-14)
    assert hazard_quantile(make_model("uniform"), 0.5) == pytest.approx(2.0, rel=1e-14)
    for u in (0.2, 0.7):
        assert hazard_quantile(make_model("exponential"), u) == pytest.approx(1.0, rel=1e-14)


def test_lorenz_examples():
    for m in FAMILIES:
        assert lorenz(m, 0.0) == 0.0 and lorenz(m, 1.0) == 1.0
    u = 1 - math.exp(-1)
    assert lorenz(make_model("exponential"), u) == pytest.approx(u - math.exp(-1), rel=1e-10)
    assert lorenz(make_model("uniform"), 0.5) == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("u, expected", frozen.LORENZ_WEIBULL)
def test_lorenz_oracle(u, expected):
    assert lorenz(make_model("weibull", k=2.0), u) == pytest.approx(expected, rel=1e-10)


def test_ttt_examples():
    assert ttt(make_model("exponential"), 0.5) == pytest.approx(0.5, rel=1e-12)
    assert ttt(make_model("weibull", k=2.0), 0.0) == 0.0
    assert ttt(make_model("uniform"), 1.0) == pytest.approx(0.5, rel=1e-12)


@pytest.mark.parametrize("u, expected", frozen.TTT_GAMMA)
def test_ttt_oracle(u, expected):
    assert ttt(make_model("gamma", k=2.5, theta=3.0), u) == pytest.approx(expected, rel=1e-10)


def test_identity_route_examples():
    u = 1 - math.exp(-1)
    for route in (qepf_via_lorenz, qepf_via_ttt):
        assert route(make_model("exponential"), u) == pytest.approx(2.0, rel=1e-9)
        assert route(make_model("uniform"), 0.5) == pytest.approx(1.5, rel=1e-9)
        assert route(make_model("pareto", alpha=2.5), 0.7) == pytest.approx(5 / 3, rel=1e-9)


@pytest.mark.parametrize("m", FAMILIES, ids=IDS)
def test_mrq_identity(m):
    for u in GRID:
        assert abs(qepf(m, u) - (1 + mrq(m, u) / m.quantile(u))) <= 1e-9


@pytest.mark.parametrize("m", FAMILIES, ids=IDS)
def test_lorenz_and_ttt_identities(m):
    for u in GRID:
        p = qepf(m, u)
        assert abs(qepf_via_lorenz(m, u) - p) <= 1e-7
        assert abs(qepf_via_ttt(m, u) - p) <= 1e-7


@pytest.mark.parametrize("m", FAMILIES, ids=IDS)
def test_lower_bound(m):
    assert all(qepf(m, u) > 1 for u in GRID)


@pytest.mark.parametrize("m", FAMILIES, ids=IDS)
def test_scale_invariance(m):
    for a in (0.1, 3.0, 100.0):
        s = m.with_scale(a)
        for u in (0.2, 0.6, 0.9):
            assert qepf_quadrature(s, u) == pytest.approx(qepf_quadrature(m, u), rel=1e-10)


@pytest.mark.parametrize("m", FAMILIES, ids=IDS)
def test_location_sensitivity(m):
    u = 0.6
    v, q = vitality(m, u), m.quantile(u)
    prev = qepf(m, u)
    for b in (0.01, 0.5, 3.0, 50.0):
        pb = qepf(m.with_shift(b), u)
        assert pb == pytest.approx((v + b) / (q + b), rel=1e-9)
        assert pb < prev
        prev = pb
    huge = qepf(m.with_shift(1e6 * mean(m)), u)
    assert abs(huge - 1) <= 1e-3


@pytest.mark.parametrize("m", [make_model("lmrqd", alpha=0.5, mu=5.0), make_model("weibull", k=2.0)])
def test_monotone_attenuation(m):
    vals = [qepf(m, u) for u in np.linspace(0.5, 0.99, 50)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("m", [
    make_model("uniform"), make_model("betahalfone"), make_model("power", beta=2.0),
    make_model("weibull", k=2.0), make_model("gamma", k=2.5), make_model("lmrqd", alpha=0.5, mu=5.0),
], ids=lambda m: m.describe())
def test_limit_at_one(m):
    # does not hold for Pareto I, whose persistence is constant above 1
    assert qepf(m, 0.999999) - 1 < qepf(m, 0.999) - 1 < qepf(m, 0.9) - 1
    assert qepf(m, 0.999999) < 1.1


@pytest.mark.parametrize("m, u, target", [
    (make_model("exponential"), 0.5, 1 + 1 / math.log(2)),
    (make_model("pareto", alpha=2.5), 0.6, 5 / 3),
    (make_model("uniform"), 0.5, 1.5),
], ids=["exponential", "pareto", "uniform"])
def test_lmoment_examples(m, u, target):
    mc, se, analytic = lmoment_tail_check(m, u, n_mc=200_000, seed=5)
    assert analytic == pytest.approx(target, rel=1e-10)
    assert abs(mc - analytic) <= 3 * se


def test_lmoment_needs_tail_points():
    with pytest.raises(DomainError):
        lmoment_tail_check(make_model("uniform"), 0.999, n_mc=1000)
    with pytest.raises(DomainError):
        lmoment_tail_check(make_model("uniform"), 0.5, n_mc=100)


def test_fixed_rule_agrees():
    fixed = Quadrature(rule="fixed_gauss_legendre", points=128)
    for m in (make_model("weibull", k=2.0), make_model("lmrqd", alpha=0.5, mu=5.0), make_model("uniform")):
        assert qepf_quadrature(m, 0.5, fixed) == pytest.approx(qepf(m, 0.5), rel=1e-6)


def test_errors():
    with pytest.raises(InfiniteMeanError):
        qepf(make_model("pareto", alpha=0.9), 0.5)
    with pytest.raises(InfiniteMeanError):
        vitality(make_model("loglogistic", beta=1.0), 0.5)
    with pytest.raises(DomainError):
        qepf(make_model("uniform"), 1.0)
    with pytest.raises(DomainError):
        Quadrature(rule="simpson")
    with pytest.raises(DomainError):
        Quadrature(points=4)


def test_model_curve():
    m = make_model("weibull", k=2.0)
    c = model_curve(m, [0.2, 0.5, 0.8])
    assert len(c) == 3 and c.label == "qepf"
    np.testing.assert_allclose(c.values, [qepf(m, u) for u in (0.2, 0.5, 0.8)])
    h = model_curve(m, [0.5], "hazard")
    assert h.values[0] == pytest.approx(hazard_quantile(m, 0.5))
    with pytest.raises(DomainError):
        model_curve(m, [0.5], "gini")


@given(st.floats(0.02, 0.98), st.floats(0.0, 20.0))
def test_shifted_exponential_formula(u, b):
    # V = Q + 1 for the unit exponential, so P_b = 1 + 1 / (Q + b)
    m = make_model("exponential", shift=b)
    q = -math.log1p(-u)
    assert qepf(m, u) == pytest.approx(1 + 1 / (q + b), rel=1e-9)
