import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qepf.distributions import make_model
from qepf.empirical import (
    PersistenceCurve,
    SampleArm,
    bootstrap_pointwise_ci,
    empirical_curve,
    empirical_qepf,
    empirical_quantile,
    empirical_vitality,
    rank_of,
    read_values_csv,
)
from qepf.errors import DomainError, TailEmptyError
from qepf.simulate import BIAS_MSE_MODELS

ARM5 = SampleArm([5, 3, 1, 4, 2])


def naive_qepf(values, u):
    """Direct reading of the estimator with exact arithmetic for the rank
    and the tail sum; u is taken as the decimal it prints as."""
    xs = sorted(float(v) for v in values)
    n = len(xs)
    k = math.ceil(Fraction(repr(u)) * n)
    if k >= n:
        return None
    total = sum(Fraction(x) for x in xs[k:])
    return float(total) / (n - k) / xs[k - 1]


def test_quantile_examples():
    assert empirical_quantile(ARM5, 0.6) == 3
    assert empirical_quantile(ARM5, 0.61) == 4
    assert empirical_quantile(SampleArm([7.0]), 1.0) == 7
    assert SampleArm([7.0]).n == 2


def test_vitality_and_qepf_examples():
    assert empirical_vitality(ARM5, 0.6) == 4.5
    assert empirical_vitality(ARM5, 0.8) == 5
    assert empirical_qepf(ARM5, 0.6) == 1.5
    assert empirical_qepf(ARM5, 0.8) == 1.25
    const = SampleArm([2.5] * 9)
    for u in (0.1, 0.5, 0.8):
        assert empirical_vitality(const, u) == 2.5
        assert empirical_qepf(const, u) == 1.0


def test_curve_examples():
    c = empirical_curve(ARM5, [0.6, 0.8])
    np.testing.assert_array_equal(c.values, [1.5, 1.25])
    np.testing.assert_array_equal(empirical_curve(SampleArm([3.0] * 20), [0.2, 0.5, 0.9]).values, 1.0)


def test_curve_pareto_draws():
    arm = make_model("pareto", alpha=2.5).sample(10_000, 11)
    assert abs(empirical_curve(arm, [0.85]).values[0] - 5 / 3) <= 0.15


def test_tail_empty_rejected():
    with pytest.raises(TailEmptyError, match="trimmed"):
        empirical_qepf(ARM5, 0.9)
    with pytest.raises(TailEmptyError):
        empirical_curve(ARM5, [0.5, 0.95])


@pytest.mark.parametrize("values", [[1.0, 0.0, 2.0], [1.0, -3.0], [1.0, math.inf], [], [math.nan, 1.0]])
def test_arm_rejects_bad_values(values):
    with pytest.raises(DomainError):
        SampleArm(values)


def test_arm_is_sorted_and_read_only():
    arm = SampleArm([3.0, 1.0, 2.0])
    np.testing.assert_array_equal(arm.values, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        arm.values[0] = 9.0


def test_rank_snapping():
    assert rank_of(5, 0.6) == 3       # 5 * 0.6 evaluates to 3.0000000000000004
    assert rank_of(10, 0.1) == 1
    assert rank_of(100, 0.07) == 7
    assert rank_of(5, 0.61) == 4


def test_brute_force_equivalence():
    rng = np.random.default_rng(2024)
    u_grid = [round(0.05 * i, 2) for i in range(1, 20)] + [0.123, 0.377, 0.618, 0.89]
    checked = 0
    for trial in range(500):
        n = int(rng.integers(1, 13))
        if trial % 3 == 0:
            vals = rng.integers(1, 5, size=n).astype(float)  # ties
        else:
            vals = rng.lognormal(0.0, 1.5, size=n)
        arm = SampleArm(vals)
        for u in u_grid:
            expected = naive_qepf(arm.values, u)
            if expected is None:
                with pytest.raises(TailEmptyError):
                    empirical_qepf(arm, u)
            else:
                assert empirical_qepf(arm, u) == expected
                checked += 1
    assert checked > 2000


@given(st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=40), st.floats(0.01, 0.99), st.integers(-6, 6))
def test_scale_invariance_power_of_two(values, u, e):
    arm = SampleArm(values)
    if rank_of(arm.n, u) >= arm.n:
        return
    assert empirical_qepf(arm.scaled(2.0 ** e), u) == empirical_qepf(arm, u)


@given(st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=40), st.floats(0.01, 0.99), st.floats(1e-3, 1e3))
def test_scale_invariance_general(values, u, c):
    # c * x rounds, so equality holds to a few ulps rather than bitwise
    arm = SampleArm(values)
    if rank_of(arm.n, u) >= arm.n:
        return
    assert empirical_qepf(arm.scaled(c), u) == pytest.approx(empirical_qepf(arm, u), rel=1e-12)


@given(st.lists(st.floats(1e-6, 1e6), min_size=2, max_size=60), st.floats(0.001, 0.999))
def test_at_least_one(values, u):
    arm = SampleArm(values)
    if rank_of(arm.n, u) >= arm.n:
        return
    assert empirical_qepf(arm, u) >= 1.0


@pytest.mark.parametrize("label, model", BIAS_MSE_MODELS)
def test_consistency(label, model):
    rng = np.random.default_rng(9)
    for u in (0.85, 0.90, 0.95):
        truth = model.closed_form_qepf(u)
        med = {}
        for n in (25, 1000):
            draws = np.sort(model.sample_matrix(rng, (200, n)), axis=1)
            est = [empirical_qepf(SampleArm(row), u) for row in draws]
            med[n] = np.median(np.abs(np.array(est) - truth))
        assert med[1000] < med[25]


def test_bootstrap_ci():
    lo, hi = bootstrap_pointwise_ci(ARM5, 0.6, B=1000, level=0.95, seed=3)
    assert 1.0 <= lo <= hi
    assert (lo, hi) == bootstrap_pointwise_ci(ARM5, 0.6, B=1000, level=0.95, seed=3)
    assert bootstrap_pointwise_ci(SampleArm([4.0] * 30), 0.7, B=500) == (1.0, 1.0)


def test_bootstrap_ci_validation():
    with pytest.raises(DomainError):
        bootstrap_pointwise_ci(ARM5, 0.6, B=100)
    with pytest.raises(DomainError):
        bootstrap_pointwise_ci(ARM5, 0.6, level=1.0)


def test_persistence_curve_validation():
    with pytest.raises(DomainError):
        PersistenceCurve([0.5, 0.4], [1.2, 1.3])
    with pytest.raises(DomainError):
        PersistenceCurve([0.5], [1.2, 1.3])
    with pytest.raises(DomainError):
        PersistenceCurve([0.5], [0.9], check_persistence=True)
    text = PersistenceCurve([0.5], [1.5], "x").to_csv()
    assert text.splitlines() == ["u,value,label", "0.5,1.5,x"]


def test_read_values_csv_forms():
    assert list(read_values_csv("value\n1\n2.5\n\n3\n")["values"]) == [1.0, 2.5, 3.0]
    assert list(read_values_csv("1\n2\n")["values"]) == [1.0, 2.0]
    g = read_values_csv("group,value\nref,1\nbio,2\nref,3\n")
    assert list(g) == ["ref", "bio"]
    assert list(g["ref"]) == [1.0, 3.0]


@pytest.mark.parametrize("text, msg", [
    ("1\n2\nabc\n4\n", "line.* 3"),
    ("group,value\nref,1\nref,x\nbio\n", "lines 3, 4"),
    ("a,b\nref,1\n", "header"),
    ("", "no data"),
])
def test_read_values_csv_errors(text, msg):
    with pytest.raises(DomainError, match=msg):
        read_values_csv(text)
