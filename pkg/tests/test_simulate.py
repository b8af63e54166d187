import warnings

import pytest

from qepf.distributions import make_model
from qepf.eqtest import TestConfig
from qepf.errors import DomainError
from qepf.simulate import (
    BIAS_MSE_MODELS,
    POWER_MODELS,
    POWER_SCENARIOS,
    run_bias_mse,
    run_power_size,
    run_power_size_table,
)

WEIBULL = BIAS_MSE_MODELS[1]


def test_default_grid_shape():
    rep = run_bias_mse(reps=100, seed=1)
    assert len(rep.rows) == 36 and rep.skipped == []
    lines = rep.to_csv().splitlines()
    assert lines[0] == "Distribution,u,n,True,Bias,MSE"
    assert len(lines) == 37


def test_mse_at_least_bias_squared():
    for r in run_bias_mse(reps=100, seed=2).rows:
        assert r.mse >= r.bias ** 2


def test_single_replicate():
    with pytest.warns(UserWarning):
        rep = run_bias_mse([WEIBULL], [0.9], [5000], reps=1, seed=3)
    r = rep.rows[0]
    assert r.mse == r.bias ** 2


def test_true_values():
    rep = run_bias_mse(reps=100, seed=1)
    truth = {(r.family, r.u): r.true_value for r in rep.rows}
    assert truth[(BIAS_MSE_MODELS[2][0], 0.95)] == pytest.approx(1.6667, abs=5e-5)
    assert truth[(BIAS_MSE_MODELS[0][0], 0.9)] == pytest.approx(1.4633, abs=5e-5)
    assert truth[(BIAS_MSE_MODELS[1][0], 0.85)] == pytest.approx(1.2206, abs=5e-5)


def test_reproducible_and_cells_independent():
    a = run_bias_mse(reps=200, seed=5)
    b = run_bias_mse(reps=200, seed=5)
    assert a.to_csv() == b.to_csv()
    # a cell's stream depends only on its indices, not on what else ran
    sub = run_bias_mse(BIAS_MSE_MODELS, [0.85, 0.90, 0.95], [25, 50, 100, 1000], reps=200, seed=5)
    assert sub.rows == a.rows
    assert run_bias_mse(reps=200, seed=6).rows != a.rows


def test_infeasible_cells_skipped():
    rep = run_bias_mse([WEIBULL], [0.95, 0.5], [10], reps=100)
    assert len(rep.rows) == 1 and rep.rows[0].u == 0.5
    assert len(rep.skipped) == 1 and "u=0.95" in rep.skipped[0]


def test_bias_decay():
    rep = run_bias_mse(reps=1000, seed=0)
    for label, _ in BIAS_MSE_MODELS:
        for u in (0.85, 0.90, 0.95):
            cell = {r.n: r for r in rep.rows if r.family == label and r.u == u}
            assert abs(cell[1000].bias) <= abs(cell[25].bias) + 0.01


def test_heavy_tail_ordering():
    rep = run_bias_mse(reps=1000, seed=0)
    pick = {(r.family, r.u, r.n): r.mse for r in rep.rows}
    pareto = pick[(BIAS_MSE_MODELS[2][0], 0.95, 50)]
    weibull = pick[(BIAS_MSE_MODELS[1][0], 0.95, 50)]
    assert pareto >= 10 * weibull


def test_reps_validation():
    with pytest.raises(DomainError):
        run_bias_mse(reps=0)


def test_power_size_small():
    cfg = TestConfig(B=200, seed=4)
    g, l = POWER_MODELS["Gamma"], POWER_MODELS["LMRQD"]
    rep = run_power_size(g, l, [50, 300], mc_trials=100, test_config=cfg)
    rates = {r.n: r.rejection_rate for r in rep.rows}
    assert rates[300] > rates[50]
    assert all(0.0 <= r.rejection_rate <= 1.0 and r.n_trials == 100 and r.B == 200 for r in rep.rows)
    assert rep.to_csv().splitlines()[0] == "Scenario,n,rate,n_trials,B,failures"
    assert run_power_size(g, l, [50, 300], mc_trials=100, test_config=cfg).rows == rep.rows


def test_alpha_one_always_rejects():
    cfg = TestConfig(B=200, alpha=1.0)
    rep = run_power_size(POWER_MODELS["Gamma"], POWER_MODELS["Lognormal"], [50], 100, cfg)
    # rejection needs p < 1, i.e. one bootstrap statistic below the observed one
    assert rep.rows[0].rejection_rate >= 0.95


def test_trial_failures_counted():
    cfg = TestConfig(B=200)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = run_power_size(make_model("uniform"), make_model("uniform"), [5], 100, cfg)
    # n = 5 cannot cover the grid: every trial fails and is counted
    assert rep.rows[0].failures == 100
    assert rep.skipped


def test_mc_trials_validation():
    with pytest.raises(DomainError):
        run_power_size(POWER_MODELS["Gamma"], POWER_MODELS["Gamma"], [50], 50)


def test_table_shape():
    rep = run_power_size_table(n_list=[50], mc_trials=100, test_config=TestConfig(B=200))
    assert len(rep.rows) == len(POWER_SCENARIOS) == 6
    assert [r.scenario for r in rep.rows][:3] == ["Gamma vs LMRQD", "Gamma vs Lognormal", "LMRQD vs Lognormal"]
