"""Monte Carlo studies: estimator bias/MSE and test power/size.

Every cell draws from its own stream, derived from the master seed and the
cell's indices, so any single cell can be reproduced in isolation.
"""
import csv
import io
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .distributions import make_model
from .empirical import rank_of
from .eqtest import TestConfig, run_test
from .errors import DomainError
from .kernels import qepf_at_ranks

__all__ = [
    "BiasMseRow",
    "PowerSizeRow",
    "SimReport",
    "BIAS_MSE_MODELS",
    "BIAS_MSE_U",
    "BIAS_MSE_N",
    "POWER_MODELS",
    "POWER_SCENARIOS",
    "POWER_N",
    "run_bias_mse",
    "run_power_size",
    "run_power_size_table",
]

BIAS_MSE_MODELS = (
    ("LMRQD (alpha=0.5, mu=5)", make_model("lmrqd", alpha=0.5, mu=5.0)),
    ("Weibull (k=2, lambda=1)", make_model("weibull", k=2.0, **{"lambda": 1.0})),
    ("Pareto I (alpha=2.5, sigma=1)", make_model("pareto", alpha=2.5, sigma=1.0)),
)
BIAS_MSE_U = (0.85, 0.90, 0.95)
BIAS_MSE_N = (25, 50, 100, 1000)

# scenario parameters are our choice
POWER_MODELS = {
    "Gamma": make_model("gamma", k=2.0, theta=1.0),
    "LMRQD": make_model("lmrqd", alpha=0.5, mu=5.0),
    "Lognormal": make_model("lognormal", meanlog=0.0, sdlog=0.5),
}
POWER_SCENARIOS = (
    ("Gamma", "LMRQD"),
    ("Gamma", "Lognormal"),
    ("LMRQD", "Lognormal"),
    ("Gamma", "Gamma"),
    ("LMRQD", "LMRQD"),
    ("Lognormal", "Lognormal"),
)
POWER_N = (50, 100, 300, 500)


@dataclass(frozen=True)
class BiasMseRow:
    family: str
    u: float
    n: int
    true_value: float
    bias: float
    mse: float


@dataclass(frozen=True)
class PowerSizeRow:
    scenario: str
    n: int
    rejection_rate: float
    n_trials: int
    B: int
    failures: int = 0


@dataclass
class SimReport:
    kind: str
    rows: list
    skipped: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.kind == "bias_mse":
            w.writerow(["Distribution", "u", "n", "True", "Bias", "MSE"])
            for r in self.rows:
                w.writerow([r.family, r.u, r.n, repr(r.true_value), repr(r.bias), repr(r.mse)])
        else:
            w.writerow(["Scenario", "n", "rate", "n_trials", "B", "failures"])
            for r in self.rows:
                w.writerow([r.scenario, r.n, repr(r.rejection_rate), r.n_trials, r.B, r.failures])
        return buf.getvalue()

    def to_records(self):
        return [dict(r.__dict__) for r in self.rows]


def _labelled(models):
    out = []
    for m in models:
        if isinstance(m, tuple):
            out.append(m)
        else:
            out.append((m.describe(), m))
    return out


def run_bias_mse(models=BIAS_MSE_MODELS, u_list=BIAS_MSE_U, n_list=BIAS_MSE_N, reps=1000, seed=0):
    """Bias and MSE of the empirical estimator against the closed form.

    ``models`` holds QuantileModels or ``(label, model)`` pairs. Cells with
    ceil(n u) >= n are skipped and listed in ``report.skipped``.
    """
    if int(reps) != reps or reps < 1:
        raise DomainError(f"reps must be a positive integer, got {reps}")
    if reps < 100:
        warnings.warn(f"reps = {reps} < 100: bias and MSE are rough", UserWarning, stacklevel=2)
    rows, skipped = [], []
    for fi, (label, model) in enumerate(_labelled(models)):
        for ui, u in enumerate(u_list):
            truth = model.closed_form_qepf(u)
            if truth is None:
                from .persistence import qepf
                truth = qepf(model, u)
            for ni, n in enumerate(n_list):
                k = rank_of(int(n), float(u))
                if k >= n:
                    skipped.append(f"{label}: u={u}, n={n} leaves no observations above the threshold")
                    continue
                ss = np.random.SeedSequence(int(seed), spawn_key=(fi, ui, ni))
                rng = np.random.default_rng(ss)
                draws = np.sort(model.sample_matrix(rng, (int(reps), int(n))), axis=1)
                est = qepf_at_ranks(draws, np.array([k]))[:, 0]
                err = est - truth
                # bias^2 <= mse holds exactly only up to rounding; clamp the decomposition
                bias = float(np.mean(err))
                mse = max(float(np.mean(err * err)), bias * bias)
                rows.append(BiasMseRow(label, float(u), int(n), float(truth), bias, mse))
    meta = {"u_list": list(u_list), "n_list": list(n_list), "reps": int(reps), "seed": int(seed),
            "models": [lab for lab, _ in _labelled(models)]}
    return SimReport("bias_mse", rows, skipped, meta)


def run_power_size(ref_model, bio_model, n_list=POWER_N, mc_trials=500, test_config=None,
                   label=None, scenario_index=0):
    """Rejection rate of :func:`run_test` for each per-arm sample size."""
    cfg = test_config or TestConfig(B=500)
    if int(mc_trials) != mc_trials or mc_trials < 100:
        raise DomainError(f"mc_trials must be an integer >= 100, got {mc_trials}")
    label = label or f"{ref_model.describe()} vs {bio_model.describe()}"
    rows, skipped = [], []
    for ni, n in enumerate(n_list):
        rejections = failures = 0
        for trial in range(int(mc_trials)):
            ss = np.random.SeedSequence(int(cfg.seed), spawn_key=(scenario_index, ni, trial))
            s_ref, s_bio, s_boot = ss.spawn(3)
            x = ref_model.sample_matrix(np.random.default_rng(s_ref), int(n))
            y = bio_model.sample_matrix(np.random.default_rng(s_bio), int(n))
            boot_seed = int(np.random.default_rng(s_boot).integers(0, 2 ** 63 - 1))
            try:
                res = run_test(x, y, replace(cfg, seed=boot_seed))
            except DomainError as exc:
                failures += 1
                if failures == 1:
                    skipped.append(f"{label}, n={n}: {exc}")
                continue
            rejections += res.reject_equality
        done = int(mc_trials) - failures
        rate = rejections / done if done else float("nan")
        rows.append(PowerSizeRow(label, int(n), float(rate), int(mc_trials), int(cfg.B), failures))
    meta = {"n_list": list(n_list), "mc_trials": int(mc_trials), **cfg.__dict__}
    return SimReport("power_size", rows, skipped, meta)


def run_power_size_table(scenarios=POWER_SCENARIOS, models=None, n_list=POWER_N,
                         mc_trials=500, test_config=None):
    """All scenarios of the power/size table in one report."""
    models = models or POWER_MODELS
    cfg = test_config or TestConfig(B=500)
    rows, skipped = [], []
    for si, (a, b) in enumerate(scenarios):
        rep = run_power_size(models[a], models[b], n_list, mc_trials, cfg,
                             label=f"{a} vs {b}", scenario_index=si)
        rows.extend(rep.rows)
        skipped.extend(rep.skipped)
    meta = {"n_list": list(n_list), "mc_trials": int(mc_trials), **cfg.__dict__,
            "models": {k: v.describe() for k, v in models.items()}}
    return SimReport("power_size", rows, skipped, meta)
