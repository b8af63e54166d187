"""Non-parametric estimation of Q, V and the persistence function from data.

With order statistics X_(1) <= ... <= X_(n) and k = ceil(n u):

    Q_n(u) = X_(k),   V_n(u) = mean(X_(k+1), ..., X_(n)),   P_n(u) = V_n(u) / Q_n(u).
"""
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, TailEmptyError
from .kernels import qepf_at_ranks

__all__ = [
    "SampleArm",
    "PersistenceCurve",
    "rank_of",
    "empirical_quantile",
    "empirical_vitality",
    "empirical_qepf",
    "empirical_curve",
    "bootstrap_pointwise_ci",
    "read_values_csv",
]

# n*u within this distance of an integer counts as that integer, so that
# grid points such as 0.07 with n = 100 land on k = 7 rather than 8
RANK_SNAP = 1e-9


@dataclass(frozen=True)
class SampleArm:
    """Sorted, strictly positive observations for one study arm."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size == 0:
            raise DomainError("a sample arm needs at least one observation")
        if not np.all(np.isfinite(v)):
            raise DomainError("sample values must be finite")
        if np.any(v <= 0):
            bad = float(v[v <= 0][0])
            raise DomainError(
                f"sample values must be > 0 (found {bad}); shift the data by a "
                "constant first if the outcome can be zero or negative")
        if v.size == 1:
            # a single observation is padded to {x, x}
            v = np.repeat(v, 2)
        v = np.sort(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.size

    def scaled(self, c):
        return SampleArm(self.values * c, self.label)


@dataclass(frozen=True)
class PersistenceCurve:
    """A quantile-scale functional sampled on an ascending grid in (0, 1)."""

    u_grid: np.ndarray
    values: np.ndarray
    label: str = ""
    check_persistence: bool = field(default=False, repr=False)

    def __post_init__(self):
        u = np.asarray(self.u_grid, dtype=np.float64).ravel()
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if u.shape != v.shape:
            raise DomainError(f"grid and values differ in length ({u.size} vs {v.size})")
        if u.size and (np.any(u <= 0) or np.any(u >= 1)):
            raise DomainError("curve grid must lie inside (0, 1)")
        if np.any(np.diff(u) <= 0):
            raise DomainError("curve grid must be strictly ascending")
        if self.check_persistence and np.any(v <= 1):
            raise DomainError("persistence values must exceed 1")
        object.__setattr__(self, "u_grid", u)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.u_grid.size

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u", "value", "label"])
        for u, v in zip(self.u_grid, self.values):
            w.writerow([repr(float(u)), repr(float(v)), self.label])
        return buf.getvalue()


def rank_of(n, u):
    """k = ceil(n u), with products within RANK_SNAP of an integer snapped."""
    x = n * u
    r = round(x)
    if abs(x - r) <= RANK_SNAP:
        return int(r)
    return int(math.ceil(x))


def _ranks(n, u_grid):
    return np.array([rank_of(n, float(u)) for u in u_grid], dtype=np.int64)


def _as_arm(arm):
    return arm if isinstance(arm, SampleArm) else SampleArm(arm)


def _tail_rank(arm, u):
    u = float(u)
    if not (0.0 < u < 1.0):
        raise DomainError(f"u must lie in (0, 1), got {u}")
    k = rank_of(arm.n, u)
    if k >= arm.n:
        raise TailEmptyError(
            f"ceil(n*u) = {k} >= n = {arm.n}: no observations above the threshold at "
            f"u={u}; use a trimmed upper interval")
    return k


def empirical_quantile(arm, u):
    """Q_n(u) = X_(k), k = ceil(n u), for u in (0, 1]."""
    arm = _as_arm(arm)
    u = float(u)
    if not (0.0 < u <= 1.0):
        raise DomainError(f"u must lie in (0, 1], got {u}")
    k = max(rank_of(arm.n, u), 1)
    return float(arm.values[k - 1])


def empirical_vitality(arm, u):
    """Mean of the top n - k order statistics."""
    arm = _as_arm(arm)
    k = _tail_rank(arm, u)
    return math.fsum(arm.values[k:].tolist()) / (arm.n - k)


def empirical_qepf(arm, u):
    """Empirical persistence P_n(u) = V_n(u) / X_(k); always >= 1."""
    arm = _as_arm(arm)
    k = _tail_rank(arm, u)
    vit = math.fsum(arm.values[k:].tolist()) / (arm.n - k)
    return vit / float(arm.values[k - 1])


def empirical_curve(arm, u_grid, label="empirical"):
    """Pointwise empirical persistence over a grid; infeasible points are
    rejected before anything is computed."""
    arm = _as_arm(arm)
    u_grid = np.asarray(u_grid, dtype=np.float64).ravel()
    bad = [float(u) for u in u_grid if not (0 < u < 1) or rank_of(arm.n, float(u)) >= arm.n]
    if bad:
        raise TailEmptyError(
            f"grid points {bad} leave no observations above the threshold for n = {arm.n}")
    vals = [empirical_qepf(arm, u) for u in u_grid]
    return PersistenceCurve(u_grid, np.array(vals), label)


def bootstrap_pointwise_ci(arm, u, B=1000, level=0.95, seed=0):
    """Percentile bootstrap interval for P_n(u).

    Resamples of size n keep k fixed, so every resample is feasible; an
    all-equal upper tail simply gives 1.
    """
    arm = _as_arm(arm)
    if int(B) != B or B < 200:
        raise DomainError(f"B must be an integer >= 200, got {B}")
    if not (0.0 < level < 1.0):
        raise DomainError(f"level must lie in (0, 1), got {level}")
    k = _tail_rank(arm, u)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    idx = rng.integers(0, arm.n, size=(int(B), arm.n))
    rows = np.sort(arm.values[idx], axis=1)
    reps = qepf_at_ranks(rows, np.array([k]))[:, 0]
    lo, hi = np.quantile(reps, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


def read_values_csv(text, source="<input>"):
    """Parse a one-column value file or a two-column ``group,value`` file.

    Returns ``{group: ndarray}``; the one-column form yields a single group
    named ``"values"``. Two-column files need a header row. Non-numeric rows
    raise :class:`DomainError` naming their line numbers.
    """
    rows = [(i + 1, line.strip()) for i, line in enumerate(text.splitlines())]
    rows = [(i, line) for i, line in rows if line]
    if not rows:
        raise DomainError(f"{source}: no data")
    two_col = "," in rows[0][1]
    groups = {}
    errors = []
    if two_col:
        header = [h.strip().lower() for h in rows[0][1].split(",")]
        if header != ["group", "value"]:
            raise DomainError(f"{source}: line {rows[0][0]}: expected header 'group,value'")
        for lineno, line in rows[1:]:
            parts = [p.strip() for p in line.split(",")]
            try:
                if len(parts) != 2 or not parts[0]:
                    raise ValueError
                val = float(parts[1])
                if not math.isfinite(val):
                    raise ValueError
            except ValueError:
                errors.append(lineno)
                continue
            groups.setdefault(parts[0], []).append(val)
    else:
        vals = []
        for j, (lineno, line) in enumerate(rows):
            try:
                val = float(line)
                if not math.isfinite(val):
                    raise ValueError
            except ValueError:
                if j == 0:
                    continue  # optional header
                errors.append(lineno)
                continue
            vals.append(val)
        groups["values"] = vals
    if errors:
        shown = ", ".join(map(str, errors[:10])) + (f" and {len(errors) - 10} more" if len(errors) > 10 else "")
        raise DomainError(f"{source}: non-numeric rows at lines {shown}")
    return {g: np.array(v, dtype=np.float64) for g, v in groups.items()}
