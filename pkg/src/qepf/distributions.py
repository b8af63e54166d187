"""Quantile-function models for the standard lifetime families.

A model is ``a * Q_family(u) + b`` with scale ``a > 0`` and shift ``b >= 0``.
Every family knows its quantile function, its density-quantile Q'(u) and,
for ``b = 0``, a closed-form persistence function.

Internally quantiles are evaluated from the pair ``(p, w)`` with
``w = 1 - p`` carried separately, so upper-tail integrals keep full
precision when ``p`` rounds to 1.
"""
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtri

from .empirical import SampleArm
from .errors import DomainError, InfiniteMeanError
from .kernels import gamma_quantile_array
from .specfun import beta_function, gamma_quantile, reg_inc_beta, reg_upper_inc_gamma, upper_inc_gamma

__all__ = ["Family", "QuantileModel", "parse_model_spec", "make_model"]


class Family(str, Enum):
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"
    LOGLOGISTIC = "loglogistic"
    POWER = "power"
    WEIBULL = "weibull"
    GAMMA = "gamma"
    PARETO = "pareto"
    LMRQD = "lmrqd"
    BETA_HALF_ONE = "betahalfone"
    LOGNORMAL = "lognormal"


# parameter names and defaults (None = required)
_PARAMS = {
    Family.UNIFORM: {},
    Family.EXPONENTIAL: {"lambda": 1.0},
    Family.LOGLOGISTIC: {"alpha": 1.0, "beta": None},
    Family.POWER: {"alpha": 1.0, "beta": None},
    Family.WEIBULL: {"k": None, "lambda": 1.0},
    Family.GAMMA: {"k": None, "theta": 1.0},
    Family.PARETO: {"alpha": None, "sigma": 1.0},
    Family.LMRQD: {"alpha": None, "mu": None},
    Family.BETA_HALF_ONE: {},
    Family.LOGNORMAL: {"meanlog": 0.0, "sdlog": None},
}

_ALIASES = {
    "uniform": Family.UNIFORM,
    "exponential": Family.EXPONENTIAL, "exp": Family.EXPONENTIAL,
    "loglogistic": Family.LOGLOGISTIC, "log-logistic": Family.LOGLOGISTIC,
    "power": Family.POWER,
    "weibull": Family.WEIBULL,
    "gamma": Family.GAMMA,
    "pareto": Family.PARETO, "paretoi": Family.PARETO, "pareto1": Family.PARETO,
    "lmrqd": Family.LMRQD,
    "betahalfone": Family.BETA_HALF_ONE, "beta-half-one": Family.BETA_HALF_ONE,
    "beta(0.5,1)": Family.BETA_HALF_ONE,
    "lognormal": Family.LOGNORMAL,
}

# parameters that must be strictly positive; meanlog is free
_FREE_PARAMS = {"meanlog"}

_GRID = np.linspace(0.01, 0.99, 99)


def _norm_sf(x):
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _std_normal_quantile(p, w):
    return np.where(p <= 0.5, ndtri(np.minimum(p, 0.5)), -ndtri(np.minimum(w, 0.5)))


@dataclass(frozen=True, eq=True)
class QuantileModel:
    """An immutable quantile-function model ``scale * Q_family(u) + shift``."""

    family: Family
    params: dict = field(default_factory=dict)
    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        spec = _PARAMS[fam]
        given = dict(self.params)
        unknown = set(given) - set(spec)
        if unknown:
            raise DomainError(
                f"{fam.value}: unknown parameter(s) {sorted(unknown)}; expected {sorted(spec)}")
        full = {}
        for name, default in spec.items():
            val = given.get(name, default)
            if val is None:
                raise DomainError(f"{fam.value}: parameter '{name}' is required")
            val = float(val)
            if not math.isfinite(val) or (name not in _FREE_PARAMS and val <= 0):
                raise DomainError(f"{fam.value}: parameter '{name}' must be a positive real, got {val}")
            full[name] = val
        object.__setattr__(self, "params", full)
        shift, scale = float(self.shift), float(self.scale)
        if not math.isfinite(shift) or shift < 0:
            raise DomainError(f"shift must be a nonnegative real, got {shift}")
        if not math.isfinite(scale) or scale <= 0:
            raise DomainError(f"scale must be a positive real, got {scale}")
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "scale", scale)

        q = self._q_base(_GRID, 1.0 - _GRID)
        if not np.all(np.isfinite(q)) or np.any(np.diff(q) <= 0):
            raise DomainError(
                f"{self.describe()}: quantile function is not strictly increasing on (0, 1); "
                "parameters are not admissible")

    # -- construction helpers ------------------------------------------------

    def with_shift(self, b):
        return QuantileModel(self.family, self.params, b, self.scale)

    def with_scale(self, a):
        return QuantileModel(self.family, self.params, self.shift, a)

    def describe(self):
        parts = [self.family.value] + [f"{k}={v:g}" for k, v in self.params.items()]
        if self.shift:
            parts.append(f"shift={self.shift:g}")
        if self.scale != 1.0:
            parts.append(f"scale={self.scale:g}")
        return " ".join(parts)

    # -- base family (a = 1, b = 0) -------------------------------------------

    def _q_base(self, p, w):
        f, P = self.family, self.params
        p = np.asarray(p, dtype=np.float64)
        w = np.asarray(w, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if f is Family.UNIFORM:
                return p.copy()
            if f is Family.EXPONENTIAL:
                return -np.log(w) / P["lambda"]
            if f is Family.LOGLOGISTIC:
                return P["alpha"] * (p / w) ** (1.0 / P["beta"])
            if f is Family.POWER:
                return P["alpha"] * p ** (1.0 / P["beta"])
            if f is Family.WEIBULL:
                return (-np.log(w)) ** (1.0 / P["k"]) / P["lambda"]
            if f is Family.GAMMA:
                t = gamma_quantile_array(p, w, P["k"])
                return P["theta"] * t.reshape(p.shape)
            if f is Family.PARETO:
                return P["sigma"] * w ** (-1.0 / P["alpha"])
            if f is Family.LMRQD:
                return -(P["alpha"] + P["mu"]) * np.log(w) - 2.0 * P["alpha"] * p
            if f is Family.BETA_HALF_ONE:
                return p * p
            if f is Family.LOGNORMAL:
                return np.exp(P["meanlog"] + P["sdlog"] * _std_normal_quantile(p, w))
        raise AssertionError(f)

    def _dq_base(self, p, w):
        f, P = self.family, self.params
        p = np.asarray(p, dtype=np.float64)
        w = np.asarray(w, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if f is Family.UNIFORM:
                return np.ones_like(p)
            if f is Family.EXPONENTIAL:
                return 1.0 / (P["lambda"] * w)
            if f is Family.LOGLOGISTIC:
                return self._q_base(p, w) / (P["beta"] * p * w)
            if f is Family.POWER:
                return self._q_base(p, w) / (P["beta"] * p)
            if f is Family.WEIBULL:
                k = P["k"]
                t = -np.log(w)
                return t ** (1.0 / k - 1.0) / (k * P["lambda"] * w)
            if f is Family.GAMMA:
                k, theta = P["k"], P["theta"]
                t = self._q_base(p, w) / theta
                dens = np.exp((k - 1.0) * np.log(t) - t - math.lgamma(k))
                return theta / dens
            if f is Family.PARETO:
                return self._q_base(p, w) / (P["alpha"] * w)
            if f is Family.LMRQD:
                return (P["alpha"] + P["mu"]) / w - 2.0 * P["alpha"]
            if f is Family.BETA_HALF_ONE:
                return 2.0 * p
            if f is Family.LOGNORMAL:
                z = _std_normal_quantile(p, w)
                phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
                return self._q_base(p, w) * P["sdlog"] / phi
        raise AssertionError(f)

    # -- public evaluation -----------------------------------------------------

    @property
    def finite_mean(self):
        if self.family is Family.PARETO:
            return self.params["alpha"] > 1.0
        if self.family is Family.LOGLOGISTIC:
            return self.params["beta"] > 1.0
        return True

    def require_finite_mean(self):
        if not self.finite_mean:
            if self.family is Family.PARETO:
                raise InfiniteMeanError(
                    f"Pareto I with alpha={self.params['alpha']:g} <= 1 has infinite mean; "
                    "the tail integral diverges")
            raise InfiniteMeanError(
                f"log-logistic with beta={self.params['beta']:g} <= 1 has infinite mean; "
                "the tail integral diverges")

    def quantile_pw(self, p, w):
        """Q at probability p given w = 1 - p separately (no range checks)."""
        return self.scale * self._q_base(p, w) + self.shift

    def density_quantile_pw(self, p, w):
        return self.scale * self._dq_base(p, w)

    def quantile(self, u):
        u_arr = _check_open_unit(u)
        out = self.quantile_pw(u_arr, 1.0 - u_arr)
        return float(out) if np.ndim(u) == 0 else out

    def density_quantile(self, u):
        u_arr = _check_open_unit(u)
        out = self.density_quantile_pw(u_arr, 1.0 - u_arr)
        return float(out) if np.ndim(u) == 0 else out

    def closed_form_qepf(self, u):
        """Closed-form persistence P(u), or ``None`` for shifted models.

        Scale does not enter: P is scale invariant.
        """
        u = float(_check_open_unit(u))
        self.require_finite_mean()
        if self.shift != 0.0:
            return None
        return _closed_form(self.family, self.params, u)

    # -- sampling --------------------------------------------------------------

    def sample_matrix(self, rng, size):
        """Inverse-transform draws of shape ``size`` from a numpy Generator.

        Uniforms are ``(j + 0.5) / 2**53`` so they never touch 0 or 1, and
        their complements are formed exactly from the integer.
        """
        j = rng.integers(0, 2 ** 53, size=size, dtype=np.int64)
        scale = 2.0 ** -53
        p = (j + 0.5) * scale
        w = ((2 ** 53 - 1 - j) + 0.5) * scale
        return self.quantile_pw(p.ravel(), w.ravel()).reshape(size)

    def sample(self, n, rng_seed, label=""):
        """n i.i.d. draws, sorted ascending; deterministic in ``rng_seed``."""
        if int(n) != n or n < 1:
            raise DomainError(f"n must be a positive integer, got {n}")
        rng = np.random.default_rng(np.random.SeedSequence(int(rng_seed)))
        return SampleArm(self.sample_matrix(rng, int(n)), label or self.describe())


def _check_open_unit(u):
    arr = np.asarray(u, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"u must lie in the open interval (0, 1), got {u}")
    return arr


def _closed_form(f, P, u):
    w = 1.0 - u
    if f is Family.UNIFORM:
        return (1.0 + u) / (2.0 * u)
    if f is Family.EXPONENTIAL:
        return 1.0 - 1.0 / math.log1p(-u)
    if f is Family.LOGLOGISTIC:
        beta = P["beta"]
        a, b = 1.0 + 1.0 / beta, 1.0 - 1.0 / beta
        # 1 - I_u(a, b) = I_{1-u}(b, a) avoids cancellation near u = 1
        upper = reg_inc_beta(w, b, a)
        return u ** (-1.0 / beta) * w ** (1.0 / beta - 1.0) * beta_function(a, b) * upper
    if f is Family.POWER:
        beta = P["beta"]
        num = -math.expm1((1.0 + 1.0 / beta) * math.log(u))
        return beta * num / (w * u ** (1.0 / beta) * (beta + 1.0))
    if f is Family.WEIBULL:
        k = P["k"]
        t = -math.log1p(-u)
        return math.exp(t) * upper_inc_gamma(1.0 + 1.0 / k, t) / t ** (1.0 / k)
    if f is Family.GAMMA:
        # Gamma(k+1, t) / Gamma(k) = k * Q(k+1, t); unit scale
        k = P["k"]
        t = gamma_quantile(u, k, upper_tail=w)
        return k * reg_upper_inc_gamma(k + 1.0, t) / (w * t)
    if f is Family.PARETO:
        alpha = P["alpha"]
        return alpha / (alpha - 1.0)
    if f is Family.LMRQD:
        alpha, mu = P["alpha"], P["mu"]
        q = -(alpha + mu) * math.log1p(-u) - 2.0 * alpha * u
        if q <= 0:
            raise DomainError(f"LMRQD quantile is not positive at u={u}")
        return 1.0 + (mu + alpha * u) / q
    if f is Family.BETA_HALF_ONE:
        return (1.0 + u + u * u) / (3.0 * u * u)
    if f is Family.LOGNORMAL:
        s = P["sdlog"]
        z = float(_std_normal_quantile(np.float64(u), np.float64(w)))
        return math.exp(0.5 * s * s - s * z) * _norm_sf(z - s) / w
    raise AssertionError(f)


def make_model(family, shift=0.0, scale=1.0, **params):
    key = str(family).strip().lower()
    if key not in _ALIASES:
        raise DomainError(f"unknown family '{family}'; choose from {sorted(set(_ALIASES))}")
    return QuantileModel(_ALIASES[key], params, shift, scale)


def parse_model_spec(text):
    """Parse ``"weibull k=2 lambda=1 shift=0.5"`` into a :class:`QuantileModel`.

    Errors name the offending token.
    """
    tokens = text.split()
    if not tokens:
        raise DomainError("empty model specification")
    fam = tokens[0].lower()
    if fam not in _ALIASES:
        raise DomainError(f"unknown family '{tokens[0]}'; choose from {sorted(set(_ALIASES))}")
    kwargs = {}
    for tok in tokens[1:]:
        key, sep, val = tok.partition("=")
        if not sep or not key:
            raise DomainError(f"malformed token '{tok}': expected key=value")
        try:
            kwargs[key.lower()] = float(val)
        except ValueError:
            raise DomainError(f"malformed token '{tok}': '{val}' is not a number") from None
    shift = kwargs.pop("shift", 0.0)
    scale = kwargs.pop("scale", 1.0)
    return QuantileModel(_ALIASES[fam], kwargs, shift, scale)
