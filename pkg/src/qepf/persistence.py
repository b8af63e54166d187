"""Model-based persistence function and its companion functionals.

For a quantile model Q:

    V(u) = (1/(1-u)) * integral_u^1 Q(p) dp          vitality
    P(u) = V(u) / Q(u)                                persistence
    M(u) = V(u) - Q(u)                                mean residual quantile
    H(u) = 1 / ((1-u) Q'(u))                          hazard quantile
    L(u) = (1/mu) * integral_0^u Q(p) dp              Lorenz curve
    T(u) = integral_0^u (1-p) Q'(p) dp                total time on test

plus the Lorenz and TTT routes to P(u) and a Monte Carlo check that P(u) is
the mean of the normalized excess X / Q(u) given X > Q(u).
"""
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.special import log_ndtr, ndtri

from .distributions import Family
from .empirical import PersistenceCurve
from .errors import ConvergenceError, DomainError

__all__ = [
    "Quadrature",
    "DEFAULT_QUAD",
    "vitality",
    "qepf",
    "qepf_quadrature",
    "mrq",
    "hazard_quantile",
    "mean",
    "lorenz",
    "ttt",
    "qepf_via_lorenz",
    "qepf_via_ttt",
    "lmoment_tail_check",
    "model_curve",
]

_BOUNDED = {Family.UNIFORM, Family.POWER, Family.BETA_HALF_ONE}
# truncation of the exponential-substitution range for the fixed rule
_S_MAX = 50.0


@dataclass(frozen=True)
class Quadrature:
    """Integration settings: adaptive (default) or fixed Gauss-Legendre."""

    rule: str = "adaptive"
    points: int = 64
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.rule not in ("adaptive", "fixed_gauss_legendre"):
            raise DomainError(f"unknown quadrature rule '{self.rule}'")
        if int(self.points) != self.points or self.points < 8:
            raise DomainError(f"points must be an integer >= 8, got {self.points}")
        if not (0.0 < self.rel_tol <= 1e-6):
            raise DomainError(f"rel_tol must lie in (0, 1e-6], got {self.rel_tol}")


DEFAULT_QUAD = Quadrature()


def _integrate(f, a, b, quad):
    """Integral of scalar f over [a, b] (b may be inf)."""
    if quad.rule == "fixed_gauss_legendre":
        if math.isinf(b):
            b = _S_MAX
        x, wts = leggauss(int(quad.points))
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        return half * float(np.dot(wts, [f(mid + half * xi) for xi in x]))
    pieces = [(a, b)]
    if math.isinf(b) and a < 1.0:
        # keep endpoint singularities at s = 0 out of the infinite-range transform
        pieces = [(a, 1.0), (1.0, b)]
    total = 0.0
    for lo, hi in pieces:
        val, err, *rest = integrate.quad(
            f, lo, hi, epsabs=0.0, epsrel=quad.rel_tol, limit=500, full_output=1)
        if len(rest) > 1 and err > 1e3 * quad.rel_tol * max(abs(val), 1e-300):
            raise ConvergenceError(f"quadrature did not converge on [{lo}, {hi}]: {rest[1]}")
        total += val
    return total


def _check_u(u, closed=False):
    u = float(u)
    ok = (0.0 <= u <= 1.0) if closed else (0.0 < u < 1.0)
    if not ok or not math.isfinite(u):
        span = "[0, 1]" if closed else "(0, 1)"
        raise DomainError(f"u must lie in {span}, got {u}")
    return u


def _q_scalar(model, p, w):
    return float(model.quantile_pw(np.float64(p), np.float64(w)))


def _dq_scalar(model, p, w):
    return float(model.density_quantile_pw(np.float64(p), np.float64(w)))


def _tail_mean(model, u, quad, offset=0.0):
    """(1/(1-u)) * integral_u^1 (Q(p) - offset) dp for u in [0, 1)."""
    w_u = 1.0 - u
    if model.family in _BOUNDED:
        f = lambda p: _q_scalar(model, p, 1.0 - p) - offset
        return _integrate(f, u, 1.0, quad) / w_u

    # p = 1 - (1-u) e^{-s}: the tail integral becomes integral_0^inf Q e^{-s} ds
    def f(s):
        e = math.exp(-s)
        if w_u * e == 0.0:
            return 0.0
        p = u - w_u * math.expm1(-s)
        return (_q_scalar(model, p, w_u * e) - offset) * e

    return _integrate(f, 0.0, math.inf, quad)


def vitality(model, u, quad=DEFAULT_QUAD):
    """V(u), the mean of Q over the top (1 - u) fraction, by quadrature."""
    u = _check_u(u)
    model.require_finite_mean()
    return _tail_mean(model, u, quad)


def _positive_quantile(model, u):
    q = model.quantile(u)
    if not q > 0.0:
        raise DomainError(f"Q({u}) = {q} is not positive; persistence is undefined")
    return q


def qepf_quadrature(model, u, quad=DEFAULT_QUAD):
    """P(u) = V(u) / Q(u) by quadrature, ignoring any closed form."""
    u = _check_u(u)
    model.require_finite_mean()
    q = _positive_quantile(model, u)
    return _tail_mean(model, u, quad) / q


def qepf(model, u, quad=DEFAULT_QUAD):
    """Persistence P(u); closed form when the family has one, else quadrature."""
    u = _check_u(u)
    model.require_finite_mean()
    closed = model.closed_form_qepf(u)
    if closed is not None:
        return closed
    return qepf_quadrature(model, u, quad)


def mrq(model, u, quad=DEFAULT_QUAD):
    """Mean residual quantile M(u) = V(u) - Q(u)."""
    u = _check_u(u)
    model.require_finite_mean()
    # integrate Q(p) - Q(u) directly so the shift cancels inside the integrand
    return _tail_mean(model, u, quad, offset=model.quantile(u))


def hazard_quantile(model, u):
    u = _check_u(u)
    return 1.0 / ((1.0 - u) * model.density_quantile(u))


def mean(model, quad=DEFAULT_QUAD):
    """mu = integral_0^1 Q(p) dp."""
    model.require_finite_mean()
    return _tail_mean(model, 0.0, quad)


def _head_integral(model, u, quad):
    f = lambda p: _q_scalar(model, p, 1.0 - p)
    return _integrate(f, 0.0, u, quad)


def lorenz(model, u, quad=DEFAULT_QUAD):
    """Lorenz curve L(u); nonnegative support required."""
    u = _check_u(u, closed=True)
    model.require_finite_mean()
    if model.quantile(1e-9) < 0:
        raise DomainError("the Lorenz curve needs a nonnegative support")
    if u == 0.0:
        return 0.0
    if u == 1.0:
        return 1.0
    return _head_integral(model, u, quad) / mean(model, quad)


def ttt(model, u, quad=DEFAULT_QUAD):
    """Total time on test T(u) = integral_0^u (1-p) Q'(p) dp."""
    u = _check_u(u, closed=True)
    if u == 0.0:
        return 0.0
    if u == 1.0:
        model.require_finite_mean()
    if model.family in _BOUNDED:
        f = lambda p: (1.0 - p) * _dq_scalar(model, p, 1.0 - p)
        return _integrate(f, 0.0, u, quad)
    if model.family is Family.LOGNORMAL:
        return _ttt_lognormal(model, u, quad)

    # p = 1 - e^{-s}, dp = e^{-s} ds, 1 - p = e^{-s}
    def f(s):
        e = math.exp(-s)
        if e == 0.0:
            return 0.0
        return e * e * _dq_scalar(model, -math.expm1(-s), e)

    s_u = math.inf if u == 1.0 else -math.log1p(-u)
    return _integrate(f, 0.0, s_u, quad)


def _ttt_lognormal(model, u, quad):
    # Q' explodes at p = 0; in z = Phi^{-1}(p) the integrand (1 - Phi(z)) dQ/dz is smooth
    m, sd = model.params["meanlog"], model.params["sdlog"]
    a = model.scale

    def f(z):
        return a * sd * math.exp(m + sd * z + float(log_ndtr(-z)))

    z_u = math.inf if u == 1.0 else float(ndtri(u))
    if math.isinf(z_u):
        return _integrate(f, -math.inf, 0.0, quad) + _integrate(f, 0.0, math.inf, quad)
    return _integrate(f, -math.inf, z_u, quad)


def qepf_via_lorenz(model, u, quad=DEFAULT_QUAD):
    """P(u) = mu (1 - L(u)) / ((1 - u) Q(u))."""
    u = _check_u(u)
    q = _positive_quantile(model, u)
    mu = mean(model, quad)
    return mu * (1.0 - lorenz(model, u, quad)) / ((1.0 - u) * q)


def qepf_via_ttt(model, u, quad=DEFAULT_QUAD):
    """P(u) = 1 + (T(1) - T(u)) / ((1 - u) Q(u))."""
    u = _check_u(u)
    q = _positive_quantile(model, u)
    return 1.0 + (ttt(model, 1.0, quad) - ttt(model, u, quad)) / ((1.0 - u) * q)


def lmoment_tail_check(model, u, n_mc=200_000, seed=0, quad=DEFAULT_QUAD):
    """Monte Carlo mean of X / Q(u) given X > Q(u), against P(u).

    Returns ``(mc_mean, mc_se, analytic)``.
    """
    u = _check_u(u)
    if int(n_mc) != n_mc or n_mc < 1000:
        raise DomainError(f"n_mc must be an integer >= 1000, got {n_mc}")
    t = _positive_quantile(model, u)
    x = model.sample(int(n_mc), seed).values
    y = x[x > t] / t
    if y.size < 30:
        raise DomainError(f"only {y.size} draws exceed Q(u); need at least 30")
    return float(y.mean()), float(y.std(ddof=1) / math.sqrt(y.size)), qepf(model, u, quad)


_FUNCTIONALS = {
    "qepf": qepf,
    "vitality": vitality,
    "mrq": mrq,
    "hazard": lambda m, u, quad=DEFAULT_QUAD: hazard_quantile(m, u),
    "lorenz": lorenz,
    "ttt": ttt,
}


def model_curve(model, u_grid, functional="qepf", quad=DEFAULT_QUAD):
    """Evaluate one functional of ``model`` over ``u_grid``."""
    try:
        fn = _FUNCTIONALS[functional]
    except KeyError:
        raise DomainError(f"unknown functional '{functional}'; choose from {sorted(_FUNCTIONALS)}") from None
    u_grid = np.asarray(u_grid, dtype=np.float64).ravel()
    vals = np.array([fn(model, float(u), quad=quad) for u in u_grid])
    return PersistenceCurve(u_grid, vals, functional, check_persistence=(functional == "qepf"))
