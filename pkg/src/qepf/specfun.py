"""Special-function kernels: log-gamma, incomplete gamma, incomplete beta,
and the gamma inverse CDF.

The scalar kernels are plain-Python loops compiled with numba when
acceleration is enabled (see :mod:`qepf._accel`). Public wrappers validate
arguments and turn kernel status codes into exceptions.
"""
import math
from dataclasses import dataclass

from ._accel import njit
from .errors import ConvergenceError, DomainError

__all__ = [
    "Accuracy",
    "log_gamma",
    "upper_inc_gamma",
    "reg_lower_inc_gamma",
    "reg_upper_inc_gamma",
    "reg_inc_beta",
    "beta_function",
    "gamma_quantile",
]

EPS = 2.220446049250313e-16
TINY = 1e-300
# expansions iterate to double precision; this only guards against hangs
EXPANSION_CAP = 5000


@dataclass(frozen=True)
class Accuracy:
    """Tolerance settings for the iterative root finder."""

    rel_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-3):
            raise DomainError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 10:
            raise DomainError(f"max_iter must be an integer >= 10, got {self.max_iter}")


DEFAULT_ACCURACY = Accuracy()


# --------------------------------------------------------------------------
# scalar kernels
# --------------------------------------------------------------------------

@njit
def _lower_series(a, x):
    """Sum for gamma(a, x) = exp(-x) x^a * sum_n x^n / (a (a+1) ... (a+n)).

    Returns the sum, or nan on non-convergence.
    """
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(EXPANSION_CAP):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            return total
    return math.nan


@njit
def _upper_cf(a, x):
    """Modified Lentz evaluation of the continued fraction for Gamma(a, x).

    Returns cf with Gamma(a, x) = exp(-x) x^a * cf, or nan on failure.
    """
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, EXPANSION_CAP):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    return math.nan


@njit
def _reg_gamma_pq(a, x):
    """Regularized (P, Q) pair for the incomplete gamma function."""
    if x <= 0.0:
        return 0.0, 1.0
    log_pref = -x + a * math.log(x) - math.lgamma(a)
    if x <= a + 1.0:
        s = _lower_series(a, x)
        p = math.exp(log_pref) * s
        return p, 1.0 - p
    cf = _upper_cf(a, x)
    q = math.exp(log_pref) * cf
    return 1.0 - q, q


@njit
def _upper_gamma_unreg(a, x):
    if x == 0.0:
        return math.gamma(a)
    log_pref = -x + a * math.log(x)
    if x <= a + 1.0:
        return math.gamma(a) - math.exp(log_pref) * _lower_series(a, x)
    return math.exp(log_pref) * _upper_cf(a, x)


@njit
def _beta_cf(x, a, b):
    """Continued fraction for the incomplete beta ratio (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, EXPANSION_CAP):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    return math.nan


@njit
def _reg_beta(x, a, b):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(x, a, b) / a
    return 1.0 - front * _beta_cf(1.0 - x, b, a) / b


@njit
def _gamma_root_fn(t, k, u, w, upper):
    # increasing in t in both modes
    p, q = _reg_gamma_pq(k, t)
    if upper:
        return w - q
    return p - u


@njit
def _gamma_quantile(u, w, k, rel_tol, max_iter):
    """Bisection-safeguarded Newton for the unit-scale gamma quantile.

    ``u`` is the lower-tail probability and ``w = 1 - u`` the upper-tail one,
    passed separately so that tails near 1 keep full precision. Returns
    (t, iterations); t is nan when the cap was hit.
    """
    upper = u > 0.5
    lo = 0.0
    hi = k + 10.0 * math.sqrt(k) + 20.0
    for _ in range(200):
        if _gamma_root_fn(hi, k, u, w, upper) >= 0.0:
            break
        lo = hi
        hi *= 2.0
    lgk = math.lgamma(k)
    # leading term of the lower series gives a good start deep in the left tail
    if u < 0.05:
        x = math.exp((math.log(u) + math.lgamma(k + 1.0)) / k)
    else:
        x = k
    if not (lo < x < hi):
        x = 0.5 * (lo + hi)
    for it in range(1, max_iter + 1):
        g = _gamma_root_fn(x, k, u, w, upper)
        if g == 0.0:
            return x, it
        if g < 0.0:
            lo = x
        else:
            hi = x
        dens = math.exp((k - 1.0) * math.log(x) - x - lgk)
        x_new = math.nan
        if dens > 0.0:
            x_new = x - g / dens
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= rel_tol * x_new or hi - lo <= rel_tol * hi:
            return x_new, it
        x = x_new
    return math.nan, max_iter


# --------------------------------------------------------------------------
# public wrappers
# --------------------------------------------------------------------------

def _check_finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value}")
    return value


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    x = _check_finite("x", x)
    if x <= 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def upper_inc_gamma(a, x):
    """Unregularized upper incomplete gamma, the integral of t^(a-1) e^(-t) over [x, inf).

    Uses the series for x <= a + 1 and the continued fraction beyond.
    """
    a = _check_finite("a", a)
    x = _check_finite("x", x)
    if a <= 0.0:
        raise DomainError(f"upper_inc_gamma requires a > 0, got {a}")
    if x < 0.0:
        raise DomainError(f"upper_inc_gamma requires x >= 0, got {x}")
    val = _upper_gamma_unreg(a, x)
    if math.isnan(val):
        raise ConvergenceError(f"incomplete gamma expansion did not converge (a={a}, x={x})")
    return val


def _reg_gamma_checked(a, x):
    a = _check_finite("a", a)
    x = _check_finite("x", x)
    if a <= 0.0 or x < 0.0:
        raise DomainError(f"incomplete gamma requires a > 0 and x >= 0, got a={a}, x={x}")
    p, q = _reg_gamma_pq(a, x)
    if math.isnan(p):
        raise ConvergenceError(f"incomplete gamma expansion did not converge (a={a}, x={x})")
    return p, q


def reg_lower_inc_gamma(a, x):
    """Regularized lower incomplete gamma P(a, x)."""
    return _reg_gamma_checked(a, x)[0]


def reg_upper_inc_gamma(a, x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    return _reg_gamma_checked(a, x)[1]


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta ratio I_x(a, b)."""
    x = _check_finite("x", x)
    a = _check_finite("a", a)
    b = _check_finite("b", b)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"reg_inc_beta requires 0 <= x <= 1, got {x}")
    if a <= 0.0 or b <= 0.0:
        raise DomainError(f"reg_inc_beta requires a, b > 0, got a={a}, b={b}")
    val = _reg_beta(x, a, b)
    if math.isnan(val):
        raise ConvergenceError(f"incomplete beta fraction did not converge (x={x}, a={a}, b={b})")
    return val


def beta_function(a, b):
    a = _check_finite("a", a)
    b = _check_finite("b", b)
    if a <= 0.0 or b <= 0.0:
        raise DomainError(f"beta_function requires a, b > 0, got a={a}, b={b}")
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def gamma_quantile(u, k, accuracy=DEFAULT_ACCURACY, *, upper_tail=None):
    """Unit-scale gamma inverse CDF: t with P(k, t) = u.

    ``upper_tail`` may carry 1 - u computed without cancellation; when given
    it is used for u > 0.5.
    """
    u = _check_finite("u", u)
    k = _check_finite("k", k)
    if not (0.0 < u < 1.0):
        raise DomainError(f"gamma_quantile requires 0 < u < 1, got {u}")
    if k <= 0.0:
        raise DomainError(f"gamma_quantile requires k > 0, got {k}")
    w = 1.0 - u if upper_tail is None else float(upper_tail)
    t, _ = _gamma_quantile(u, w, k, accuracy.rel_tol, int(accuracy.max_iter))
    if math.isnan(t):
        raise ConvergenceError(
            f"gamma_quantile did not converge in {accuracy.max_iter} iterations (u={u}, k={k})")
    return t
