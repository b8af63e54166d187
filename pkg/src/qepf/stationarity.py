"""Stationary points of P(u) and the shift that places one at a chosen quantile.

At a stationary point u* the hazard quantile balances the mean residual
quantile and the threshold, H = 1/M + 1/Q, which is the same as P = H M.
Solving the balance for a location shift a gives

    a = 1 / (H(u*) - 1/M(u*)) - Q(u*)

since M and H do not change under a shift.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError
from .persistence import DEFAULT_QUAD, hazard_quantile, mrq, qepf

__all__ = ["StationaryReport", "qepf_derivative", "find_stationary_points", "solve_shift_for_stationarity"]

DERIV_STEP = 1e-5
DERIV_TOL = 1e-9


@dataclass(frozen=True)
class StationaryReport:
    u_star: float
    balance_residual: float
    p_at_ustar: float
    hazard: float
    mrq: float
    quantile: float

    @property
    def product_residual(self):
        """P(u*) - H(u*) M(u*)."""
        return self.p_at_ustar - self.hazard * self.mrq


def qepf_derivative(model, u, h=DERIV_STEP, quad=DEFAULT_QUAD):
    """Central difference of P at u."""
    return (qepf(model, u + h, quad) - qepf(model, u - h, quad)) / (2.0 * h)


def _report(model, u, quad):
    q = model.quantile(u)
    m = mrq(model, u, quad)
    hz = hazard_quantile(model, u)
    return StationaryReport(
        u_star=u,
        balance_residual=hz - 1.0 / m - 1.0 / q,
        p_at_ustar=qepf(model, u, quad),
        hazard=hz,
        mrq=m,
        quantile=q,
    )


def find_stationary_points(model, quad=DEFAULT_QUAD, grid_step=0.01, deriv_step=None):
    """Locate strict sign changes of P' on (grid_step, 1 - grid_step).

    The scan uses a central difference with step ``grid_step / 10``; each
    bracket is then bisected with the finer ``deriv_step`` (default 1e-5)
    until |P'| <= 1e-9 or the bracket collapses. A constant P (Pareto I)
    has no strict sign change and yields an empty list.
    """
    if not (1e-4 <= grid_step <= 0.05):
        raise DomainError(f"grid_step must lie in [1e-4, 0.05], got {grid_step}")
    h = grid_step / 10.0
    h_fine = DERIV_STEP if deriv_step is None else float(deriv_step)
    n = int(math.floor((1.0 - 2.0 * grid_step) / grid_step + 1e-9))
    grid = grid_step + grid_step * np.arange(n + 1)
    grid = grid[grid <= 1.0 - grid_step + 1e-12]
    d = np.array([qepf_derivative(model, float(u), h, quad) for u in grid])
    # derivative noise from quadrature sets the floor below which a sign is not trusted
    scale = max(1.0, float(np.max(np.abs(d))) if d.size else 1.0)
    noise = 1e-7 * scale
    signs = np.where(np.abs(d) <= noise, 0, np.sign(d))

    out = []
    last_sign, last_i = 0, None
    for i, s in enumerate(signs):
        if s == 0:
            continue
        if last_sign != 0 and s != last_sign:
            lo, hi = float(grid[last_i]), float(grid[i])
            out.append(_report(model, _bisect(model, lo, hi, h_fine, quad), quad))
        last_sign, last_i = s, i
    return out


def _bisect(model, lo, hi, h, quad):
    d_lo = qepf_derivative(model, lo, h, quad)
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        d_mid = qepf_derivative(model, mid, h, quad)
        if abs(d_mid) <= DERIV_TOL or hi - lo <= 1e-13:
            break
        if (d_mid > 0) == (d_lo > 0):
            lo, d_lo = mid, d_mid
        else:
            hi = mid
    return mid


def solve_shift_for_stationarity(model, u_star, quad=DEFAULT_QUAD):
    """Shift a > 0 that makes ``u_star`` a stationary point of ``model + a``.

    ``model`` is taken as given (including any existing shift); the returned
    value is the additional shift.
    """
    u = float(u_star)
    if not (0.0 < u < 1.0):
        raise DomainError(f"u_star must lie in (0, 1), got {u}")
    hz = hazard_quantile(model, u)
    m = mrq(model, u, quad)
    gap = hz - 1.0 / m
    if gap <= 0:
        raise InfeasibleError(f"H(u*) = {hz:g} <= 1/M(u*) = {1.0 / m:g}: no shift creates a stationary point")
    q = model.quantile(u)
    a = 1.0 / gap - q
    if a <= 0:
        raise InfeasibleError(f"balance requires a nonpositive shift ({a:g}) at u* = {u}")
    resid = hz - 1.0 / m - 1.0 / (q + a)
    if abs(resid) > 1e-10 * max(1.0, abs(hz)):
        raise InfeasibleError(f"balance residual {resid:g} exceeds tolerance")
    return a
