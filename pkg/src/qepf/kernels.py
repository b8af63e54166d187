"""Array kernels on the hot paths.

Every kernel exists twice: a loop version compiled by numba and a
vectorized numpy version. Which one the public name points to is decided
by :data:`qepf._accel.USE_NUMBA`. Both variants take the same inputs and
agree to rounding; the test-suite checks that.

Ranks ``ks`` are 1-based throughout, matching X_(k).
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit
from .specfun import EPS, EXPANSION_CAP, TINY, _gamma_quantile

__all__ = ["gamma_quantile_array", "qepf_at_ranks", "bootstrap_sup"]


# --------------------------------------------------------------------------
# gamma inverse CDF over an array
# --------------------------------------------------------------------------

@njit
def _gamma_quantile_loop(u, w, k, rel_tol, max_iter):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        out[i] = _gamma_quantile(u[i], w[i], k, rel_tol, max_iter)[0]
    return out


def _reg_gamma_vec(k, x):
    """Vectorized regularized (P, Q) for a scalar shape k and x > 0."""
    p = np.empty_like(x)
    q = np.empty_like(x)
    log_pref = -x + k * np.log(x) - math.lgamma(k)
    ser = x <= k + 1.0

    xs = x[ser]
    if xs.size:
        term = np.full_like(xs, 1.0 / k)
        total = term.copy()
        ap = k
        active = np.ones(xs.shape, dtype=bool)
        for _ in range(EXPANSION_CAP):
            ap += 1.0
            term = np.where(active, term * xs / ap, 0.0)
            total += term
            active &= np.abs(term) >= np.abs(total) * EPS
            if not active.any():
                break
        else:
            total[active] = np.nan
        ps = np.exp(log_pref[ser]) * total
        p[ser] = ps
        q[ser] = 1.0 - ps

    cfm = ~ser
    xc = x[cfm]
    if xc.size:
        b = xc + 1.0 - k
        c = np.full_like(xc, 1.0 / TINY)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(xc.shape, dtype=bool)
        for i in range(1, EXPANSION_CAP):
            an = -i * (i - k)
            b = b + 2.0
            d = an * d + b
            d = np.where(np.abs(d) < TINY, TINY, d)
            c = b + an / c
            c = np.where(np.abs(c) < TINY, TINY, c)
            d = 1.0 / d
            delta = np.where(active, d * c, 1.0)
            h *= delta
            active &= np.abs(delta - 1.0) >= EPS
            if not active.any():
                break
        else:
            h[active] = np.nan
        qc = np.exp(log_pref[cfm]) * h
        q[cfm] = qc
        p[cfm] = 1.0 - qc
    return p, q


def _gamma_quantile_vec(u, w, k, rel_tol, max_iter):
    upper = u > 0.5
    lo = np.zeros_like(u)
    hi = np.full_like(u, k + 10.0 * math.sqrt(k) + 20.0)

    def g(t):
        p, q = _reg_gamma_vec(k, np.maximum(t, TINY))
        return np.where(upper, w - q, p - u)

    for _ in range(200):
        short = g(hi) < 0.0
        if not short.any():
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, 2.0 * hi, hi)

    lgk = math.lgamma(k)
    with np.errstate(divide="ignore"):
        x = np.where(u < 0.05, np.exp((np.log(u) + math.lgamma(k + 1.0)) / k), k)
    bad = ~((lo < x) & (x < hi))
    x = np.where(bad, 0.5 * (lo + hi), x)
    out = np.full_like(u, np.nan)
    todo = np.ones(u.shape, dtype=bool)
    for _ in range(max_iter):
        gx = g(x)
        hit = todo & (gx == 0.0)
        out[hit] = x[hit]
        todo &= ~hit
        lo = np.where(todo & (gx < 0.0), x, lo)
        hi = np.where(todo & (gx > 0.0), x, hi)
        dens = np.exp((k - 1.0) * np.log(x) - x - lgk)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_new = np.where(dens > 0.0, x - gx / dens, np.nan)
        inside = (lo < x_new) & (x_new < hi)
        x_new = np.where(inside, x_new, 0.5 * (lo + hi))
        done = todo & ((np.abs(x_new - x) <= rel_tol * x_new) | (hi - lo <= rel_tol * hi))
        out[done] = x_new[done]
        todo &= ~done
        if not todo.any():
            break
        x = np.where(todo, x_new, x)
    return out


def gamma_quantile_array(u, w, k, rel_tol=1e-12, max_iter=200):
    """Unit-scale gamma quantiles for arrays of lower (u) and upper (w) tail
    probabilities. Entries that fail to converge come back as nan."""
    u = np.ascontiguousarray(u, dtype=np.float64).ravel()
    w = np.ascontiguousarray(w, dtype=np.float64).ravel()
    if USE_NUMBA:
        return _gamma_quantile_loop(u, w, float(k), float(rel_tol), int(max_iter))
    return _gamma_quantile_vec(u, w, float(k), float(rel_tol), int(max_iter))


# --------------------------------------------------------------------------
# empirical persistence at fixed ranks
# --------------------------------------------------------------------------

@njit
def _qepf_rows_loop(rows, ks):
    n_rows, n = rows.shape
    m = ks.shape[0]
    out = np.empty((n_rows, m))
    tail = np.empty(n + 1)
    for r in range(n_rows):
        tail[n] = 0.0
        for j in range(n - 1, -1, -1):
            tail[j] = tail[j + 1] + rows[r, j]
        for i in range(m):
            k = ks[i]
            out[r, i] = (tail[k] / (n - k)) / rows[r, k - 1]
    return out


def _qepf_rows_vec(rows, ks):
    n = rows.shape[1]
    tail = np.cumsum(rows[:, ::-1], axis=1)[:, ::-1]
    # tail[:, j] = sum(rows[:, j:]); rank k needs the sum from index k on
    return (tail[:, ks] / (n - ks)) / rows[:, ks - 1]


def qepf_at_ranks(rows, ks):
    """Empirical persistence for each sorted row at 1-based ranks ``ks``.

    ``rows`` is (R, n), each row ascending; every rank must satisfy
    1 <= k < n. Returns an (R, len(ks)) array.
    """
    rows = np.ascontiguousarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    ks = np.ascontiguousarray(ks, dtype=np.int64)
    if USE_NUMBA:
        return _qepf_rows_loop(rows, ks)
    return _qepf_rows_vec(rows, ks)


# --------------------------------------------------------------------------
# pooled bootstrap of the supremum statistic
# --------------------------------------------------------------------------

@njit
def _sup_sorted_loop(ref, bio, ks_ref, ks_bio, scale, out, offset):
    """Fused tail sums and supremum over rows of already sorted resamples."""
    n_boot, n_ref = ref.shape
    n_bio = bio.shape[1]
    m = ks_ref.shape[0]
    tr = np.empty(n_ref + 1)
    tb = np.empty(n_bio + 1)
    for b in range(n_boot):
        tr[n_ref] = 0.0
        for j in range(n_ref - 1, -1, -1):
            tr[j] = tr[j + 1] + ref[b, j]
        tb[n_bio] = 0.0
        for j in range(n_bio - 1, -1, -1):
            tb[j] = tb[j + 1] + bio[b, j]
        best = 0.0
        for i in range(m):
            kr = ks_ref[i]
            kb = ks_bio[i]
            pr = (tr[kr] / (n_ref - kr)) / ref[b, kr - 1]
            pb = (tb[kb] / (n_bio - kb)) / bio[b, kb - 1]
            d = abs(pr - pb)
            if d > best:
                best = d
        out[offset + b] = scale * best


def _bootstrap_sup_loop(pool, idx, n_ref, ks_ref, ks_bio, scale, chunk=256):
    # numpy's row sort beats a compiled per-row sort; compile only the reduction
    out = np.empty(idx.shape[0])
    for start in range(0, idx.shape[0], chunk):
        block = idx[start:start + chunk]
        ref = np.sort(pool[block[:, :n_ref]], axis=1)
        bio = np.sort(pool[block[:, n_ref:]], axis=1)
        _sup_sorted_loop(ref, bio, ks_ref, ks_bio, scale, out, start)
    return out


def _bootstrap_sup_vec(pool, idx, n_ref, ks_ref, ks_bio, scale, chunk=256):
    out = np.empty(idx.shape[0])
    for start in range(0, idx.shape[0], chunk):
        block = idx[start:start + chunk]
        ref = np.sort(pool[block[:, :n_ref]], axis=1)
        bio = np.sort(pool[block[:, n_ref:]], axis=1)
        diff = np.abs(_qepf_rows_vec(ref, ks_ref) - _qepf_rows_vec(bio, ks_bio))
        out[start:start + chunk] = scale * diff.max(axis=1)
    return out


def bootstrap_sup(pool, idx, n_ref, ks_ref, ks_bio, scale):
    """Supremum statistic for each bootstrap draw.

    Row ``b`` of ``idx`` indexes ``pool``: the first ``n_ref`` columns form
    the resampled reference arm, the rest the biosimilar arm.
    """
    pool = np.ascontiguousarray(pool, dtype=np.float64)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    ks_ref = np.ascontiguousarray(ks_ref, dtype=np.int64)
    ks_bio = np.ascontiguousarray(ks_bio, dtype=np.int64)
    if USE_NUMBA:
        return _bootstrap_sup_loop(pool, idx, int(n_ref), ks_ref, ks_bio, float(scale))
    return _bootstrap_sup_vec(pool, idx, int(n_ref), ks_ref, ks_bio, float(scale))
