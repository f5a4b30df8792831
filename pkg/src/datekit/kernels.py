"""Hot numerical kernels with numba acceleration and pure-numpy fallbacks.

Backend selection happens once at import time:

* default: compile the loop kernels with ``numba.njit`` (disk-cached);
* ``DATEKIT_NUMBA=0`` in the environment (or numba not importable): use the
  vectorized numpy fallbacks instead.

Both backends are always importable through :data:`IMPLEMENTATIONS`, which is
what ``benchmarks/bench_kernels.py`` and the cross-backend tests use.  The
public names (``l0_enumerate``, ``banded_sweep``, ...) are bound to the
selected backend, with one measured exception: standalone dense Cholesky is
always the LAPACK-backed variant (see the note at the bottom).

The kernels covered here are the ones profiling shows dominate runtime:
dense Cholesky with an explicit pivot-tolerance rule, the exhaustive
ternary search of the excising step, the per-column banded regressions of
the precision estimator (all window widths in one sweep), the unit lower
triangular inverse used by its cross-validation, and the regularized
incomplete beta function behind the t CDF.
"""

from __future__ import annotations

import math
import os

import numpy as np

_MAX_BETACF_ITER = 400
_BETACF_EPS = 3e-16
_FPMIN = 1e-300


def _numba_requested() -> bool:
    flag = os.environ.get("DATEKIT_NUMBA", "").strip().lower()
    return flag not in ("0", "false", "off", "no")


# ---------------------------------------------------------------------------
# Loop-style implementations (numba-compilable source of truth).
# ---------------------------------------------------------------------------


def _cholesky_lower_loop(a, tol_factor):
    """Lower Cholesky factor of ``a`` with explicit pivot control.

    Returns ``(L, fail)`` where ``fail`` is 0 on success and ``j + 1`` when
    pivot ``j`` dropped to or below ``tol_factor * max(diag(a))``.
    """
    p = a.shape[0]
    L = np.zeros((p, p))
    max_diag = 0.0
    for i in range(p):
        if a[i, i] > max_diag:
            max_diag = a[i, i]
    tol = tol_factor * max_diag
    for j in range(p):
        pivot = a[j, j]
        for t in range(j):
            pivot -= L[j, t] * L[j, t]
        if not (pivot > tol):
            return L, j + 1
        ljj = math.sqrt(pivot)
        L[j, j] = ljj
        for i in range(j + 1, p):
            s = a[i, j]
            for t in range(j):
                s -= L[i, t] * L[j, t]
            L[i, j] = s / ljj
    return L, 0


def _l0_enumerate_loop(a, d, n, lam2, delta, tie_tol):
    """Exhaustive ternary minimization of the excising objective.

    Candidates assign each coordinate one of {0, +delta, -delta} and are
    scored by ``n * (d - a x)' a^{-1} (d - a x) + lam2 * nnz(x)``.  Among
    candidates within a relative ``tie_tol`` band of the minimum, the one
    with fewest nonzeros wins, remaining ties resolved by enumeration order
    (first coordinate most significant, digit order 0 < + < -).
    Returns the signs as an int8 vector over {-1, 0, +1}.
    """
    m = a.shape[0]
    sol = np.linalg.solve(a, d)
    c0 = 0.0
    for i in range(m):
        c0 += d[i] * sol[i]
    total = 1
    for _ in range(m):
        total *= 3
    vals = np.zeros(m)

    best = np.inf
    for code in range(total):
        rem = code
        nnz = 0
        for i in range(m - 1, -1, -1):
            digit = rem % 3
            rem //= 3
            if digit == 0:
                vals[i] = 0.0
            elif digit == 1:
                vals[i] = delta
                nnz += 1
            else:
                vals[i] = -delta
                nnz += 1
        lin = 0.0
        quad = 0.0
        for i in range(m):
            vi = vals[i]
            if vi != 0.0:
                lin += vi * d[i]
                s = 0.0
                for j in range(m):
                    vj = vals[j]
                    if vj != 0.0:
                        s += a[i, j] * vj
                quad += vi * s
        obj = n * (c0 - 2.0 * lin + quad) + lam2 * nnz
        if obj < best:
            best = obj

    band = best + tie_tol * max(1.0, abs(best))
    best_code = 0
    best_nnz = m + 1
    for code in range(total):
        rem = code
        nnz = 0
        for i in range(m - 1, -1, -1):
            digit = rem % 3
            rem //= 3
            if digit == 0:
                vals[i] = 0.0
            elif digit == 1:
                vals[i] = delta
                nnz += 1
            else:
                vals[i] = -delta
                nnz += 1
        if nnz >= best_nnz:
            continue
        lin = 0.0
        quad = 0.0
        for i in range(m):
            vi = vals[i]
            if vi != 0.0:
                lin += vi * d[i]
                s = 0.0
                for j in range(m):
                    vj = vals[j]
                    if vj != 0.0:
                        s += a[i, j] * vj
                quad += vi * s
        obj = n * (c0 - 2.0 * lin + quad) + lam2 * nnz
        if obj <= band:
            best_nnz = nnz
            best_code = code

    signs = np.zeros(m, np.int8)
    rem = best_code
    for i in range(m - 1, -1, -1):
        digit = rem % 3
        rem //= 3
        if digit == 1:
            signs[i] = 1
        elif digit == 2:
            signs[i] = -1
    return signs


def _unit_lower_inverse_loop(coef, tau):
    """Dense inverse of the unit lower triangular (I - A) with banded A.

    ``coef[k, j]`` is A's entry at row k, column k-1-j (nearest first).
    """
    p = coef.shape[0]
    out = np.zeros((p, p))
    for j in range(p):
        out[j, j] = 1.0
        for i in range(j + 1, p):
            win = min(tau, i)
            s = 0.0
            for t in range(1, win + 1):
                if i - t >= j:
                    s += coef[i, t - 1] * out[i - t, j]
            out[i, j] = s
    return out


def _precision_from_regressions_loop(coef, dvar, tau):
    """Assemble (I - A)' D^{-1} (I - A) densely from regression output."""
    p = coef.shape[0]
    omega = np.zeros((p, p))
    pos = np.zeros(tau + 1, np.int64)
    val = np.zeros(tau + 1)
    for k in range(p):
        win = min(tau, k)
        inv_d = 1.0 / dvar[k]
        pos[0] = k
        val[0] = 1.0
        for j in range(win):
            pos[1 + j] = k - 1 - j
            val[1 + j] = -coef[k, j]
        for a in range(win + 1):
            va = val[a] * inv_d
            for b in range(win + 1):
                omega[pos[a], pos[b]] += va * val[b]
    return omega


def _betacf_loop(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    dd = 1.0 - qab * x / qap
    if abs(dd) < _FPMIN:
        dd = _FPMIN
    dd = 1.0 / dd
    h = dd
    for mm in range(1, _MAX_BETACF_ITER + 1):
        m2 = 2 * mm
        aa = mm * (b - mm) * x / ((qam + m2) * (a + m2))
        dd = 1.0 + aa * dd
        if abs(dd) < _FPMIN:
            dd = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        dd = 1.0 / dd
        h *= dd * c
        aa = -(a + mm) * (qab + mm) * x / ((a + m2) * (qap + m2))
        dd = 1.0 + aa * dd
        if abs(dd) < _FPMIN:
            dd = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        dd = 1.0 / dd
        de = dd * c
        h *= de
        if abs(de - 1.0) < _BETACF_EPS:
            break
    return h


def _betainc_loop(a, b, x):
    """Regularized incomplete beta I_x(a, b), continued-fraction evaluation."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf_loop(a, b, x) / a
    return 1.0 - front * _betacf_loop(b, a, 1.0 - x) / b


def _betainc_arr_loop(a, b, xs):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = _betainc_loop(a, b, xs[i])
    return out


# ---------------------------------------------------------------------------
# Pure-numpy fallbacks.
# ---------------------------------------------------------------------------


def _cholesky_lower_np(a, tol_factor):
    p = a.shape[0]
    diag = np.diagonal(a)
    max_diag = float(diag.max()) if p else 0.0
    tol = tol_factor * max_diag
    try:
        lower = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return np.zeros_like(a), 1
    pivots = np.diagonal(lower) ** 2
    bad = np.nonzero(~(pivots > tol))[0]
    if bad.size:
        return np.zeros_like(a), int(bad[0]) + 1
    return lower, 0


_L0_CHUNK = 3**9


def _l0_objective_block(a, d, n, lam2, delta, c0, codes, powers):
    digits = (codes[:, None] // powers[None, :]) % 3
    vals = np.where(digits == 1, delta, np.where(digits == 2, -delta, 0.0))
    nnz = (digits != 0).sum(axis=1)
    quad = np.einsum("ij,ij->i", vals @ a, vals)
    obj = n * (c0 - 2.0 * (vals @ d) + quad) + lam2 * nnz
    return obj, nnz


def _l0_enumerate_np(a, d, n, lam2, delta, tie_tol):
    m = a.shape[0]
    c0 = float(d @ np.linalg.solve(a, d))
    total = 3**m
    powers = 3 ** np.arange(m - 1, -1, -1, dtype=np.int64)
    best = np.inf
    for start in range(0, total, _L0_CHUNK):
        codes = np.arange(start, min(start + _L0_CHUNK, total), dtype=np.int64)
        obj, _ = _l0_objective_block(a, d, n, lam2, delta, c0, codes, powers)
        best = min(best, float(obj.min()))
    band = best + tie_tol * max(1.0, abs(best))
    best_code = 0
    best_nnz = m + 1
    for start in range(0, total, _L0_CHUNK):
        codes = np.arange(start, min(start + _L0_CHUNK, total), dtype=np.int64)
        obj, nnz = _l0_objective_block(a, d, n, lam2, delta, c0, codes, powers)
        mask = obj <= band
        if not mask.any():
            continue
        cand_nnz = nnz[mask]
        cand_codes = codes[mask]
        local_best = int(cand_nnz.min())
        if local_best < best_nnz:
            best_nnz = local_best
            best_code = int(cand_codes[cand_nnz == local_best][0])
    digits = (best_code // powers) % 3
    signs = np.zeros(m, np.int8)
    signs[digits == 1] = 1
    signs[digits == 2] = -1
    return signs


def _dense_from_coeffs(coef, tau):
    p = coef.shape[0]
    bmat = np.eye(p)
    for j in range(tau):
        rows = np.arange(j + 1, p)
        bmat[rows, rows - 1 - j] = -coef[j + 1 :, j]
    return bmat


def _banded_sweep_np(xt, tau_max, ridge):
    """Least-squares of each column on its nearest predecessors, all widths.

    ``xt`` is the (p, nrows) transpose of the centered data so the numba
    twin sees contiguous columns.  For every column k and window t in
    0..tau_max, the coefficients of column k regressed on columns
    k-1, ..., k-t (nearest first) and the residual variance (divisor nrows,
    floored at 1e-12) land in ``coef[t, k, :t]`` and ``dvar[t, k]``.
    A singular normal-equations solve is retried with ``ridge`` added to
    the Gram diagonal and flagged per column.
    """
    x = xt.T
    nrows, p = x.shape
    tm = tau_max
    width = tm if tm > 0 else 1
    coef = np.zeros((tm + 1, p, width))
    dvar = np.empty((tm + 1, p))
    repaired = np.zeros(p, np.uint8)
    for k in range(p):
        m = min(tm, k)
        target = x[:, k]
        xx = float(target @ target)
        dvar[0, k] = max(xx / nrows, 1e-12)
        if m > 0:
            win = x[:, k - m : k][:, ::-1]
            gram = win.T @ win
            cross = win.T @ target
            ridged = False
            for t in range(1, m + 1):
                gsub = gram[:t, :t]
                try:
                    b = np.linalg.solve(gsub, cross[:t])
                except np.linalg.LinAlgError:
                    b = np.linalg.solve(gsub + ridge * np.eye(t), cross[:t])
                    ridged = True
                rss = max(xx - float(cross[:t] @ b), 0.0)
                coef[t, k, :t] = b
                dvar[t, k] = max(rss / nrows, 1e-12)
            if ridged:
                repaired[k] = 1
        for t in range(m + 1, tm + 1):
            coef[t, k, :m] = coef[m, k, :m]
            dvar[t, k] = dvar[m, k]
    return coef, dvar, repaired


def _unit_lower_inverse_np(coef, tau):
    p = coef.shape[0]
    return np.linalg.solve(_dense_from_coeffs(coef, tau), np.eye(p))


def _precision_from_regressions_np(coef, dvar, tau):
    bmat = _dense_from_coeffs(coef, tau)
    return bmat.T @ (bmat / dvar[:, None])


def _betainc_arr_np(a, b, xs):
    return np.array([_betainc_loop(a, b, float(x)) for x in xs])


# ---------------------------------------------------------------------------
# Backend dispatch.
# ---------------------------------------------------------------------------

NUMPY_IMPLS = {
    "cholesky_lower": _cholesky_lower_np,
    "l0_enumerate": _l0_enumerate_np,
    "banded_sweep": _banded_sweep_np,
    "unit_lower_inverse": _unit_lower_inverse_np,
    "precision_from_regressions": _precision_from_regressions_np,
    "betainc": _betainc_loop,
    "betainc_arr": _betainc_arr_np,
}

NUMBA_IMPLS: dict | None = None
NUMBA_AVAILABLE = False

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - environment without numba
    njit = None

if NUMBA_AVAILABLE:
    _nb_cholesky = njit(cache=True)(_cholesky_lower_loop)
    _nb_l0_enumerate = njit(cache=True)(_l0_enumerate_loop)

    @njit(cache=True)
    def _nb_banded_sweep(xt, tau_max, ridge):
        p, nrows = xt.shape
        tm = tau_max
        width = tm if tm > 0 else 1
        coef = np.zeros((tm + 1, p, width))
        dvar = np.empty((tm + 1, p))
        repaired = np.zeros(p, np.uint8)
        g = np.zeros((width, width))
        cvec = np.zeros(width)
        y = np.zeros(width)
        b = np.zeros(width)
        for k in range(p):
            m = min(tm, k)
            xx = 0.0
            for t in range(nrows):
                xx += xt[k, t] * xt[k, t]
            for i in range(m):
                ci = 0.0
                for t in range(nrows):
                    ci += xt[k - 1 - i, t] * xt[k, t]
                cvec[i] = ci
                for j in range(i, m):
                    s = 0.0
                    for t in range(nrows):
                        s += xt[k - 1 - i, t] * xt[k - 1 - j, t]
                    g[i, j] = s
                    g[j, i] = s
            lfac, fail = _nb_cholesky(g[:m, :m].copy(), 1e-12)
            if fail != 0:
                for i in range(m):
                    g[i, i] += ridge
                lfac, fail = _nb_cholesky(g[:m, :m].copy(), 0.0)
                repaired[k] = 1
            dvar[0, k] = max(xx / nrows, 1e-12)
            for t in range(1, m + 1):
                if fail != 0:
                    dvar[t, k] = dvar[0, k]
                    repaired[k] = 2
                    continue
                for i in range(t):
                    s = cvec[i]
                    for j in range(i):
                        s -= lfac[i, j] * y[j]
                    y[i] = s / lfac[i, i]
                for i in range(t - 1, -1, -1):
                    s = y[i]
                    for j in range(i + 1, t):
                        s -= lfac[j, i] * b[j]
                    b[i] = s / lfac[i, i]
                rss = xx
                for i in range(t):
                    coef[t, k, i] = b[i]
                    rss -= cvec[i] * b[i]
                if rss < 0.0:
                    rss = 0.0
                dvar[t, k] = max(rss / nrows, 1e-12)
            for t in range(m + 1, tm + 1):
                for i in range(m):
                    coef[t, k, i] = coef[m, k, i]
                dvar[t, k] = dvar[m, k]
        return coef, dvar, repaired

    _nb_unit_lower_inverse = njit(cache=True)(_unit_lower_inverse_loop)
    _nb_precision_from_regressions = njit(cache=True)(
        _precision_from_regressions_loop
    )
    _nb_betacf = njit(cache=True)(_betacf_loop)

    @njit(cache=True)
    def _nb_betainc(a, b, x):
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        ln_front = (
            math.lgamma(a + b)
            - math.lgamma(a)
            - math.lgamma(b)
            + a * math.log(x)
            + b * math.log1p(-x)
        )
        front = math.exp(ln_front)
        if x < (a + 1.0) / (a + b + 2.0):
            return front * _nb_betacf(a, b, x) / a
        return 1.0 - front * _nb_betacf(b, a, 1.0 - x) / b

    @njit(cache=True)
    def _nb_betainc_arr(a, b, xs):
        out = np.empty(xs.shape[0])
        for i in range(xs.shape[0]):
            out[i] = _nb_betainc(a, b, xs[i])
        return out

    NUMBA_IMPLS = {
        "cholesky_lower": _nb_cholesky,
        "l0_enumerate": _nb_l0_enumerate,
        "banded_sweep": _nb_banded_sweep,
        "unit_lower_inverse": _nb_unit_lower_inverse,
        "precision_from_regressions": _nb_precision_from_regressions,
        "betainc": _nb_betainc,
        "betainc_arr": _nb_betainc_arr,
    }

NUMBA_ENABLED = NUMBA_AVAILABLE and _numba_requested()

IMPLEMENTATIONS = {"numpy": NUMPY_IMPLS}
if NUMBA_IMPLS is not None:
    IMPLEMENTATIONS["numba"] = NUMBA_IMPLS

BACKEND = "numba" if NUMBA_ENABLED else "numpy"

_active = IMPLEMENTATIONS[BACKEND]
# standalone dense factorization is BLAS3-bound: the LAPACK-backed variant
# beats the loop kernel on every size measured (benchmarks/bench_kernels.py);
# the loop variant still serves the small per-column Grams inside the numba
# banded sweep, where call overhead would dominate
cholesky_lower = _cholesky_lower_np
l0_enumerate = _active["l0_enumerate"]
banded_sweep = _active["banded_sweep"]
unit_lower_inverse = _active["unit_lower_inverse"]
precision_from_regressions = _active["precision_from_regressions"]
betainc = _active["betainc"]
betainc_arr = _active["betainc_arr"]
