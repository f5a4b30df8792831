"""Benjamini-Hochberg baseline over per-coordinate two-sample t tests.

The Student-t CDF is self-contained (regularized incomplete beta via a
continued fraction, see :mod:`datekit.kernels`), so the baseline carries no
dependency beyond numpy.  The t test uses the pooled-variance form with
n1 + n2 - 2 degrees of freedom, matching an equal-covariance design.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

_VAR_FLOOR = 1e-300


@dataclass
class TestResult:
    t_stats: np.ndarray
    p_values: np.ndarray
    df: float


def t_cdf(t: float, df: float) -> float:
    """Student-t cumulative distribution function."""
    if df <= 0:
        raise ValueError("df must be positive")
    if np.isnan(t):
        return float("nan")
    if np.isinf(t):
        return 0.0 if t < 0 else 1.0
    tail = kernels.betainc(df / 2.0, 0.5, df / (df + t * t))
    return 0.5 * tail if t < 0 else 1.0 - 0.5 * tail


def two_sided_pvalues(t_stats: np.ndarray, df: float) -> np.ndarray:
    """P(|T| >= |t|) for each statistic, evaluated without cancellation."""
    t = np.asarray(t_stats, dtype=np.float64)
    x = df / (df + t * t)
    out = kernels.betainc_arr(df / 2.0, 0.5, np.ascontiguousarray(x))
    out[np.isinf(t)] = 0.0
    return out


def two_sample_t(x1: np.ndarray, x2: np.ndarray) -> TestResult:
    """Pooled-variance two-sample t test per coordinate.

    Coordinates whose pooled variance vanishes get p-value 0 when the group
    means differ and 1 otherwise.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    n1, n2 = x1.shape[0], x2.shape[0]
    if n1 < 2 or n2 < 2:
        raise ValueError("both groups need at least 2 observations")
    if x1.shape[1] != x2.shape[1]:
        raise ValueError("column counts must agree")
    df = float(n1 + n2 - 2)
    m1 = x1.mean(axis=0)
    m2 = x2.mean(axis=0)
    ss1 = ((x1 - m1) ** 2).sum(axis=0)
    ss2 = ((x2 - m2) ** 2).sum(axis=0)
    pooled = (ss1 + ss2) / df
    scale = np.sqrt(pooled * (1.0 / n1 + 1.0 / n2))
    diff = m1 - m2
    degenerate = pooled < _VAR_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(degenerate, 0.0, diff / np.where(degenerate, 1.0, scale))
    p = two_sided_pvalues(t, df)
    if degenerate.any():
        t = t.copy()
        t[degenerate] = np.where(diff[degenerate] != 0.0, np.inf, 0.0)
        t[degenerate & (diff < 0)] = -np.inf
        p = p.copy()
        p[degenerate] = np.where(diff[degenerate] != 0.0, 0.0, 1.0)
    return TestResult(t_stats=t, p_values=p, df=df)


def bh_select(p_values: np.ndarray, alpha: float) -> np.ndarray:
    """Step-up selection: indices with p-value at or below the BH cutoff.

    Returns the empty set when no sorted p-value clears its rung.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    p_values = np.asarray(p_values, dtype=np.float64)
    if np.any((p_values < 0) | (p_values > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    p = p_values.shape[0]
    order = np.sort(p_values)
    rungs = alpha * np.arange(1, p + 1) / p
    passing = np.nonzero(order <= rungs)[0]
    if passing.size == 0:
        return np.array([], dtype=np.intp)
    cutoff = order[passing[-1]]
    return np.nonzero(p_values <= cutoff)[0]
