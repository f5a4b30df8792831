import itertools

import numpy as np
import pytest

from datekit import SeededRng, cholesky


def random_unit_diag_spd(gen: np.random.Generator, p: int) -> np.ndarray:
    """Random SPD matrix standardized to unit diagonal, exactly symmetric."""
    g = gen.standard_normal((p, p + 2))
    raw = g @ g.T / (p + 2) + 0.5 * np.eye(p)
    raw = (raw + raw.T) / 2.0
    scale = 1.0 / np.sqrt(np.diagonal(raw))
    return raw * np.outer(scale, scale)


def random_excision_problem(gen: np.random.Generator, max_m: int = 8):
    """A random (matrix, difference, n, penalty, magnitude) excision instance."""
    m = int(gen.integers(1, max_m + 1))
    base = random_unit_diag_spd(gen, m) if m > 1 else np.array([[1.0]])
    scale = gen.uniform(0.8, 2.5, size=m)
    a = base * np.sqrt(np.outer(scale, scale))
    d = gen.standard_normal(m) * gen.uniform(0.2, 1.5)
    n = float(gen.uniform(5.0, 60.0))
    lam = float(gen.uniform(0.0, 4.0))
    delta = float(gen.uniform(0.1, 1.2))
    return a, d, n, lam, delta


def brute_force_excise(a, d, n, lam, delta, tie_tol=1e-9):
    """Independent enumeration of the excision objective.

    Evaluates the quadratic form on the residual directly (explicit inverse)
    rather than through the expanded form the kernel uses, then applies the
    same tie rule: near-minimum band, fewest nonzeros, enumeration order.
    """
    m = len(d)
    a_inv = np.linalg.inv(a)
    lam2 = lam * lam
    entries = []
    best = np.inf
    for assignment in itertools.product((0.0, delta, -delta), repeat=m):
        v = np.array(assignment)
        resid = d - a @ v
        obj = n * float(resid @ a_inv @ resid) + lam2 * np.count_nonzero(v)
        entries.append((obj, int(np.count_nonzero(v)), v))
        best = min(best, obj)
    band = best + tie_tol * max(1.0, abs(best))
    chosen = None
    for obj, nnz, v in entries:
        if obj <= band and (chosen is None or nnz < chosen[0]):
            chosen = (nnz, v)
    return np.sign(chosen[1]).astype(np.int8)


@pytest.fixture
def gen():
    return SeededRng(20240817).generator()


def assert_spd(a: np.ndarray):
    cholesky(a)  # raises if not
