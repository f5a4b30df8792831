"""Dense symmetric linear algebra and multivariate normal sampling.

All functions are pure: they never mutate their inputs and depend only on
their arguments (sampling additionally on the :class:`~datekit.rng.SeededRng`
value), so they are safe to call from multiple threads.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DimensionMismatch, NotPositiveDefinite
from .rng import SeededRng

# A pivot at or below this fraction of the largest diagonal entry is treated
# as genuine indefiniteness rather than rounding noise.
PIVOT_TOL = 1e-12


def _as_square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    return a


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor L with L @ L.T == a.

    Raises :class:`NotPositiveDefinite` when a pivot falls to or below
    ``PIVOT_TOL * max(diag(a))``.
    """
    a = _as_square(a)
    lower, fail = kernels.cholesky_lower(np.ascontiguousarray(a), PIVOT_TOL)
    if fail:
        raise NotPositiveDefinite(pivot_index=fail - 1)
    return lower


def spd_inverse(a: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix, symmetrized."""
    a = _as_square(a)
    cholesky(a)  # SPD gate with the package-wide pivot rule
    inv = np.linalg.inv(a)
    return (inv + inv.T) / 2.0


def omega_bounds(omega: np.ndarray) -> tuple[float, float]:
    """(min, max) of the diagonal of a precision matrix."""
    omega = _as_square(omega, "omega")
    diag = np.diagonal(omega)
    return float(diag.min()), float(diag.max())


def mvn_sample(
    mean: np.ndarray,
    chol_sigma: np.ndarray,
    n: int,
    rng: SeededRng,
) -> np.ndarray:
    """Draw ``n`` i.i.d. rows from N(mean, L L') given the factor L.

    The output is a deterministic function of (mean, chol_sigma, n, rng):
    the standard-normal block is drawn in one shot from the stream, so the
    result does not depend on call order or thread count.
    """
    mean = np.asarray(mean, dtype=np.float64)
    chol_sigma = _as_square(chol_sigma, "chol_sigma")
    p = chol_sigma.shape[0]
    if mean.shape != (p,):
        raise DimensionMismatch(
            f"mean has shape {mean.shape}, factor is {p}x{p}"
        )
    if n < 0:
        raise ValueError("n must be non-negative")
    z = rng.generator().standard_normal((n, p))
    return mean[None, :] + z @ chol_sigma.T
