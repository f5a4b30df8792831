"""Covariance model construction and synthetic two-sample data generation.

The four covariance families are the usual simulation workhorses: AR(1)
geometric decay, non-overlapping equicorrelated blocks, a penta-diagonal
band, and a standardized random sparse model.  All are unit-diagonal and
SPD-checked at construction.  Datasets plant a sparse mean shift in the
second group whose support size and magnitude window are controlled by the
sparsity exponent ``beta`` and the strength parameter ``r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NotPositiveDefinite
from .linalg import cholesky, mvn_sample, spd_inverse
from .rng import SeededRng

COV_KINDS = ("ar1", "block", "penta", "randsparse")


@dataclass(frozen=True)
class CovarianceSpec:
    """Parameters of one covariance model instance.

    ``kind`` selects the family; only the matching parameters are read.
    ``randsparse`` is the only stochastic family (its support is drawn from
    the rng handed to :func:`build_covariance`).
    """

    kind: str
    p: int
    rho: float = 0.5
    within_corr: float = 0.6
    block_size: int = 2
    d1: float = 0.5
    d2: float = 0.2
    mag_low: float = 1.0
    mag_high: float = 2.0

    def __post_init__(self):
        if self.kind not in COV_KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.p < 1:
            raise ValueError("p must be positive")

    @property
    def is_random(self) -> bool:
        return self.kind == "randsparse"

    def to_json(self) -> dict:
        out = {"kind": self.kind, "p": self.p}
        if self.kind == "ar1":
            out["rho"] = self.rho
        elif self.kind == "block":
            out["within_corr"] = self.within_corr
            out["block_size"] = self.block_size
        elif self.kind == "penta":
            out["d1"] = self.d1
            out["d2"] = self.d2
        else:
            out["mag_low"] = self.mag_low
            out["mag_high"] = self.mag_high
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "CovarianceSpec":
        return cls(**obj)


@dataclass(frozen=True)
class SignalSpec:
    """Sparsity and strength of the planted mean difference.

    The number of signals is the nearest integer to ``p**(1 - beta)``;
    magnitudes are uniform on ``[sqrt(m1*r*log(p)/n), sqrt(m2*r*log(p)/n)]``
    with ``(m1, m2) = mag_interval_multipliers``, each times a fair random
    sign.  ``n`` is the effective size ``n1*n2/(n1+n2)``.
    """

    beta: float
    r: float
    mag_interval_multipliers: tuple[float, float] = (1.0, 3.0)

    def __post_init__(self):
        if not 0.5 < self.beta < 1.0:
            raise ValueError("beta must lie in (1/2, 1)")
        if self.r <= 0:
            raise ValueError("r must be positive")
        m1, m2 = self.mag_interval_multipliers
        if not 0 < m1 <= m2:
            raise ValueError("magnitude multipliers must satisfy 0 < m1 <= m2")


@dataclass
class TwoSampleData:
    """Two observation matrices plus optional ground truth difference."""

    x1: np.ndarray
    x2: np.ndarray
    truth: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.x1.shape[1]

    @property
    def n1(self) -> int:
        return self.x1.shape[0]

    @property
    def n2(self) -> int:
        return self.x2.shape[0]

    @property
    def n_effective(self) -> float:
        return self.n1 * self.n2 / (self.n1 + self.n2)


def signal_count(p: int, beta: float) -> int:
    """Nearest integer to p**(1-beta), the planted support size."""
    return int(math.floor(p ** (1.0 - beta) + 0.5))


def build_covariance(spec: CovarianceSpec, rng: SeededRng) -> np.ndarray:
    """Construct the unit-diagonal covariance matrix for ``spec``.

    The result is SPD-checked by factorization; indefinite parameter
    choices raise :class:`NotPositiveDefinite`.
    """
    p = spec.p
    if spec.kind == "ar1":
        if not abs(spec.rho) < 1:
            raise NotPositiveDefinite(message="AR(1) needs |rho| < 1")
        idx = np.arange(p)
        sigma = spec.rho ** np.abs(idx[:, None] - idx[None, :])
    elif spec.kind == "block":
        sigma = np.eye(p)
        bs = spec.block_size
        for start in range(0, p, bs):
            stop = min(start + bs, p)
            block = np.full((stop - start, stop - start), spec.within_corr)
            np.fill_diagonal(block, 1.0)
            sigma[start:stop, start:stop] = block
    elif spec.kind == "penta":
        idx = np.arange(p)
        dist = np.abs(idx[:, None] - idx[None, :])
        sigma = np.where(dist == 0, 1.0, 0.0)
        sigma = sigma + np.where(dist == 1, spec.d1, 0.0)
        sigma = sigma + np.where(dist == 2, spec.d2, 0.0)
    else:
        gen = rng.generator()
        cols = gen.integers(0, p, size=p)
        mags = gen.uniform(spec.mag_low, spec.mag_high, size=p)
        signs = np.where(gen.random(p) < 0.5, -1.0, 1.0)
        gamma = np.zeros((p, p))
        gamma[np.arange(p), cols] = mags * signs
        raw = gamma @ gamma.T + np.eye(p)
        scale = 1.0 / np.sqrt(np.diagonal(raw))
        sigma = raw * scale[:, None] * scale[None, :]
    sigma = (sigma + sigma.T) / 2.0
    cholesky(sigma)  # raises NotPositiveDefinite on bad parameters
    return sigma


def ar1_precision(rho: float, p: int) -> np.ndarray:
    """Exact tridiagonal inverse of the AR(1) covariance (rho^|i-j|)."""
    if not abs(rho) < 1:
        raise ValueError("|rho| must be < 1")
    scale = 1.0 / (1.0 - rho * rho)
    omega = np.zeros((p, p))
    diag = np.full(p, (1.0 + rho * rho) * scale)
    if p >= 1:
        diag[0] = scale
        diag[-1] = scale
    np.fill_diagonal(omega, diag)
    off = -rho * scale
    idx = np.arange(p - 1)
    omega[idx, idx + 1] = off
    omega[idx + 1, idx] = off
    return omega


def pooled_precision(
    sigma1: np.ndarray,
    sigma2: np.ndarray,
    n1: int,
    n2: int,
) -> np.ndarray:
    """Inverse of the sample-size weighted covariance mixture.

    This is the transform matrix: inv((n2*sigma1 + n1*sigma2)/(n1 + n2)).
    """
    sigma1 = np.asarray(sigma1, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    if sigma1.shape != sigma2.shape:
        raise ValueError("covariances must have matching shapes")
    total = n1 + n2
    mix = (n2 / total) * sigma1 + (n1 / total) * sigma2
    return spd_inverse(mix)


def generate_dataset(
    cov: CovarianceSpec,
    sig: SignalSpec,
    n1: int,
    n2: int,
    rng: SeededRng,
) -> TwoSampleData:
    """Draw a synthetic two-sample dataset with a planted sparse signal.

    Group one has mean zero; group two has ``signal_count(p, beta)`` nonzero
    mean coordinates at uniformly random distinct positions.  Both groups
    share the covariance built from ``cov``.  The stored ``truth`` is the
    group-one minus group-two mean difference, i.e. the negated plant.

    The rng is consumed through fixed sub-streams (covariance, signal,
    group one, group two), so the covariance can be rebuilt from the meta
    record without replaying the data draws.
    """
    if n1 < 2 or n2 < 2:
        raise ValueError("both sample sizes must be at least 2")
    p = cov.p
    k = signal_count(p, sig.beta)
    if k < 1:
        raise ValueError("signal count must be at least 1")
    n_eff = n1 * n2 / (n1 + n2)

    sigma = build_covariance(cov, rng.derive(0))
    lower = cholesky(sigma)

    gen = rng.derive(1).generator()
    positions = np.sort(gen.choice(p, size=k, replace=False))
    m1, m2 = sig.mag_interval_multipliers
    log_p = math.log(p)
    lo = math.sqrt(m1 * sig.r * log_p / n_eff)
    hi = math.sqrt(m2 * sig.r * log_p / n_eff)
    magnitudes = gen.uniform(lo, hi, size=k)
    signs = np.where(gen.random(k) < 0.5, -1.0, 1.0)
    mu2 = np.zeros(p)
    mu2[positions] = magnitudes * signs

    x1 = mvn_sample(np.zeros(p), lower, n1, rng.derive(2))
    x2 = mvn_sample(mu2, lower, n2, rng.derive(3))

    meta = {
        "cov": cov.to_json(),
        "beta": sig.beta,
        "r": sig.r,
        "mag_interval_multipliers": list(sig.mag_interval_multipliers),
        "n1": n1,
        "n2": n2,
        "n_effective": n_eff,
        "signal_count": k,
        "mag_interval": [lo, hi],
        "rng": rng.to_json(),
    }
    return TwoSampleData(x1=x1, x2=x2, truth=-mu2, meta=meta)


def known_precision_from_meta(meta: dict) -> np.ndarray:
    """Rebuild the true transform matrix recorded in a dataset's meta."""
    cov = CovarianceSpec.from_json(meta["cov"])
    rng = SeededRng.from_json(meta["rng"])
    sigma = build_covariance(cov, rng.derive(0))
    return pooled_precision(sigma, sigma, int(meta["n1"]), int(meta["n2"]))
