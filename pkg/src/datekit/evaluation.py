"""Scoring, Monte Carlo harness, phase boundaries, and bound evaluators.

The harness regenerates an independent dataset per replication from a
derived seed (signal positions included), runs every requested method on
the same dataset, and aggregates marginal error rates by the
ratio-of-means convention.  Results are a pure function of the base seed
and are invariant to the worker-thread count because replications are
keyed by index.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import bh_select, two_sample_t
from .covmodels import (
    CovarianceSpec,
    SignalSpec,
    TwoSampleData,
    generate_dataset,
    known_precision_from_meta,
)
from .date import DateConfig, RecoveryResult, run_date
from .errors import InvalidDomain
from .precision import CvConfig, PrecisionEstimate, estimate_precision
from .rng import SeededRng

METHOD_NAMES = ("date-known", "date-banded", "date-threshcov", "bh")


@dataclass(frozen=True)
class ConfusionCounts:
    """Support-based confusion cells for one replication.

    ``sign_correct_tp`` is a diagnostic: the subset of true positives whose
    recovered sign matches the truth.  It is not folded into ``tp``.
    """

    fp: int
    tp: int
    fn: int
    tn: int
    sign_correct_tp: int = 0

    @property
    def total(self) -> int:
        return self.fp + self.tp + self.fn + self.tn

    def to_json(self) -> dict:
        return {
            "fp": self.fp,
            "tp": self.tp,
            "fn": self.fn,
            "tn": self.tn,
            "sign_correct_tp": self.sign_correct_tp,
        }


def confusion(truth: np.ndarray, decisions: np.ndarray) -> ConfusionCounts:
    """Count support agreement between the truth and a decision vector."""
    truth = np.asarray(truth)
    decisions = np.asarray(decisions)
    if truth.shape != decisions.shape:
        raise ValueError("truth and decisions must have equal length")
    t_nz = truth != 0
    d_nz = decisions != 0
    tp = int(np.count_nonzero(t_nz & d_nz))
    fp = int(np.count_nonzero(~t_nz & d_nz))
    fn = int(np.count_nonzero(t_nz & ~d_nz))
    tn = int(np.count_nonzero(~t_nz & ~d_nz))
    sign_ok = int(np.count_nonzero(t_nz & d_nz & (np.sign(truth) == np.sign(decisions))))
    return ConfusionCounts(fp=fp, tp=tp, fn=fn, tn=tn, sign_correct_tp=sign_ok)


def aggregate(reps: Sequence[ConfusionCounts]) -> tuple[float, float, float]:
    """(mFDR, mFNR, ATP) by the ratio-of-means convention; 0/0 counts as 0."""
    if len(reps) == 0:
        raise ValueError("need at least one replication")
    fp = float(np.mean([c.fp for c in reps]))
    tp = float(np.mean([c.tp for c in reps]))
    fn = float(np.mean([c.fn for c in reps]))
    tn = float(np.mean([c.tn for c in reps]))
    mfdr = fp / (fp + tp) if fp + tp > 0 else 0.0
    mfnr = fn / (fn + tn) if fn + tn > 0 else 0.0
    return mfdr, mfnr, tp


@dataclass(frozen=True)
class SimulationConfig:
    """Everything the harness needs to regenerate and score one setting."""

    cov: CovarianceSpec
    signal: SignalSpec
    n1: int
    n2: int
    alpha: float = 0.05
    s: float = 0.4
    q: float = 0.8
    component_cap: int = 12
    cv_splits: int = 50

    def to_json(self) -> dict:
        return {
            "cov": self.cov.to_json(),
            "beta": self.signal.beta,
            "r": self.signal.r,
            "mag_interval_multipliers": list(self.signal.mag_interval_multipliers),
            "n1": self.n1,
            "n2": self.n2,
            "alpha": self.alpha,
            "s": self.s,
            "q": self.q,
            "component_cap": self.component_cap,
            "cv_splits": self.cv_splits,
        }


@dataclass
class MethodReport:
    per_rep: list[ConfusionCounts] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    mfdr: float = 0.0
    mfnr: float = 0.0
    atp: float = 0.0

    def to_json(self) -> dict:
        return {
            "per_rep": [c.to_json() for c in self.per_rep],
            "errors": self.errors,
            "mfdr": self.mfdr,
            "mfnr": self.mfnr,
            "atp": self.atp,
        }


@dataclass
class SimulationReport:
    config: dict
    seed: int
    reps: int
    methods: dict[str, MethodReport]
    wall_time_s: float = 0.0
    threads: int = 1

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "config": self.config,
            "seed": self.seed,
            "reps": self.reps,
            "methods": {k: v.to_json() for k, v in self.methods.items()},
            "runtime": {"wall_time_s": self.wall_time_s, "threads": self.threads},
        }


def _date_decisions(result: RecoveryResult) -> np.ndarray:
    return result.decisions


def run_method(
    name: str,
    sim: SimulationConfig,
    data: TwoSampleData,
    rng: SeededRng,
) -> np.ndarray:
    """Produce a signed decision vector for one method on one dataset."""
    if name == "bh":
        tr = two_sample_t(data.x1, data.x2)
        selected = bh_select(tr.p_values, sim.alpha)
        decisions = np.zeros(data.p, dtype=np.int8)
        decisions[selected] = np.where(tr.t_stats[selected] < 0, -1, 1)
        return decisions
    if name == "date-known":
        omega = PrecisionEstimate(
            omega=known_precision_from_meta(data.meta), method="known"
        )
        cfg = DateConfig(
            s=sim.s,
            q=sim.q,
            alpha=sim.alpha,
            tuning_mode="oracle",
            oracle_beta=sim.signal.beta,
            oracle_r=sim.signal.r,
            component_cap=sim.component_cap,
        )
        return _date_decisions(run_date(data, omega, cfg))
    if name in ("date-banded", "date-threshcov"):
        cv = CvConfig(rng=rng, n_splits=sim.cv_splits)
        omega = estimate_precision(
            data, "banded" if name == "date-banded" else "threshcov", cv
        )
        cfg = DateConfig(
            s=sim.s,
            q=sim.q,
            alpha=sim.alpha,
            tuning_mode="estimated",
            component_cap=sim.component_cap,
        )
        return _date_decisions(run_date(data, omega, cfg))
    raise ValueError(f"unknown method {name!r}")


def _run_replication(
    sim: SimulationConfig, methods: Sequence[str], rep_rng: SeededRng
) -> dict:
    try:
        data = generate_dataset(sim.cov, sim.signal, sim.n1, sim.n2, rep_rng.derive(0))
    except Exception as exc:  # recorded against every method, not dropped
        return {name: exc for name in methods}
    out: dict = {}
    for name in methods:
        stream = rep_rng.derive(1 + METHOD_NAMES.index(name))
        try:
            decisions = run_method(name, sim, data, stream)
            out[name] = confusion(data.truth, decisions)
        except Exception as exc:
            out[name] = exc
    return out


def run_sweep(
    sim: SimulationConfig,
    methods: Sequence[str],
    reps: int,
    base_seed: int,
    threads: int = 1,
) -> SimulationReport:
    """Score every method over ``reps`` independently regenerated datasets.

    Signal positions are resampled each replication.  The report is a pure
    function of (sim, methods, reps, base_seed); worker threads only change
    wall time.
    """
    for name in methods:
        if name not in METHOD_NAMES:
            raise ValueError(f"unknown method {name!r}")
    if reps < 1:
        raise ValueError("reps must be at least 1")
    base = SeededRng(base_seed)
    start = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(
                    lambda i: _run_replication(sim, methods, base.derive(i)),
                    range(reps),
                )
            )
    else:
        results = [_run_replication(sim, methods, base.derive(i)) for i in range(reps)]
    wall = time.perf_counter() - start

    report = SimulationReport(
        config=sim.to_json(),
        seed=base_seed,
        reps=reps,
        methods={},
        wall_time_s=wall,
        threads=threads,
    )
    for name in methods:
        method_report = MethodReport()
        for i, rep in enumerate(results):
            value = rep[name]
            if isinstance(value, Exception):
                method_report.errors.append({"rep": i, "error": str(value)})
            else:
                method_report.per_rep.append(value)
        if method_report.per_rep:
            mfdr, mfnr, atp = aggregate(method_report.per_rep)
            method_report.mfdr = mfdr
            method_report.mfnr = mfnr
            method_report.atp = atp
        report.methods[name] = method_report
    return report


@dataclass(frozen=True)
class PhaseCurves:
    """Recovery-region boundaries over a sparsity grid, with and without
    the dependence gain."""

    beta_grid: np.ndarray
    no_recovery_r: np.ndarray
    full_recovery_r: np.ndarray
    indep_no_recovery_r: np.ndarray
    indep_full_recovery_r: np.ndarray


def phase_boundaries(
    omega_lower: float, omega_bar: float, beta_grid: np.ndarray
) -> PhaseCurves:
    """Boundary curves r(beta) separating no/partial/full recovery."""
    if not 1.0 <= omega_lower <= omega_bar:
        raise InvalidDomain("need 1 <= omega_lower <= omega_bar")
    beta = np.asarray(beta_grid, dtype=np.float64)
    if np.any((beta <= 0.0) | (beta >= 1.0)):
        raise InvalidDomain("beta grid must lie in (0, 1)")
    indep_no = beta.copy()
    indep_full = (1.0 + np.sqrt(1.0 - beta)) ** 2
    return PhaseCurves(
        beta_grid=beta,
        no_recovery_r=indep_no / omega_bar,
        full_recovery_r=indep_full / omega_lower,
        indep_no_recovery_r=indep_no,
        indep_full_recovery_r=indep_full,
    )


@dataclass(frozen=True)
class RiskBound:
    """One branch of the universal weighted-risk lower bound.

    ``value`` is the bound with the slowly varying factor set to 1, so it
    is meaningful at exponent level only.
    """

    region: str
    exponent: Optional[float]
    value: Optional[float]


def risk_lower_bound(
    lam: float,
    beta: float,
    r: float,
    omega_lower: float,
    omega_bar: float,
    p: int,
) -> RiskBound:
    """Evaluate the weighted-risk lower bound at one parameter point.

    Branch selection follows the strict inequalities of the bound; points
    in the gaps between branches return region "indeterminate".
    """
    if r <= 0 or not 1.0 <= omega_lower <= omega_bar:
        raise InvalidDomain("need r > 0 and 1 <= omega_lower <= omega_bar")
    if r < (beta - lam) / omega_bar:
        exponent = 1.0 - beta
        region = "no_recovery"
    elif r < (lam - beta) / omega_bar:
        exponent = 1.0 - lam
        region = "fp_dominated"
    elif -r < (lam - beta) / omega_lower < r:
        exponent = 1.0 - beta - (omega_bar * r - beta + lam) ** 2 / (
            4.0 * omega_bar * r
        )
        region = "interior"
    else:
        return RiskBound(region="indeterminate", exponent=None, value=None)
    return RiskBound(region=region, exponent=exponent, value=p**exponent)


def log_level_penalty(alpha: float, beta: float, p: int) -> float:
    """The alpha-dependent log-scale correction entering the tuned bound."""
    if not 0 < alpha < 1:
        raise InvalidDomain("alpha must lie in (0, 1)")
    log_p = math.log(p)
    return math.log(alpha / (1.0 - alpha) * math.sqrt(4.0 * math.pi * beta * log_p)) / log_p


@dataclass(frozen=True)
class FdrTunedBound:
    lambda_alpha: float
    exponent: float
    value: float


def mfnr_bound_under_fdr(
    alpha: float,
    beta: float,
    r: float,
    omega_lower: float,
    omega_bar: float,
    p: int,
    g: Optional[float] = None,
) -> FdrTunedBound:
    """Weight choice and mFNR lower bound under an mFDR-at-alpha constraint.

    ``g`` defaults to :func:`log_level_penalty`; forcing ``g = 0`` recovers
    the unconstrained weight ``(sqrt(omega_lower r) - sqrt(beta))**2``.
    Raises :class:`InvalidDomain` when the radicand ``beta - g`` is
    negative (reported rather than clamped; this evaluator is diagnostic).
    """
    if r <= 0 or not 1.0 <= omega_lower <= omega_bar:
        raise InvalidDomain("need r > 0 and 1 <= omega_lower <= omega_bar")
    if g is None:
        g = log_level_penalty(alpha, beta, p)
    if beta - g < 0:
        raise InvalidDomain("radicand beta - g is negative")
    wr = omega_lower * r
    lambda_alpha = wr + beta - 2.0 * math.sqrt(wr * (beta - g))
    exponent = -beta - (math.sqrt(omega_bar * r) - math.sqrt(beta - g)) ** 2
    return FdrTunedBound(
        lambda_alpha=lambda_alpha, exponent=exponent, value=p**exponent
    )
