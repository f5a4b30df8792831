"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The Monte Carlo
criteria (4, 5, 6) dominate the runtime; everything is single-threaded and
seeded, so the numbers below are reproducible bit for bit.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from datekit import (
    CovarianceSpec,
    SeededRng,
    SignalSpec,
    SimulationConfig,
    ar1_precision,
    build_covariance,
    cholesky,
    compute_statistics,
    excise_component,
    mfnr_bound_under_fdr,
    mvn_sample,
    omega_bounds,
    phase_boundaries,
    run_sweep,
    spd_inverse,
    transform_data,
)

from conftest import brute_force_excise, random_excision_problem, random_unit_diag_spd


def _report(num: int, ok: bool, detail: str):
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance] criterion {num:2d}: {status} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_01_diag_product_inequality():
    start = time.perf_counter()
    gen = SeededRng(101).generator()
    worst = np.inf
    for _ in range(200):
        p = int(gen.integers(2, 51))
        a = random_unit_diag_spd(gen, p)
        b = spd_inverse(a)
        worst = min(worst, float(np.min(np.diagonal(a) * np.diagonal(b))))
    elapsed = time.perf_counter() - start
    ok = worst >= 1.0 - 1e-10 and elapsed < 5.0
    _report(1, ok, f"min diag product {worst:.12f} over 200 draws, {elapsed:.2f}s")


def test_criterion_02_omega_bounds_ar1():
    start = time.perf_counter()
    omega6 = spd_inverse(
        build_covariance(CovarianceSpec("ar1", p=500, rho=0.6), SeededRng(0))
    )
    lo6, hi6 = omega_bounds(omega6)
    omega2 = spd_inverse(
        build_covariance(CovarianceSpec("ar1", p=500, rho=0.2), SeededRng(0))
    )
    _, hi2 = omega_bounds(omega2)
    elapsed = time.perf_counter() - start
    ok = (
        abs(lo6 - 1.5625) <= 1e-6
        and abs(hi6 - 2.125) <= 1e-6
        and abs(hi2 - 1.08) <= 1e-2
        and elapsed < 5.0
    )
    _report(
        2,
        ok,
        f"rho=0.6 bounds ({lo6:.7f}, {hi6:.7f}), rho=0.2 max {hi2:.4f}, {elapsed:.2f}s",
    )


def test_criterion_03_excision_matches_brute_force():
    start = time.perf_counter()
    gen = SeededRng(303).generator()
    mismatches = 0
    for _ in range(500):
        a, d, n, lam, delta = random_excision_problem(gen, max_m=8)
        comp = list(range(len(d)))
        signs, _ = excise_component(comp, a, d, n, lam, delta)
        expected = brute_force_excise(a, d, n, lam, delta)
        mismatches += not np.array_equal(signs, expected)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 30.0
    _report(3, ok, f"{mismatches}/500 mismatches vs brute force, {elapsed:.2f}s")


def _figure_regime(signal_r: float) -> SimulationConfig:
    return SimulationConfig(
        cov=CovarianceSpec("ar1", p=500, rho=0.6),
        signal=SignalSpec(beta=0.6, r=signal_r),
        n1=60,
        n2=60,
        alpha=0.05,
    )


def test_criterion_04_figure_regime_known_omega():
    start = time.perf_counter()
    report = run_sweep(_figure_regime(1.0), ["date-known", "bh"], reps=100, base_seed=1)
    elapsed = time.perf_counter() - start
    date = report.methods["date-known"]
    bh = report.methods["bh"]
    ok = (
        date.mfdr <= 0.08
        and date.atp >= 9.0
        and date.atp >= bh.atp
        and date.mfnr <= bh.mfnr
        and elapsed < 600.0
    )
    _report(
        4,
        ok,
        f"DATE mFDR {date.mfdr:.4f} ATP {date.atp:.2f} mFNR {date.mfnr:.5f} | "
        f"BH ATP {bh.atp:.2f} mFNR {bh.mfnr:.5f}, {elapsed:.1f}s",
    )


def test_criterion_05_threshold_insensitivity_band():
    start = time.perf_counter()
    results = []
    for s in (0.25, 0.5):
        for q in (0.65, 0.9):
            sim = SimulationConfig(
                cov=CovarianceSpec("ar1", p=500, rho=0.6),
                signal=SignalSpec(beta=0.6, r=0.8),
                n1=60,
                n2=60,
                alpha=0.05,
                s=s,
                q=q,
            )
            rep = run_sweep(sim, ["date-known"], reps=100, base_seed=5)
            block = rep.methods["date-known"]
            results.append((s, q, block.mfdr, block.mfnr))
    elapsed = time.perf_counter() - start
    ok = all(m <= 0.08 and f <= 0.012 for _, _, m, f in results) and elapsed < 2400.0
    detail = "; ".join(f"s={s} q={q}: mFDR {m:.4f} mFNR {f:.5f}" for s, q, m, f in results)
    _report(5, ok, f"{detail}, {elapsed:.1f}s")


def test_criterion_06_estimated_omega_parity():
    start = time.perf_counter()
    report = run_sweep(
        _figure_regime(1.0), ["date-known", "date-banded"], reps=100, base_seed=1
    )
    elapsed = time.perf_counter() - start
    known = report.methods["date-known"]
    banded = report.methods["date-banded"]
    ok = (
        abs(banded.atp - known.atp) <= 0.15 * known.atp
        and banded.mfdr <= 0.10
        and not banded.errors
    )
    _report(
        6,
        ok,
        f"known ATP {known.atp:.2f} vs banded ATP {banded.atp:.2f} "
        f"(|diff| {abs(banded.atp - known.atp) / known.atp:.1%}), "
        f"banded mFDR {banded.mfdr:.4f}, {elapsed:.1f}s",
    )


def test_criterion_07_bh_calibration_under_independence():
    sim = SimulationConfig(
        cov=CovarianceSpec("ar1", p=500, rho=0.0),
        signal=SignalSpec(beta=0.6, r=1.2),
        n1=60,
        n2=60,
        alpha=0.05,
    )
    report = run_sweep(sim, ["bh"], reps=100, base_seed=7)
    mfdr = report.methods["bh"].mfdr
    ok = mfdr <= 0.08
    _report(7, ok, f"BH mFDR {mfdr:.4f} at alpha=0.05 under independence")


def test_criterion_08_null_statistic_calibration():
    start = time.perf_counter()
    p = 100
    sigma = build_covariance(CovarianceSpec("ar1", p=p, rho=0.6), SeededRng(0))
    lower = cholesky(sigma)
    omega = ar1_precision(0.6, p)
    diag = np.diagonal(omega)
    base = SeededRng(808)
    total = 0.0
    reps = 2000
    for i in range(reps):
        r = base.derive(i)
        x1 = mvn_sample(np.zeros(p), lower, 60, r.derive(0))
        x2 = mvn_sample(np.zeros(p), lower, 60, r.derive(1))
        t = compute_statistics(
            transform_data(x1, omega), transform_data(x2, omega), diag
        )
        total += float(t.mean())
    mean_t = total / reps
    elapsed = time.perf_counter() - start
    ok = abs(mean_t - 1.0) <= 0.1
    _report(8, ok, f"pooled null mean of T {mean_t:.4f} over {reps} reps, {elapsed:.1f}s")


def test_criterion_09_phase_curves():
    grid = np.linspace(0.51, 0.99, 49)
    indep = phase_boundaries(1.0, 1.0, grid)
    exact_no = np.max(np.abs(indep.no_recovery_r - grid))
    exact_full = np.max(
        np.abs(indep.full_recovery_r - (1.0 + np.sqrt(1.0 - grid)) ** 2)
    )
    dep = phase_boundaries(1.5625, 2.125, grid)
    ordering = bool(
        np.all(dep.no_recovery_r < indep.no_recovery_r)
        and np.all(dep.full_recovery_r < indep.full_recovery_r)
    )
    ok = exact_no <= 1e-12 and exact_full <= 1e-12 and ordering
    _report(
        9,
        ok,
        f"independent-case max errors ({exact_no:.1e}, {exact_full:.1e}), "
        f"dependent curves strictly below: {ordering}",
    )


def _simulate_cli(tmp_path, threads: int):
    out = tmp_path / "report.json"
    args = [
        sys.executable,
        "-m",
        "datekit.cli",
        "simulate",
        "--model",
        "ar1",
        "--rho",
        "0.6",
        "--p",
        "40",
        "--n1",
        "20",
        "--n2",
        "20",
        "--beta",
        "0.6",
        "--r",
        "1.5",
        "--reps",
        "4",
        "--methods",
        "date-known,date-banded,bh",
        "--cv-splits",
        "10",
        "--seed",
        "42",
        "--threads",
        str(threads),
        "--out",
        str(out),
    ]
    proc = subprocess.run(args, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out.read_text()


def test_criterion_10_determinism(tmp_path):
    # identical flags twice, then a third run varying only --threads
    first = _simulate_cli(tmp_path, threads=1)
    second = _simulate_cli(tmp_path, threads=1)
    threaded = _simulate_cli(tmp_path, threads=4)

    def strip_runtime(text: str) -> str:
        doc = json.loads(text)
        doc.pop("runtime")  # wall time and worker count live here
        return json.dumps(doc, indent=2, sort_keys=True)

    repeat_identical = strip_runtime(first) == strip_runtime(second)
    thread_invariant = strip_runtime(first) == strip_runtime(threaded)
    ok = repeat_identical and thread_invariant
    _report(
        10,
        ok,
        f"repeat byte-identical (minus wall time): {repeat_identical}, "
        f"threads 1 vs 4 identical: {thread_invariant}",
    )


def test_criterion_11_tuned_weight_identity():
    gen = SeededRng(1111).generator()
    worst = 0.0
    for _ in range(100):
        beta = float(gen.uniform(0.51, 0.99))
        r = float(gen.uniform(0.1, 3.0))
        w_lo = float(gen.uniform(1.0, 3.0))
        w_hi = w_lo + float(gen.uniform(0.0, 2.0))
        p = int(gen.integers(50, 100000))
        out = mfnr_bound_under_fdr(0.05, beta, r, w_lo, w_hi, p, g=0.0)
        expected = (math.sqrt(w_lo * r) - math.sqrt(beta)) ** 2
        worst = max(worst, abs(out.lambda_alpha - expected))
    ok = worst <= 1e-12
    _report(11, ok, f"max |Lambda(g=0) - closed form| = {worst:.2e} over 100 points")
