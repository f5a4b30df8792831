"""Command-line front end.

Subcommands: ``gen`` (synthetic dataset), ``estimate-omega`` (precision
estimation), ``recover`` (single-shot recovery), ``bh`` (baseline),
``simulate`` (Monte Carlo sweep), ``phase`` (boundary curves).  Exit codes:
0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io
from .covmodels import CovarianceSpec, SignalSpec, generate_dataset, known_precision_from_meta
from .baselines import bh_select, two_sample_t
from .date import DateConfig, run_date
from .errors import DatekitError
from .evaluation import (
    METHOD_NAMES,
    SimulationConfig,
    phase_boundaries,
    run_sweep,
)
from .precision import CvConfig, PrecisionEstimate, banded_cholesky_precision, estimate_precision, invert_regularized, pooled_residuals, select_band, select_threshold, thresholded_covariance
from .rng import SeededRng

_MODEL_CHOICES = ("ar1", "block", "penta", "randsparse")


def _add_model_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--model", required=True, choices=_MODEL_CHOICES)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--rho", type=float, default=0.5, help="ar1 correlation")
    sp.add_argument("--within-corr", type=float, default=0.6, help="block correlation")
    sp.add_argument("--block-size", type=int, default=2)
    sp.add_argument("--d1", type=float, default=0.5, help="penta |i-j|=1 value")
    sp.add_argument("--d2", type=float, default=0.2, help="penta |i-j|=2 value")
    sp.add_argument("--mag-low", type=float, default=1.0, help="randsparse magnitude low")
    sp.add_argument("--mag-high", type=float, default=2.0, help="randsparse magnitude high")


def _add_signal_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--n1", type=int, required=True)
    sp.add_argument("--n2", type=int, required=True)
    sp.add_argument("--beta", type=float, required=True, help="sparsity exponent in (1/2, 1)")
    sp.add_argument("--r", type=float, required=True, help="signal strength, positive")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="datekit",
        description="Sparse two-sample signal recovery under dependence",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic two-sample dataset")
    _add_model_args(gen)
    _add_signal_args(gen)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--csv", action="store_true", help="write CSV matrices instead of JSON")

    est = sub.add_parser("estimate-omega", help="estimate the precision matrix from a dataset")
    est.add_argument("--data", required=True)
    est.add_argument("--method", required=True, choices=("banded", "threshcov"))
    est.add_argument("--tau", type=int, default=None, help="fixed band (skips cross-validation)")
    est.add_argument("--thresh", type=float, default=None, help="fixed threshold (skips cross-validation)")
    est.add_argument("--cv-splits", type=int, default=50)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--out", required=True)

    rec = sub.add_parser("recover", help="run the recovery procedure on a dataset")
    rec.add_argument("--data", required=True)
    rec.add_argument(
        "--omega",
        required=True,
        help="known | banded | threshcov | path to an estimate-omega output",
    )
    rec.add_argument("--s", type=float, default=0.4)
    rec.add_argument("--q", type=float, default=0.8)
    rec.add_argument("--alpha", type=float, default=0.05)
    rec.add_argument("--tuning", choices=("estimated", "oracle"), default="estimated")
    rec.add_argument("--beta", type=float, default=None, help="oracle tuning sparsity")
    rec.add_argument("--r", type=float, default=None, help="oracle tuning strength")
    rec.add_argument("--component-cap", type=int, default=12)
    rec.add_argument("--cv-splits", type=int, default=50)
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--out", required=True)

    bh = sub.add_parser("bh", help="Benjamini-Hochberg baseline on two-sample t tests")
    bh.add_argument("--data", required=True)
    bh.add_argument("--alpha", type=float, default=0.05)
    bh.add_argument("--out", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo sweep over replications")
    _add_model_args(sim)
    _add_signal_args(sim)
    sim.add_argument("--alpha", type=float, default=0.05)
    sim.add_argument("--s", type=float, default=0.4)
    sim.add_argument("--q", type=float, default=0.8)
    sim.add_argument("--reps", type=int, default=100)
    sim.add_argument(
        "--methods",
        default="date-known,bh",
        help="comma-separated subset of " + ",".join(METHOD_NAMES),
    )
    sim.add_argument("--cv-splits", type=int, default=50)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--threads", type=int, default=None, help="defaults to DATEKIT_THREADS or 1")
    sim.add_argument("--out", required=True)
    sim.add_argument("--csv-out", default=None)

    ph = sub.add_parser("phase", help="emit recovery-boundary curves as CSV")
    ph.add_argument("--omega-lower", type=float, required=True)
    ph.add_argument("--omega-bar", type=float, required=True)
    ph.add_argument("--beta-min", type=float, default=0.51)
    ph.add_argument("--beta-max", type=float, default=0.99)
    ph.add_argument("--beta-steps", type=int, default=49)
    ph.add_argument("--out", required=True)
    return parser


def _validate_model(parser: argparse.ArgumentParser, args) -> CovarianceSpec:
    if args.p < 2:
        parser.error("--p must be at least 2")
    if args.model == "ar1" and not -1.0 < args.rho < 1.0:
        parser.error("--rho must be in (-1, 1)")
    if args.model == "block":
        if not -1.0 < args.within_corr < 1.0:
            parser.error("--within-corr must be in (-1, 1)")
        if args.block_size < 1:
            parser.error("--block-size must be positive")
    if args.model == "randsparse" and not 0 < args.mag_low <= args.mag_high:
        parser.error("--mag-low/--mag-high must satisfy 0 < low <= high")
    return CovarianceSpec(
        kind=args.model,
        p=args.p,
        rho=args.rho,
        within_corr=args.within_corr,
        block_size=args.block_size,
        d1=args.d1,
        d2=args.d2,
        mag_low=args.mag_low,
        mag_high=args.mag_high,
    )


def _validate_signal(parser: argparse.ArgumentParser, args) -> SignalSpec:
    if not 0.5 < args.beta < 1.0:
        parser.error("--beta must lie in (1/2, 1)")
    if args.r <= 0:
        parser.error("--r must be positive")
    if args.n1 < 2 or args.n2 < 2:
        parser.error("--n1 and --n2 must be at least 2")
    return SignalSpec(beta=args.beta, r=args.r)


def _model_config_echo(args) -> dict:
    cov = {"model": args.model, "p": args.p}
    if args.model == "ar1":
        cov["rho"] = args.rho
    elif args.model == "block":
        cov["within_corr"] = args.within_corr
        cov["block_size"] = args.block_size
    elif args.model == "penta":
        cov["d1"] = args.d1
        cov["d2"] = args.d2
    else:
        cov["mag_low"] = args.mag_low
        cov["mag_high"] = args.mag_high
    return cov


def _cmd_gen(parser, args) -> int:
    cov = _validate_model(parser, args)
    sig = _validate_signal(parser, args)
    config = {
        "command": "gen",
        **_model_config_echo(args),
        "n1": args.n1,
        "n2": args.n2,
        "beta": args.beta,
        "r": args.r,
        "seed": args.seed,
        "csv": bool(args.csv),
        "out": args.out,
    }
    data = generate_dataset(cov, sig, args.n1, args.n2, SeededRng(args.seed))
    if args.csv:
        base = args.out[:-5] if args.out.endswith(".json") else args.out
        io.save_dataset_csv(data, base)
    else:
        io.save_dataset(data, args.out, config=config)
    return 0


def _cmd_estimate_omega(parser, args) -> int:
    if args.cv_splits < 1:
        parser.error("--cv-splits must be at least 1")
    data = io.load_dataset(args.data)
    residuals = pooled_residuals(data)
    cv = CvConfig(rng=SeededRng(args.seed), n_splits=args.cv_splits)
    if args.method == "banded":
        tau = args.tau if args.tau is not None else select_band(residuals, cv)
        est = banded_cholesky_precision(residuals, tau)
        est.params["selected_by"] = "flag" if args.tau is not None else "cv"
    else:
        m = args.thresh if args.thresh is not None else select_threshold(residuals, cv)
        est = invert_regularized(thresholded_covariance(residuals, float(m)), float(m))
        est.params["selected_by"] = "flag" if args.thresh is not None else "cv"
    config = {
        "command": "estimate-omega",
        "data": args.data,
        "method": args.method,
        "tau": args.tau,
        "thresh": args.thresh,
        "cv_splits": args.cv_splits,
        "seed": args.seed,
        "out": args.out,
    }
    io.dump_json(io.precision_to_json(est.omega, est.method, est.params, config), args.out)
    return 0


def _resolve_omega(parser, args, data) -> PrecisionEstimate:
    choice = args.omega
    if choice == "known":
        if "rng" not in data.meta:
            raise DatekitError("dataset carries no generation meta; cannot rebuild the known matrix")
        return PrecisionEstimate(omega=known_precision_from_meta(data.meta), method="known")
    if choice in ("banded", "threshcov"):
        cv = CvConfig(rng=SeededRng(args.seed), n_splits=args.cv_splits)
        return estimate_precision(data, choice, cv)
    with open(choice) as handle:
        omega, method, params = io.precision_from_json(json.load(handle))
    return PrecisionEstimate(omega=omega, method=method, params=params)


def _cmd_recover(parser, args) -> int:
    if not 0 < args.alpha < 1:
        parser.error("--alpha must lie in (0, 1)")
    if args.s <= 0:
        parser.error("--s must be positive")
    data = io.load_dataset(args.data)
    omega = _resolve_omega(parser, args, data)
    if args.tuning == "oracle":
        beta = args.beta if args.beta is not None else data.meta.get("beta")
        r = args.r if args.r is not None else data.meta.get("r")
        if beta is None or r is None:
            parser.error("--tuning oracle needs --beta and --r (or dataset meta)")
        cfg = DateConfig(
            s=args.s, q=args.q, alpha=args.alpha, tuning_mode="oracle",
            oracle_beta=float(beta), oracle_r=float(r),
            component_cap=args.component_cap,
        )
    else:
        if args.q <= args.s:
            parser.error("--q must exceed --s for estimated tuning")
        cfg = DateConfig(
            s=args.s, q=args.q, alpha=args.alpha, tuning_mode="estimated",
            component_cap=args.component_cap,
        )
    result = run_date(data, omega, cfg)
    config = {
        "command": "recover",
        "data": args.data,
        "omega": args.omega,
        "s": args.s,
        "q": args.q,
        "alpha": args.alpha,
        "tuning": args.tuning,
        "beta": args.beta,
        "r": args.r,
        "component_cap": args.component_cap,
        "cv_splits": args.cv_splits,
        "seed": args.seed,
        "out": args.out,
    }
    doc = {
        "schema_version": io.SCHEMA_VERSION,
        "config": config,
        "p": data.p,
        "decisions": [int(v) for v in result.decisions],
        "estimate": [float(v) for v in result.estimate],
        "t_stats": [float(v) for v in result.t_stats],
        "survivors": [int(v) for v in result.survivors],
        "components": [[int(i) for i in comp] for comp in result.components],
        "tuning": None if result.tuning is None else result.tuning.to_json(),
        "flags": result.flags,
        "omega_method": omega.method,
    }
    io.dump_json(doc, args.out)
    return 0


def _cmd_bh(parser, args) -> int:
    if not 0 < args.alpha < 1:
        parser.error("--alpha must lie in (0, 1)")
    data = io.load_dataset(args.data)
    tr = two_sample_t(data.x1, data.x2)
    selected = bh_select(tr.p_values, args.alpha)
    decisions = np.zeros(data.p, dtype=int)
    decisions[selected] = np.where(tr.t_stats[selected] < 0, -1, 1)
    doc = {
        "schema_version": io.SCHEMA_VERSION,
        "config": {
            "command": "bh",
            "data": args.data,
            "alpha": args.alpha,
            "out": args.out,
        },
        "p": data.p,
        "selected": [int(v) for v in selected],
        "decisions": [int(v) for v in decisions],
        "t_stats": [float(v) for v in tr.t_stats],
        "p_values": [float(v) for v in tr.p_values],
        "df": tr.df,
    }
    io.dump_json(doc, args.out)
    return 0


def _cmd_simulate(parser, args) -> int:
    cov = _validate_model(parser, args)
    sig = _validate_signal(parser, args)
    if not 0 < args.alpha < 1:
        parser.error("--alpha must lie in (0, 1)")
    if args.reps < 1:
        parser.error("--reps must be at least 1")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHOD_NAMES:
            parser.error(f"--methods contains unknown method {m!r}")
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("DATEKIT_THREADS", "1"))
    if threads < 1:
        parser.error("--threads must be at least 1")
    sim = SimulationConfig(
        cov=cov,
        signal=sig,
        n1=args.n1,
        n2=args.n2,
        alpha=args.alpha,
        s=args.s,
        q=args.q,
        cv_splits=args.cv_splits,
    )
    report = run_sweep(sim, methods, args.reps, args.seed, threads=threads)
    doc = report.to_json()
    doc["config"] = {
        "command": "simulate",
        **_model_config_echo(args),
        "n1": args.n1,
        "n2": args.n2,
        "beta": args.beta,
        "r": args.r,
        "alpha": args.alpha,
        "s": args.s,
        "q": args.q,
        "reps": args.reps,
        "methods": methods,
        "cv_splits": args.cv_splits,
        "seed": args.seed,
        "out": args.out,
    }
    io.dump_json(doc, args.out)
    if args.csv_out:
        io.atomic_write_text(args.csv_out, io.report_csv(doc))
    return 0


def _cmd_phase(parser, args) -> int:
    if not 1.0 <= args.omega_lower <= args.omega_bar:
        parser.error("--omega-lower/--omega-bar must satisfy 1 <= lower <= bar")
    if not (0.0 < args.beta_min < args.beta_max < 1.0):
        parser.error("--beta-min/--beta-max must satisfy 0 < min < max < 1")
    if args.beta_steps < 2:
        parser.error("--beta-steps must be at least 2")
    grid = np.linspace(args.beta_min, args.beta_max, args.beta_steps)
    curves = phase_boundaries(args.omega_lower, args.omega_bar, grid)
    io.atomic_write_text(args.out, io.phase_csv(curves))
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "estimate-omega": _cmd_estimate_omega,
    "recover": _cmd_recover,
    "bh": _cmd_bh,
    "simulate": _cmd_simulate,
    "phase": _cmd_phase,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](parser, args)
    except (DatekitError, OSError, ValueError) as exc:
        print(f"datekit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
