"""Stable on-disk formats: datasets, reports, curves.

All writers are atomic (temp file in the target directory, then rename)
and all floating-point values go through Python's shortest round-trip
representation, so a load after a save reproduces arrays bit for bit.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .covmodels import TwoSampleData

SCHEMA_VERSION = 1


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj: dict, path: str | Path) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _matrix_to_list(a: np.ndarray) -> list[float]:
    return [float(v) for v in np.asarray(a, dtype=np.float64).ravel()]


def dataset_to_json(data: TwoSampleData, config: dict | None = None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "p": data.p,
        "n1": data.n1,
        "n2": data.n2,
        "x1": _matrix_to_list(data.x1),
        "x2": _matrix_to_list(data.x2),
        "truth": None if data.truth is None else _matrix_to_list(data.truth),
        "meta": data.meta,
    }
    if config is not None:
        doc["config"] = config
    return doc


def dataset_from_json(doc: dict) -> TwoSampleData:
    p = int(doc["p"])
    n1 = int(doc["n1"])
    n2 = int(doc["n2"])
    x1 = np.array(doc["x1"], dtype=np.float64).reshape(n1, p)
    x2 = np.array(doc["x2"], dtype=np.float64).reshape(n2, p)
    truth = doc.get("truth")
    if truth is not None:
        truth = np.array(truth, dtype=np.float64)
    return TwoSampleData(x1=x1, x2=x2, truth=truth, meta=doc.get("meta", {}))


def save_dataset(data: TwoSampleData, path: str | Path, config: dict | None = None) -> None:
    dump_json(dataset_to_json(data, config), path)


def save_dataset_csv(data: TwoSampleData, base: str | Path) -> None:
    """Write headerless matrices <base>.x1.csv / .x2.csv plus a truth sidecar."""
    base = str(base)
    for name, mat in (("x1", data.x1), ("x2", data.x2)):
        rows = "\n".join(",".join(repr(float(v)) for v in row) for row in mat)
        atomic_write_text(f"{base}.{name}.csv", rows + "\n")
    if data.truth is not None:
        rows = "\n".join(repr(float(v)) for v in data.truth)
        atomic_write_text(f"{base}.truth.csv", rows + "\n")


def load_dataset_csv(base: str | Path) -> TwoSampleData:
    base = str(base)
    x1 = np.loadtxt(f"{base}.x1.csv", delimiter=",", ndmin=2)
    x2 = np.loadtxt(f"{base}.x2.csv", delimiter=",", ndmin=2)
    truth_path = Path(f"{base}.truth.csv")
    truth = np.loadtxt(truth_path) if truth_path.exists() else None
    return TwoSampleData(x1=x1, x2=x2, truth=truth, meta={})


def load_dataset(path: str | Path) -> TwoSampleData:
    """Load a dataset: JSON when the path ends in .json, CSV base otherwise."""
    path = str(path)
    if path.endswith(".json"):
        with open(path) as handle:
            return dataset_from_json(json.load(handle))
    return load_dataset_csv(path)


def precision_to_json(omega: np.ndarray, method: str, params: dict, config: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "p": int(omega.shape[0]),
        "method": method,
        "params": params,
        "diag": _matrix_to_list(np.diagonal(omega)),
        "omega": _matrix_to_list(omega),
    }


def precision_from_json(doc: dict) -> tuple[np.ndarray, str, dict]:
    p = int(doc["p"])
    omega = np.array(doc["omega"], dtype=np.float64).reshape(p, p)
    return omega, doc.get("method", "known"), doc.get("params", {})


def report_csv(report_json: dict) -> str:
    """Flat per-replication companion: method,rep,fp,tp,fn,tn."""
    lines = ["method,rep,fp,tp,fn,tn"]
    for name in sorted(report_json["methods"]):
        block = report_json["methods"][name]
        for i, rep in enumerate(block["per_rep"]):
            lines.append(
                f"{name},{i},{rep['fp']},{rep['tp']},{rep['fn']},{rep['tn']}"
            )
    return "\n".join(lines) + "\n"


def phase_csv(curves) -> str:
    lines = ["beta,no_recovery,full_recovery,indep_no_recovery,indep_full_recovery"]
    for i in range(curves.beta_grid.shape[0]):
        lines.append(
            ",".join(
                repr(float(v))
                for v in (
                    curves.beta_grid[i],
                    curves.no_recovery_r[i],
                    curves.full_recovery_r[i],
                    curves.indep_no_recovery_r[i],
                    curves.indep_full_recovery_r[i],
                )
            )
        )
    return "\n".join(lines) + "\n"
