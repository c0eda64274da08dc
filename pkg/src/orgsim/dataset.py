"""CSV dataset files and the manifest that ties them together.

Agents and decisions are written 1-based; everything in memory is 0-based.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import pandas as pd

from . import __version__
from .engine import GridResult

RECORDS = "records.csv"
TRANSFERS = "transfers.csv"
BELIEFS = "beliefs.csv"
MANIFEST = "manifest.json"
FORMAT = "orgsim-dataset/1"
TRANSFER_COLUMNS = ["config_id", "run", "period", "task", "seller", "buyer", "threshold", "signal", "bidder_rank"]


class DatasetError(ValueError):
    """Dataset files missing, modified, or inconsistent with their manifest."""


def record_columns(m_agents: int) -> list[str]:
    return (
        ["config_id", "run", "t", "K_kind", "alpha", "pair_prob", "tau_mode", "perf", "perf_norm"]
        + [f"eta_agent_{m + 1}" for m in range(m_agents)]
        + ["n_transfers"]
    )


def _fmt(x: float) -> str:
    return "" if x != x else repr(float(x))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_records(result: GridResult, path) -> int:
    m_max = max((c.m_agents for c in result.configs), default=0)
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(record_columns(m_max))
        for rec in result.records:
            c = rec.config
            head = [rec.config_id, rec.run]
            cell = [c.k_label, repr(float(c.alpha)), repr(float(c.pair_prob)), c.tau_label]
            pad = [""] * (m_max - c.m_agents)
            for t in range(c.horizon):
                w.writerow(
                    head + [t + 1] + cell
                    + [_fmt(rec.perf[t]), _fmt(rec.perf_norm[t])]
                    + [_fmt(e) for e in rec.eta[t]] + pad
                    + [int(rec.n_transfers[t])]
                )
                n += 1
    return n


def write_transfers(result: GridResult, path) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRANSFER_COLUMNS)
        for rec in result.records:
            for tr in rec.transfers:
                w.writerow([
                    rec.config_id, rec.run, tr.period, tr.task + 1, tr.seller + 1, tr.buyer + 1,
                    _fmt(tr.threshold), _fmt(tr.signal), tr.bidder_rank + 1,
                ])
                n += 1
    return n


def write_beliefs(result: GridResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config_id", "run", "t", "agent", "i", "j", "belief"])
        for rec in result.records:
            if rec.beliefs is None:
                continue
            for t, mats in enumerate(rec.beliefs, start=1):
                for m, mat in enumerate(mats):
                    n = mat.shape[0]
                    for i in range(n):
                        for j in range(n):
                            if i != j:
                                w.writerow([rec.config_id, rec.run, t, m + 1, i + 1, j + 1, _fmt(mat[i, j])])


def _manifest_hash(manifest: dict) -> str:
    body = {k: v for k, v in manifest.items() if k != "manifest_hash"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


def write_dataset(result: GridResult, out_dir, grid_config=None) -> dict:
    """Write records, transfers (and optional beliefs) plus ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_rows = write_records(result, out / RECORDS)
    n_transfers = write_transfers(result, out / TRANSFERS)
    files = [RECORDS, TRANSFERS]
    if any(c.record_beliefs for c in result.configs):
        write_beliefs(result, out / BELIEFS)
        files.append(BELIEFS)
    manifest = {
        "format": FORMAT,
        "code_version": __version__,
        "master_seed": grid_config.master_seed if grid_config else result.configs[0].master_seed,
        "config_hash": grid_config.config_hash if grid_config else None,
        "config": grid_config.canonical() if grid_config else None,
        "cells": [dict(config_id=c.config_id, **c.cell_params()) for c in result.configs],
        "rows": n_rows,
        "transfers": n_transfers,
        "files": {name: sha256_file(out / name) for name in files},
        "failed_runs": [
            {"config_id": f.config_id, "run": f.run, "error": f.error} for f in result.failures
        ],
        "complete": result.complete,
    }
    manifest["manifest_hash"] = _manifest_hash(manifest)
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def load_manifest(data_dir) -> dict:
    path = Path(data_dir) / MANIFEST
    if not path.exists():
        raise DatasetError(f"{data_dir}: no {MANIFEST}")
    manifest = json.loads(path.read_text())
    if manifest.get("format") != FORMAT:
        raise DatasetError(f"{path}: unsupported format {manifest.get('format')!r}")
    if manifest.get("manifest_hash") != _manifest_hash(manifest):
        raise DatasetError(f"{path}: manifest hash mismatch (manifest was edited)")
    return manifest


def load_dataset(data_dir) -> tuple[pd.DataFrame, pd.DataFrame, dict]:
    """Read a dataset after verifying every file against the manifest."""
    data_dir = Path(data_dir)
    manifest = load_manifest(data_dir)
    for name, digest in manifest["files"].items():
        path = data_dir / name
        if not path.exists():
            raise DatasetError(f"{path}: listed in manifest but missing")
        if sha256_file(path) != digest:
            raise DatasetError(f"{path}: content does not match manifest {manifest['manifest_hash'][:12]}")
    dtypes = {"config_id": str, "tau_mode": str, "K_kind": str}
    records = pd.read_csv(data_dir / RECORDS, dtype=dtypes, float_precision="round_trip")
    transfers = pd.read_csv(data_dir / TRANSFERS, dtype={"config_id": str}, float_precision="round_trip")
    return records, transfers, manifest
