"""Aggregates over simulated datasets: efficiency, partial dependence, CDFs."""
from __future__ import annotations

from typing import Sequence

import numpy as np
import pandas as pd

from .exceptions import DomainError

GRID_VARS = ("t", "pair_prob", "alpha", "K_kind", "tau_mode")
CELL_VARS = ("config_id", "K_kind", "alpha", "pair_prob", "tau_mode")
SUMMARY_PERIODS = (1, 50, 100, 150)


def efficiency(allocation, matrix, m: int) -> float:
    """Share of agent ``m``'s decisions' dependencies that stay inside its area.

    Counts ordered pairs ``(n, j)``, ``n != j``, both owned by ``m`` with
    ``matrix.depends[n, j]``, divided by ``|area| * K``.
    """
    if matrix.k == 0:
        raise DomainError("efficiency is undefined for K=0")
    own = list(allocation.areas[m])
    if not own:
        raise DomainError(f"agent {m} owns no decisions")
    internal = int(matrix.depends[np.ix_(own, own)].sum()) - len(own)
    return internal / (len(own) * matrix.k)


def eta_columns(df: pd.DataFrame) -> list[str]:
    return sorted((c for c in df.columns if c.startswith("eta_agent_")), key=lambda c: int(c.rsplit("_", 1)[1]))


def _bootstrap_means(samples: np.ndarray, n_boot: int, rng) -> np.ndarray:
    """Bootstrap distribution of column means; ``samples`` is runs x outputs."""
    n = samples.shape[0]
    idx = rng.integers(0, n, size=(n_boot, n))
    return np.nanmean(samples[idx], axis=1)


def _interval(boot: np.ndarray, confidence: float):
    tail = (1.0 - confidence) / 2.0
    return np.quantile(boot, tail, axis=0), np.quantile(boot, 1.0 - tail, axis=0)


def partial_dependence(
    df: pd.DataFrame,
    scope: Sequence[str],
    response: str = "perf_norm",
    n_boot: int = 1000,
    confidence: float = 0.95,
    seed: int = 0,
) -> pd.DataFrame:
    """Empirical partial dependence of ``response`` on the ``scope`` variables.

    Response values are first averaged over runs within each full grid cell;
    each scope value then receives the unweighted mean over all complementary
    cells. The confidence band resamples run indices, which are shared by
    all cells of a grid.
    """
    scope = list(scope)
    grid = [v for v in GRID_VARS if v in df.columns]
    missing = [v for v in scope if v not in grid]
    if missing or not scope:
        raise DomainError(f"scope {scope} is not a subset of the simulated grid variables {grid}")
    if response not in df.columns:
        raise DomainError(f"response {response!r} not in dataset")

    cell_means = df.groupby(grid, sort=True)[response].mean().reset_index()
    marg = cell_means.groupby(scope, sort=True)[response].agg(["mean", "size"])
    marg = marg.rename(columns={"size": "n_cells"})

    per_run = df.groupby(scope + ["run"], sort=True)[response].mean().unstack(scope)
    per_run = per_run.reindex(columns=marg.index)
    values = per_run.to_numpy(dtype=float)
    if values.shape[0] > 1:
        boot = _bootstrap_means(values, n_boot, np.random.default_rng(seed))
        lo, hi = _interval(boot, confidence)
    else:
        lo = hi = marg["mean"].to_numpy()
    out = marg.reset_index()
    out["ci_lo"], out["ci_hi"] = lo, hi
    return out[scope + ["mean", "ci_lo", "ci_hi", "n_cells"]]


def efficiency_cdf(df: pd.DataFrame, grouping: Sequence[str] = ("alpha", "K_kind")) -> pd.DataFrame:
    """Empirical CDF of per-agent efficiency, one point per distinct value."""
    grouping = list(grouping)
    cols = eta_columns(df)
    long = df.melt(id_vars=grouping, value_vars=cols, value_name="eta")[grouping + ["eta"]]
    long = long.dropna(subset=["eta"])
    rows = []
    for key, grp in long.groupby(grouping, sort=True):
        key = key if isinstance(key, tuple) else (key,)
        vals, counts = np.unique(grp["eta"].to_numpy(), return_counts=True)
        cdf = np.cumsum(counts) / counts.sum()
        for v, c in zip(vals, cdf):
            rows.append((*key, float(v), float(c), int(counts.sum())))
    return pd.DataFrame(rows, columns=grouping + ["eta", "cdf", "n_samples"])


def summarize(
    df: pd.DataFrame,
    periods: Sequence[int] = SUMMARY_PERIODS,
    n_boot: int = 1000,
    confidence: float = 0.95,
    seed: int = 0,
) -> pd.DataFrame:
    """Per-cell statistics of normalized performance at selected periods."""
    rng = np.random.default_rng(seed)
    cell_vars = [c for c in CELL_VARS if c in df.columns]
    rows = []
    for key, cell in df.groupby(cell_vars, sort=True):
        transfers = cell.groupby("run")["n_transfers"].sum().mean()
        for t in periods:
            x = cell.loc[cell["t"] == t, "perf_norm"].to_numpy(dtype=float)
            if x.size == 0:
                continue
            mean = x.mean()
            if x.size > 1:
                std = x.std(ddof=1)
                lo, hi = _interval(_bootstrap_means(x[:, None], n_boot, rng)[:, 0], confidence)
            else:
                std, lo, hi = 0.0, mean, mean
            rows.append((*key, t, x.size, mean, std, float(lo), float(hi), float(transfers)))
    return pd.DataFrame(
        rows, columns=cell_vars + ["t", "n_runs", "mean", "std", "ci_lo", "ci_hi", "mean_transfers"]
    )
