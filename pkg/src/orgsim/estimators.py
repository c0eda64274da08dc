"""scikit-learn style wrappers around the simulator and the analyses.

Hyperparameters are plain constructor arguments (so ``get_params`` /
``set_params`` / ``clone`` work); fitted results end in an underscore.
"""
from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from . import analysis
from ._validation import check_dataset, check_is_fitted, check_positive_int, check_probability
from .engine import GridResult, SimConfig, run_grid


def records_frame(result: GridResult) -> pd.DataFrame:
    """In-memory equivalent of ``records.csv`` (agents 1-based)."""
    frames = []
    for rec in result.records:
        c = rec.config
        T = c.horizon
        data = {
            "config_id": rec.config_id,
            "run": rec.run,
            "t": np.arange(1, T + 1),
            "K_kind": c.k_label,
            "alpha": float(c.alpha),
            "pair_prob": float(c.pair_prob),
            "tau_mode": c.tau_label,
            "perf": rec.perf,
            "perf_norm": rec.perf_norm,
        }
        for m in range(c.m_agents):
            data[f"eta_agent_{m + 1}"] = rec.eta[:, m]
        data["n_transfers"] = rec.n_transfers
        frames.append(pd.DataFrame(data))
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def transfers_frame(result: GridResult) -> pd.DataFrame:
    rows = [
        {"config_id": rec.config_id, "run": rec.run, **tr.as_row()}
        for rec in result.records
        for tr in rec.transfers
    ]
    return pd.DataFrame(rows)


class OrganizationSimulator(BaseEstimator):
    """Replicated simulation of one parameter cell.

    ``fit`` takes no data: it runs ``replications`` seeded runs and stores
    the per-period records. ``predict(periods)`` returns the mean normalized
    performance at those periods.

    Examples
    --------
    >>> sim = OrganizationSimulator(alpha=0.25, pair_prob=0.5, replications=2, horizon=20)
    >>> sim.fit().performance_curve_.shape
    (20,)
    """

    def __init__(self, kind="decomposable2", k=None, alpha=0.5, pair_prob=0.0, tau=None,
                 horizon=150, n_decisions=15, m_agents=5, capacity=5, replications=10,
                 master_seed=0, paired_landscapes=True, fallthrough=True, n_jobs=1):
        self.kind = kind
        self.k = k
        self.alpha = alpha
        self.pair_prob = pair_prob
        self.tau = tau
        self.horizon = horizon
        self.n_decisions = n_decisions
        self.m_agents = m_agents
        self.capacity = capacity
        self.replications = replications
        self.master_seed = master_seed
        self.paired_landscapes = paired_landscapes
        self.fallthrough = fallthrough
        self.n_jobs = n_jobs

    def _config(self) -> SimConfig:
        m = check_positive_int(self.m_agents, "m_agents")
        caps = (tuple(self.capacity) if np.iterable(self.capacity)
                else (check_positive_int(self.capacity, "capacity"),) * m)
        return SimConfig(
            kind=self.kind, k=self.k,
            alpha=check_probability(self.alpha, "alpha"),
            pair_prob=check_probability(self.pair_prob, "pair_prob"),
            tau=None if self.tau is None else check_positive_int(self.tau, "tau"),
            horizon=check_positive_int(self.horizon, "horizon"),
            n_decisions=check_positive_int(self.n_decisions, "n_decisions"),
            m_agents=m, capacities=caps,
            master_seed=check_positive_int(self.master_seed, "master_seed", minimum=0),
            replications=check_positive_int(self.replications, "replications"),
            paired_landscapes=bool(self.paired_landscapes), fallthrough=bool(self.fallthrough),
        )

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        self.result_ = run_grid([self.config_], n_jobs=self.n_jobs)
        self.records_ = records_frame(self.result_)
        self.transfers_ = transfers_frame(self.result_)
        self.run_records_ = self.result_.records
        self.performance_curve_ = self.records_.groupby("t")["perf_norm"].mean().to_numpy()
        return self

    def predict(self, periods):
        check_is_fitted(self, "performance_curve_")
        periods = np.asarray(periods, dtype=int)
        if periods.min() < 1 or periods.max() > len(self.performance_curve_):
            raise ValueError(f"periods must lie in 1..{len(self.performance_curve_)}")
        return self.performance_curve_[periods - 1]

    def score(self, X=None, y=None):
        """Mean normalized performance in the final period."""
        check_is_fitted(self, "performance_curve_")
        return float(self.performance_curve_[-1])


class PartialDependence(TransformerMixin, BaseEstimator):
    """Empirical partial dependence of a response on grid variables."""

    def __init__(self, scope=("t",), response="perf_norm", n_bootstrap=1000, confidence=0.95, random_state=0):
        self.scope = scope
        self.response = response
        self.n_bootstrap = n_bootstrap
        self.confidence = confidence
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_dataset(X, ("run", self.response))
        self.table_ = analysis.partial_dependence(
            X, list(self.scope), self.response, check_positive_int(self.n_bootstrap, "n_bootstrap"),
            check_probability(self.confidence, "confidence"), self.random_state,
        )
        return self

    def transform(self, X=None):
        check_is_fitted(self, "table_")
        return self.table_.copy()


class EfficiencyCDF(TransformerMixin, BaseEstimator):
    """Empirical distribution of task allocation efficiency per group."""

    def __init__(self, grouping=("alpha", "K_kind"), emergent_only=True):
        self.grouping = grouping
        self.emergent_only = emergent_only

    def fit(self, X, y=None):
        X = check_dataset(X, ("run", *self.grouping))
        if self.emergent_only and "tau_mode" in X.columns and (X["tau_mode"] != "none").any():
            X = X[X["tau_mode"] != "none"]
        self.table_ = analysis.efficiency_cdf(X, list(self.grouping))
        return self

    def transform(self, X=None):
        check_is_fitted(self, "table_")
        return self.table_.copy()
