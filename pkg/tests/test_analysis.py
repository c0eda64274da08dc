import csv
import itertools
import statistics

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from orgsim.agents import Allocation
from orgsim.analysis import efficiency, efficiency_cdf, partial_dependence, summarize
from orgsim.exceptions import DomainError
from orgsim.landscape import build_influence_matrix


def synthetic(values: dict, runs=1, periods=(1,), eta=0.5):
    """Dataset with one row per (cell, run, t); ``values`` maps (K_kind, alpha) to a response."""
    rows = []
    for (kind, alpha), v in values.items():
        for run in range(runs):
            for t in periods:
                rows.append(dict(config_id=f"{kind}-{alpha}", run=run, t=t, K_kind=kind, alpha=alpha,
                                 pair_prob=0.0, tau_mode="none", perf=v, perf_norm=v + 0.01 * run,
                                 eta_agent_1=eta, eta_agent_2=eta, n_transfers=0))
    return pd.DataFrame(rows)


class TestEfficiency:
    def test_benchmarks(self):
        mirrored = Allocation.contiguous(15, 5)
        dec = build_influence_matrix("decomposable2", 15, 2)
        nondec = build_influence_matrix("nondecomposable5", 15, 5)
        assert [efficiency(mirrored, dec, m) for m in range(5)] == [1.0] * 5
        assert [efficiency(mirrored, nondec, m) for m in range(5)] == [0.4] * 5

    def test_no_internal_dependencies(self):
        spread = Allocation([[0, 3, 6], [1, 4, 9], [2, 7, 12], [5, 10, 13], [8, 11, 14]])
        dec = build_influence_matrix("decomposable2", 15, 2)
        assert efficiency(spread, dec, 0) == 0.0

    def test_k0_undefined(self, rng):
        with pytest.raises(DomainError):
            efficiency(Allocation.contiguous(4, 2), build_influence_matrix("random", 4, 0, rng), 0)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10**6), kind=st.sampled_from(["decomposable2", "nondecomposable5", "random"]))
    def test_dependency_accounting(self, seed, kind):
        rng = np.random.default_rng(seed)
        k = {"decomposable2": 2, "nondecomposable5": 5}.get(kind, int(rng.integers(1, 8)))
        matrix = build_influence_matrix(kind, 15, k, rng)
        alloc = Allocation.random_equal(15, 5, rng)
        internal = sum(efficiency(alloc, matrix, m) * 3 * k for m in range(5))
        cross = sum(
            1 for n in range(15) for j in range(15)
            if n != j and matrix.depends[n, j] and alloc.owner[n] != alloc.owner[j]
        )
        assert round(internal) + cross == 15 * k
        assert all(0.0 <= efficiency(alloc, matrix, m) <= 1.0 for m in range(5))


class TestPartialDependence:
    def test_two_complementary_cells(self):
        df = synthetic({("dec", 0.25): 0.4, ("dec", 0.75): 0.6})
        out = partial_dependence(df, ["K_kind"])
        assert out["mean"].tolist() == [0.5] and out["n_cells"].tolist() == [2]

    def test_full_scope_is_cell_means(self):
        df = synthetic({("dec", 0.25): 0.4, ("dec", 0.75): 0.6, ("non", 0.25): 0.3}, runs=3)
        out = partial_dependence(df, ["t", "pair_prob", "alpha", "K_kind", "tau_mode"])
        cells = df.groupby(["K_kind", "alpha"])["perf_norm"].mean()
        for _, row in out.iterrows():
            assert row["mean"] == pytest.approx(cells[(row["K_kind"], row["alpha"])], abs=1e-15)

    def test_hand_computed_grid(self):
        # 2x2 grid, two runs offset by 0.01: cell means are v + 0.005
        df = synthetic({("dec", 0.25): 0.9, ("dec", 0.75): 0.7, ("non", 0.25): 0.6, ("non", 0.75): 0.2}, runs=2)
        by_kind = partial_dependence(df, ["K_kind"]).set_index("K_kind")["mean"]
        assert by_kind["dec"] == pytest.approx((0.905 + 0.705) / 2, abs=1e-12)
        assert by_kind["non"] == pytest.approx((0.605 + 0.205) / 2, abs=1e-12)
        by_alpha = partial_dependence(df, ["alpha"]).set_index("alpha")["mean"]
        assert by_alpha[0.25] == pytest.approx((0.905 + 0.605) / 2, abs=1e-12)
        assert by_alpha[0.75] == pytest.approx((0.705 + 0.205) / 2, abs=1e-12)

    def test_bootstrap_band(self):
        df = synthetic({("dec", 0.25): 0.4, ("dec", 0.75): 0.6}, runs=20)
        row = partial_dependence(df, ["K_kind"]).iloc[0]
        assert row["ci_lo"] <= row["mean"] <= row["ci_hi"]
        assert row["ci_lo"] >= 0.5 and row["ci_hi"] <= 0.5 + 0.19

    def test_single_run_band_collapses(self):
        row = partial_dependence(synthetic({("dec", 0.25): 0.4}), ["alpha"]).iloc[0]
        assert row["ci_lo"] == row["mean"] == row["ci_hi"]

    def test_unknown_scope(self):
        df = synthetic({("dec", 0.25): 0.4})
        with pytest.raises(DomainError):
            partial_dependence(df, ["capacity"])
        with pytest.raises(DomainError):
            partial_dependence(df.drop(columns=["pair_prob"]), ["pair_prob"])


class TestEfficiencyCdf:
    def test_degenerate(self):
        out = efficiency_cdf(synthetic({("dec", 0.25): 0.4}, runs=3, eta=0.4))
        assert out[["eta", "cdf", "n_samples"]].values.tolist() == [[0.4, 1.0, 6]]

    def test_monotone_and_mass(self, rng):
        df = synthetic({("dec", 0.25): 0.4, ("non", 0.25): 0.3}, runs=10, periods=range(1, 6))
        df["eta_agent_1"] = rng.choice([0.0, 1 / 3, 2 / 3, 1.0], len(df))
        out = efficiency_cdf(df)
        for _, grp in out.groupby(["alpha", "K_kind"]):
            assert (np.diff(grp["cdf"]) > 0).all() and grp["cdf"].iloc[-1] == 1.0
            assert grp["n_samples"].iloc[0] == 2 * 10 * 5


class TestSummarize:
    def test_single_run(self):
        out = summarize(synthetic({("dec", 0.25): 0.4}))
        row = out.iloc[0]
        assert row["ci_lo"] == row["mean"] == row["ci_hi"] and row["std"] == 0.0

    def test_matches_independent_aggregation(self, tmp_path):
        df = synthetic({("dec", 0.25): 0.4, ("non", 0.75): 0.7}, runs=7, periods=[1, 50, 100, 150])
        df["perf_norm"] = np.random.default_rng(0).random(len(df))
        path = tmp_path / "records.csv"
        df.to_csv(path, index=False)
        out = summarize(pd.read_csv(path, float_precision="round_trip"))
        assert out["mean"].between(0, 1).all()

        groups = {}
        with open(path) as fh:
            for r in csv.DictReader(fh):
                groups.setdefault((r["config_id"], int(r["t"])), []).append(float(r["perf_norm"]))
        for _, row in out.iterrows():
            xs = groups[(row["config_id"], row["t"])]
            assert abs(row["mean"] - statistics.fmean(xs)) <= 1e-12
            assert abs(row["std"] - statistics.stdev(xs)) <= 1e-12
            assert row["n_runs"] == len(xs)


def test_nested_marginalization_is_consistent():
    rng = np.random.default_rng(1)
    rows = []
    for kind, alpha, prob, tau in itertools.product(["dec", "non"], [0.25, 0.5, 0.75], [0.0, 0.5], ["none", "25"]):
        for run in range(3):
            for t in (1, 2, 3):
                rows.append(dict(run=run, t=t, K_kind=kind, alpha=alpha, pair_prob=prob, tau_mode=tau,
                                 perf_norm=rng.random()))
    df = pd.DataFrame(rows)
    wide = partial_dependence(df, ["K_kind", "alpha"], n_boot=10)
    narrow = partial_dependence(df, ["K_kind"], n_boot=10)
    composed = wide.groupby("K_kind")["mean"].mean()
    for _, row in narrow.iterrows():
        assert abs(composed[row["K_kind"]] - row["mean"]) <= 1e-12
