import hashlib

import numpy as np
import pytest

from orgsim import engine
from orgsim.analysis import efficiency
from orgsim.dataset import write_records
from orgsim.engine import SimConfig, init_run, run_grid, run_period, run_simulation
from orgsim.exceptions import ConfigurationError


def small(**kw):
    base = dict(horizon=60, master_seed=3, replications=2)
    base.update(kw)
    return SimConfig(**base)


class TestConfig:
    def test_defaults(self):
        c = SimConfig()
        assert (c.k, c.mode, c.capacities) == (2, "top_down", (5,) * 5)
        assert SimConfig(tau=25).mode == "emergent"

    @pytest.mark.parametrize(
        "kw",
        [
            dict(alpha=1.5),
            dict(pair_prob=-0.1),
            dict(tau=25, m_agents=4, capacities=(5, 5, 5, 5)),
            dict(mode="top_down", tau=25),
            dict(mode="emergent"),
            dict(kind="random"),
            dict(kind="nondecomposable5", k=2),
            dict(capacities=(2, 2, 2, 2, 2)),
            dict(master_seed=-1),
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            SimConfig(**kw)

    def test_ids_distinguish_cells(self):
        a, b = SimConfig(alpha=0.25), SimConfig(alpha=0.5)
        assert a.config_id != b.config_id
        assert a.landscape_key == b.landscape_key
        assert SimConfig(alpha=0.25, paired_landscapes=False).landscape_key != a.landscape_key


class TestInitRun:
    def test_top_down_mirrored(self):
        state = init_run(SimConfig(), 0)
        assert state.allocation.areas == [[3 * m, 3 * m + 1, 3 * m + 2] for m in range(5)]
        assert [efficiency(state.allocation, state.landscape.matrix, m) for m in range(5)] == [1.0] * 5

    def test_emergent_equal(self):
        state = init_run(SimConfig(tau=25), 0)
        assert state.allocation.sizes() == [3] * 5

    def test_deterministic(self):
        a, b = init_run(SimConfig(tau=25, master_seed=9), 4), init_run(SimConfig(tau=25, master_seed=9), 4)
        assert a.vector == b.vector and a.allocation.areas == b.allocation.areas
        assert a.landscape.tables == b.landscape.tables

    def test_landscape_paired_across_cells(self):
        a = init_run(SimConfig(alpha=0.25, master_seed=1), 2)
        b = init_run(SimConfig(alpha=0.75, tau=25, master_seed=1), 2)
        assert a.landscape.tables == b.landscape.tables and a.vector == b.vector


class TestPeriods:
    def test_reallocation_period_changes_no_decision(self):
        cfg = small(tau=25, pair_prob=0.3)
        state = init_run(cfg, 0)
        for t in range(2, 25):
            run_period(state, cfg, t)
        before = list(state.vector)
        run_period(state, cfg, 25)
        assert state.vector == before and not state.flips

    def test_benchmark_allocation_constant(self):
        rec = run_simulation(small(pair_prob=0.4), 0)
        assert (rec.sizes == 3).all() and rec.n_transfers.sum() == 0 and not rec.transfers

    def test_single_agent_hill_climb_monotone(self):
        cfg = SimConfig(kind="random", k=4, m_agents=1, capacities=(15,), alpha=1.0, horizon=150, master_seed=5)
        for run in range(5):
            perf = run_simulation(cfg, run).perf
            assert (np.diff(perf) >= 0).all()

    @pytest.mark.parametrize("tau", [None, 5])
    def test_one_flip_per_agent_and_phase_separation(self, tau):
        cfg = small(tau=tau, kind="nondecomposable5", pair_prob=0.5, alpha=0.5)
        state = init_run(cfg, 1)
        for t in range(2, cfg.horizon + 1):
            prev, areas = list(state.vector), [list(a) for a in state.allocation.areas]
            run_period(state, cfg, t)
            changed = [i for i in range(15) if state.vector[i] != prev[i]]
            moved = state.allocation.areas != areas
            assert not (changed and moved)
            for m, area in enumerate(areas):
                in_area = [i for i in changed if i in area]
                assert len(in_area) <= 1
                assert in_area == ([state.flips[m]] if m in state.flips else [])


class TestRunSimulation:
    def test_horizon_one(self):
        cfg = small(horizon=1)
        rec = run_simulation(cfg, 0)
        state = init_run(cfg, 0)
        assert rec.vectors == [tuple(state.vector)]
        assert rec.perf[0] == state.landscape.performance(state.vector)
        assert rec.perf_norm[0] == rec.perf[0] / state.landscape.optimum_performance

    def test_normalized_at_most_one(self):
        rec = run_simulation(small(tau=10, pair_prob=0.5, horizon=100), 0)
        assert (rec.perf_norm <= 1.0).all() and (rec.perf_norm > 0).all()

    def test_records_byte_identical(self, tmp_path):
        cfg = small(tau=10, pair_prob=0.2)
        digests = []
        for name in ("a.csv", "b.csv"):
            result = run_grid([cfg])
            write_records(result, tmp_path / name)
            digests.append(hashlib.sha256((tmp_path / name).read_bytes()).hexdigest())
        assert digests[0] == digests[1]

    def test_belief_recording(self):
        rec = run_simulation(small(record_beliefs=True, horizon=5), 0)
        assert len(rec.beliefs) == 5 and rec.beliefs[0].shape == (5, 15, 15)
        assert np.nanmax(np.abs(rec.beliefs[0] - 0.5)) == 0


class TestGrid:
    def test_runs_get_distinct_landscapes(self):
        result = run_grid([small()])
        assert [r.run for r in result.records] == [0, 1]
        assert result.records[0].optimum != result.records[1].optimum

    def test_order_independent(self, tmp_path):
        cells = [small(alpha=a, tau=t, replications=4) for a in (0.25, 0.75) for t in (None, 10)]
        write_records(run_grid(cells), tmp_path / "a.csv")
        engine._landscape.cache_clear()
        write_records(run_grid(cells, run_order=[3, 1, 0, 2]), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_failed_runs_are_flagged(self, monkeypatch):
        real = engine.run_simulation

        def flaky(cfg, run):
            if run == 1:
                raise OSError("disk full")
            return real(cfg, run)

        monkeypatch.setattr(engine, "run_simulation", flaky)
        result = run_grid([small(replications=3)])
        assert [r.run for r in result.records] == [0, 2]
        assert [(f.run, "disk full" in f.error) for f in result.failures] == [(1, True)]
        assert not result.complete

    def test_duplicate_cells_rejected(self):
        with pytest.raises(ConfigurationError):
            run_grid([small(), small()])
