"""Period, run and grid orchestration with reproducible seeding."""
from __future__ import annotations

import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np

from .agents import Allocation, adjacent_step, individual_step, pair_agents
from .analysis import efficiency
from .beliefs import BeliefState, init_beliefs
from .exceptions import ConfigurationError
from .landscape import KINDS, STYLIZED_K, Landscape, build_influence_matrix, generate_landscape
from .reallocation import Transfer, reallocate
from .rng import make_rng, stable_hash

log = logging.getLogger(__name__)

MODES = ("top_down", "emergent")


@dataclass(frozen=True)
class SimConfig:
    """One cell of the parameter grid plus the fixed parameters."""

    kind: str = "decomposable2"
    alpha: float = 0.5
    pair_prob: float = 0.0
    tau: int | None = None
    k: int | None = None
    horizon: int = 150
    n_decisions: int = 15
    m_agents: int = 5
    capacities: tuple | None = None
    mode: str | None = None
    master_seed: int = 0
    replications: int = 1
    paired_landscapes: bool = True
    fallthrough: bool = True
    record_beliefs: bool = False

    def __post_init__(self):
        if self.k is None:
            if self.kind not in STYLIZED_K:
                raise ConfigurationError(f"kind {self.kind!r} needs an explicit k")
            object.__setattr__(self, "k", STYLIZED_K[self.kind])
        if self.capacities is None:
            object.__setattr__(self, "capacities", (5,) * self.m_agents)
        object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        if self.mode is None:
            object.__setattr__(self, "mode", "top_down" if self.tau is None else "emergent")
        self.validate()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigurationError(f"kind: unknown matrix kind {self.kind!r}")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode: expected one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(f"alpha: must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.pair_prob <= 1.0:
            raise ConfigurationError(f"pair_prob: must lie in [0, 1], got {self.pair_prob}")
        if self.mode == "top_down" and self.tau is not None:
            raise ConfigurationError("tau: top_down mode requires tau=none")
        if self.mode == "emergent":
            if self.tau is None or self.tau < 1:
                raise ConfigurationError(f"tau: emergent mode requires a positive tau, got {self.tau}")
            if self.n_decisions % self.m_agents:
                raise ConfigurationError(
                    f"m_agents: emergent mode needs N divisible by M (N={self.n_decisions}, M={self.m_agents})"
                )
        if self.horizon < 1:
            raise ConfigurationError(f"horizon: must be >= 1, got {self.horizon}")
        if self.m_agents < 1 or self.m_agents > self.n_decisions:
            raise ConfigurationError(f"m_agents: must lie in [1, N], got {self.m_agents}")
        if len(self.capacities) != self.m_agents or min(self.capacities) < 1:
            raise ConfigurationError(f"capacities: need {self.m_agents} positive values, got {self.capacities}")
        sizes = [len(b) for b in np.array_split(np.arange(self.n_decisions), self.m_agents)]
        if any(s > c for s, c in zip(sizes, self.capacities)):
            raise ConfigurationError(f"capacities: initial allocation {sizes} exceeds {self.capacities}")
        if self.replications < 1:
            raise ConfigurationError(f"replications: must be >= 1, got {self.replications}")
        if self.master_seed is None or self.master_seed < 0:
            raise ConfigurationError(f"master_seed: must be a non-negative integer, got {self.master_seed}")
        # raises on invalid kind/size/k combinations
        if self.kind in STYLIZED_K:
            build_influence_matrix(self.kind, self.n_decisions, self.k)
        elif not 0 <= self.k <= self.n_decisions - 1:
            raise ConfigurationError(f"k: must lie in [0, {self.n_decisions - 1}], got {self.k}")

    @property
    def k_label(self) -> str:
        return self.kind if self.kind in STYLIZED_K else f"random_k{self.k}"

    @property
    def tau_label(self) -> str:
        return "none" if self.tau is None else str(self.tau)

    def cell_params(self) -> dict:
        d = asdict(self)
        for key in ("master_seed", "replications", "record_beliefs"):
            d.pop(key)
        d["capacities"] = list(self.capacities)
        return d

    @property
    def config_hash(self) -> int:
        return stable_hash(self.cell_params())

    @property
    def config_id(self) -> str:
        return f"{self.config_hash:016x}"[:12]

    @property
    def landscape_key(self) -> int:
        if self.paired_landscapes:
            return stable_hash({"kind": self.kind, "k": self.k, "n_decisions": self.n_decisions})
        return self.config_hash


@dataclass
class RunState:
    t: int
    landscape: Landscape
    vector: list[int]
    allocation: Allocation
    beliefs: BeliefState
    rng: np.random.Generator
    transfers: list[Transfer] = field(default_factory=list)
    flips: dict = field(default_factory=dict)


@dataclass
class RunRecord:
    config_id: str
    run: int
    config: SimConfig
    optimum: float
    vectors: list[tuple[int, ...]]
    perf: np.ndarray
    perf_norm: np.ndarray
    sizes: np.ndarray
    eta: np.ndarray
    n_transfers: np.ndarray
    transfers: list[Transfer]
    beliefs: list[np.ndarray] | None = None


@lru_cache(maxsize=64)
def _landscape(master_seed: int, key: int, run: int, kind: str, k: int, n: int):
    rng = make_rng(master_seed, key, run, "landscape")
    matrix = build_influence_matrix(kind, n, k, rng)
    landscape = generate_landscape(matrix, rng, meta={"seed": f"{master_seed}/{key}/{run}"})
    initial = tuple(int(b) for b in rng.integers(0, 2, size=n))
    return landscape, initial


def init_run(config: SimConfig, run: int) -> RunState:
    landscape, initial = _landscape(
        config.master_seed, config.landscape_key, run, config.kind, config.k, config.n_decisions
    )
    rng = make_rng(config.master_seed, config.config_hash, run, "dynamics")
    if config.mode == "top_down":
        allocation = Allocation.contiguous(config.n_decisions, config.m_agents)
    else:
        allocation = Allocation.random_equal(config.n_decisions, config.m_agents, rng)
    return RunState(
        t=1,
        landscape=landscape,
        vector=list(initial),
        allocation=allocation,
        beliefs=init_beliefs(config.n_decisions, config.m_agents),
        rng=rng,
    )


def is_reallocation_period(config: SimConfig, t: int) -> bool:
    return config.tau is not None and t % config.tau == 0


def run_period(state: RunState, config: SimConfig, t: int) -> RunState:
    """Advance ``state`` from period ``t-1`` to period ``t`` in place.

    Re-allocation periods only change ownership; search periods only change
    decisions. ``state.flips`` maps each agent that flipped to its decision.
    """
    state.t = t
    state.transfers = []
    state.flips = {}
    if is_reallocation_period(config, t):
        state.allocation, state.transfers = reallocate(
            state.allocation, state.beliefs, config.capacities, state.rng, t, config.fallthrough
        )
        return state

    landscape, prev, alloc = state.landscape, state.vector, state.allocation
    prev_contribs = landscape.contributions(prev)
    pairs = pair_agents(config.m_agents, config.pair_prob, state.rng)
    in_pair = {a: p for p in pairs for a in p}
    bits: list = [None] * config.m_agents
    for m in range(config.m_agents):
        if bits[m] is not None:
            continue
        if m in in_pair:
            a, b = in_pair[m]
            bits[a], bits[b], flip = adjacent_step(
                (a, b), alloc, landscape, prev, config.alpha, state.rng, prev_contribs
            )
            if flip is not None:
                state.flips[flip[1]] = flip[0]
        else:
            bits[m], flipped = individual_step(
                alloc.areas[m], alloc.residual(m), landscape, prev, config.alpha, state.rng, prev_contribs
            )
            if flipped is not None:
                state.flips[m] = flipped

    new = list(prev)
    for area, b in zip(alloc.areas, bits):
        for i, v in zip(area, b):
            new[i] = v
    state.vector = new
    if state.flips:
        now_contribs = landscape.contributions(new)
        for m, i in state.flips.items():
            state.beliefs.update(m, i, alloc.areas[m], prev_contribs, now_contribs)
    return state


def _etas(config: SimConfig, landscape: Landscape, alloc: Allocation) -> list[float]:
    if config.k == 0:
        return [float("nan")] * config.m_agents
    return [efficiency(alloc, landscape.matrix, m) for m in range(config.m_agents)]


def run_simulation(config: SimConfig, run: int) -> RunRecord:
    """Simulate ``config.horizon`` periods; period 1 records the initial state."""
    state = init_run(config, run)
    T, M = config.horizon, config.m_agents
    opt = state.landscape.optimum_performance
    perf = np.empty(T)
    sizes = np.empty((T, M), dtype=np.int64)
    eta = np.empty((T, M))
    n_tr = np.zeros(T, dtype=np.int64)
    vectors, transfers, beliefs = [], [], [] if config.record_beliefs else None
    etas = _etas(config, state.landscape, state.allocation)
    for t in range(1, T + 1):
        if t > 1:
            run_period(state, config, t)
            if state.transfers:
                transfers.extend(state.transfers)
                n_tr[t - 1] = len(state.transfers)
                etas = _etas(config, state.landscape, state.allocation)
        perf[t - 1] = state.landscape.performance(state.vector)
        sizes[t - 1] = state.allocation.sizes()
        eta[t - 1] = etas
        vectors.append(tuple(state.vector))
        if beliefs is not None:
            beliefs.append(np.stack([state.beliefs.matrix(m) for m in range(M)]))
    return RunRecord(
        config_id=config.config_id,
        run=run,
        config=config,
        optimum=opt,
        vectors=vectors,
        perf=perf,
        perf_norm=perf / opt,
        sizes=sizes,
        eta=eta,
        n_transfers=n_tr,
        transfers=transfers,
        beliefs=beliefs,
    )


@dataclass
class RunFailure:
    config_id: str
    run: int
    error: str


@dataclass
class GridResult:
    configs: list[SimConfig]
    records: list[RunRecord]
    failures: list[RunFailure]

    @property
    def complete(self) -> bool:
        return not self.failures


def _run_block(configs: list[SimConfig], run: int):
    out = []
    for c, cfg in enumerate(configs):
        if run >= cfg.replications:
            continue
        try:
            out.append((c, run_simulation(cfg, run)))
        except Exception as exc:  # one failed run must not abort the grid
            log.error("run %s/%d failed: %s", cfg.config_id, run, exc)
            out.append((c, RunFailure(cfg.config_id, run, "".join(traceback.format_exception_only(exc)).strip())))
    return out


def run_grid(configs, n_jobs: int = 1, run_order=None, progress=None) -> GridResult:
    """Execute every replication of every config.

    Work is grouped by run index so cells sharing a paired landscape reuse
    its cached optimum. Results are sorted by (config position, run), so the
    outcome does not depend on ``n_jobs`` or ``run_order``.
    """
    configs = list(configs)
    ids = [c.config_id for c in configs]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("grid contains duplicate cells")
    n_runs = max((c.replications for c in configs), default=0)
    order = list(range(n_runs)) if run_order is None else list(run_order)
    if sorted(order) != list(range(n_runs)):
        raise ValueError("run_order must be a permutation of the run indices")

    results = []
    if n_jobs <= 1:
        for r in order:
            results.extend(_run_block(configs, r))
            if progress:
                progress(r)
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            for r, block in zip(order, pool.map(_run_block, [configs] * len(order), order)):
                results.extend(block)
                if progress:
                    progress(r)

    results.sort(key=lambda item: (item[0], item[1].run))
    records = [x for _, x in results if isinstance(x, RunRecord)]
    failures = [x for _, x in results if isinstance(x, RunFailure)]
    return GridResult(configs, records, failures)
