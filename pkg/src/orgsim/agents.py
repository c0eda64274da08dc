"""Organizational units: task allocation, utilities and one-period search steps.

All search steps evaluate candidates against the vector implemented in the
previous period, so every agent's choice in a period depends only on that
vector, its own proposal and (when paired) its partner's proposal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError, SimulationStateError
from .landscape import Landscape


@dataclass
class Allocation:
    """Partition of decisions ``0..N-1`` into ordered per-agent areas."""

    areas: list[list[int]]

    def __post_init__(self):
        self.areas = [list(a) for a in self.areas]
        n = sum(len(a) for a in self.areas)
        owner = [-1] * n
        for m, area in enumerate(self.areas):
            for i in area:
                if not 0 <= i < n or owner[i] != -1:
                    raise SimulationStateError(f"allocation is not a partition: {self.areas}")
                owner[i] = m
        self.owner = owner

    @classmethod
    def contiguous(cls, n_decisions: int, m_agents: int) -> "Allocation":
        """Mirrored top-down blocks: agent m owns a contiguous run of decisions."""
        return cls([list(map(int, b)) for b in np.array_split(np.arange(n_decisions), m_agents)])

    @classmethod
    def random_equal(cls, n_decisions: int, m_agents: int, rng) -> "Allocation":
        if n_decisions % m_agents:
            raise ConfigurationError(
                f"equal random allocation needs N divisible by M, got N={n_decisions}, M={m_agents}"
            )
        perm = rng.permutation(n_decisions).tolist()
        size = n_decisions // m_agents
        return cls([perm[m * size:(m + 1) * size] for m in range(m_agents)])

    @property
    def n_agents(self) -> int:
        return len(self.areas)

    @property
    def n_decisions(self) -> int:
        return len(self.owner)

    def sizes(self) -> list[int]:
        return [len(a) for a in self.areas]

    def residual(self, m: int) -> list[int]:
        return [i for i, o in enumerate(self.owner) if o != m]

    def copy(self) -> "Allocation":
        return Allocation(self.areas)

    def transfer(self, task: int, seller: int, buyer: int) -> None:
        if self.owner[task] != seller:
            raise SimulationStateError(f"task {task} is owned by {self.owner[task]}, not {seller}")
        self.areas[seller].remove(task)
        self.areas[buyer].append(task)
        self.owner[task] = buyer

    def check(self, capacities: Sequence[int]) -> None:
        Allocation(self.areas)
        for m, area in enumerate(self.areas):
            if len(area) > capacities[m]:
                raise SimulationStateError(f"agent {m} holds {len(area)} > capacity {capacities[m]}")


def utility(own_perf: float, residual_perf: float, alpha: float) -> float:
    return alpha * own_perf + (1.0 - alpha) * residual_perf


def _mean(values, idx):
    # an empty residual (one agent owns everything) contributes nothing
    return sum(map(values.__getitem__, idx)) / len(idx) if idx else 0.0


def flipped_contributions(landscape: Landscape, d: Sequence[int], contribs: list[float], i: int):
    """Vector and contributions after flipping decision ``i`` of ``d``."""
    cand = list(d)
    cand[i] ^= 1
    new = list(contribs)
    for r in landscape.affected_by(i):
        new[r] = landscape.contribution(r, cand)
    return cand, new


def agent_utility(contribs: Sequence[float], own: Sequence[int], residual: Sequence[int], alpha: float) -> float:
    return utility(_mean(contribs, own), _mean(contribs, residual), alpha)


def draw_flip(own: Sequence[int], rng) -> int:
    """Uniformly chosen decision from ``own``."""
    if not own:
        raise SimulationStateError("agent without decisions cannot propose a flip")
    return own[int(rng.random() * len(own))]


def propose_flip(own: Sequence[int], current: Sequence[int], rng) -> list[int]:
    cand = list(current)
    cand[draw_flip(own, rng)] ^= 1
    return cand


def individual_step(own, residual, landscape: Landscape, prev, alpha: float, rng, prev_contribs=None):
    """One individual hill-climbing step.

    Returns ``(bits, flipped)``: the chosen bits for ``own`` (in ``own`` order)
    and the flipped decision index, or ``None`` when the status quo is kept.
    """
    contribs = landscape.contributions(prev) if prev_contribs is None else prev_contribs
    i = draw_flip(own, rng)
    cand, cand_contribs = flipped_contributions(landscape, prev, contribs, i)
    if agent_utility(cand_contribs, own, residual, alpha) > agent_utility(contribs, own, residual, alpha):
        return [cand[j] for j in own], i
    return [prev[j] for j in own], None


def joint_utility(contribs, own_m, res_m, own_n, res_n, alpha: float) -> float:
    return 0.5 * (agent_utility(contribs, own_m, res_m, alpha) + agent_utility(contribs, own_n, res_n, alpha))


def adjacent_step(pair, allocation: Allocation, landscape: Landscape, prev, alpha: float, rng, prev_contribs=None):
    """Joint hill-climbing of two ring neighbours.

    Each agent proposes one flip (``pair[0]`` draws first). The status quo and
    the two single-flip tuples are scored by mean utility; earlier candidates
    win ties. Returns ``(bits_m, bits_n, flip)`` where ``flip`` is
    ``(decision, agent)`` or ``None``.
    """
    m, n = pair
    own_m, own_n = allocation.areas[m], allocation.areas[n]
    res_m, res_n = allocation.residual(m), allocation.residual(n)
    contribs = landscape.contributions(prev) if prev_contribs is None else prev_contribs
    i_m = draw_flip(own_m, rng)
    i_n = draw_flip(own_n, rng)

    best_vec, best_flip = prev, None
    best_u = joint_utility(contribs, own_m, res_m, own_n, res_n, alpha)
    for i, who in ((i_m, m), (i_n, n)):
        cand, cc = flipped_contributions(landscape, prev, contribs, i)
        u = joint_utility(cc, own_m, res_m, own_n, res_n, alpha)
        if u > best_u:
            best_vec, best_flip, best_u = cand, (i, who), u
    return [best_vec[j] for j in own_m], [best_vec[j] for j in own_n], best_flip


def pair_agents(m_agents: int, prob: float, rng) -> list[tuple[int, int]]:
    """Random disjoint pairing of ring neighbours.

    Agents are visited in random order; an unpaired agent, with probability
    ``prob``, picks its left or right neighbour and pairs if that neighbour is
    still free. Pairs are returned as sorted tuples.
    """
    if not 0.0 <= prob <= 1.0:
        raise ConfigurationError(f"pairing probability must lie in [0, 1], got {prob}")
    if m_agents < 2:
        return []
    paired = [False] * m_agents
    pairs = []
    for a in rng.permutation(m_agents).tolist():
        if paired[a]:
            continue
        if rng.random() < prob:
            b = (a + (1 if rng.random() < 0.5 else -1)) % m_agents
            if not paired[b]:
                paired[a] = paired[b] = True
                pairs.append((min(a, b), max(a, b)))
    return sorted(pairs)


def assemble_vector(per_agent_bits: Sequence[Sequence[int]], allocation: Allocation) -> list[int]:
    d = [None] * allocation.n_decisions
    for bits, area in zip(per_agent_bits, allocation.areas, strict=True):
        if len(bits) != len(area):
            raise SimulationStateError("per-agent decisions do not match the allocation")
        for b, i in zip(bits, area):
            if d[i] is not None:
                raise SimulationStateError(f"decision {i} assigned twice")
            d[i] = int(b)
    if any(b is None for b in d):
        raise SimulationStateError("allocation leaves decisions unassigned")
    return d
