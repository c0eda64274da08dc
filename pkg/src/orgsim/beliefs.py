"""Beta-mean beliefs about pairwise decision interdependencies.

``p[m, i, j]`` counts flips of ``i`` by agent ``m`` after which the
contribution of ``j`` changed, ``q[m, i, j]`` flips after which it did not.
Both start at 1, so the belief ``p / (p + q)`` starts at 0.5.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .exceptions import DomainError, SimulationStateError


class BeliefState:
    def __init__(self, n_decisions: int, m_agents: int):
        self.p = np.ones((m_agents, n_decisions, n_decisions), dtype=np.int64)
        self.q = np.ones((m_agents, n_decisions, n_decisions), dtype=np.int64)

    @property
    def n_agents(self) -> int:
        return self.p.shape[0]

    @property
    def n_decisions(self) -> int:
        return self.p.shape[1]

    def belief(self, m: int, i: int, j: int) -> float:
        if i == j:
            raise DomainError(f"belief needs two distinct decisions, got i=j={i}")
        p, q = self.p[m, i, j], self.q[m, i, j]
        return float(p / (p + q))

    def matrix(self, m: int) -> np.ndarray:
        """Belief matrix of agent ``m``; the diagonal is NaN."""
        b = self.p[m] / (self.p[m] + self.q[m])
        np.fill_diagonal(b, np.nan)
        return b

    def observations(self, m: int, i: int, j: int) -> int:
        return int(self.p[m, i, j] + self.q[m, i, j] - 2)

    def copy(self) -> "BeliefState":
        new = BeliefState.__new__(BeliefState)
        new.p, new.q = self.p.copy(), self.q.copy()
        return new

    def update(self, m: int, i: int, own: Sequence[int], contribs_prev, contribs_now) -> None:
        """Record the outcome of agent ``m`` flipping its decision ``i``.

        Contributions are compared exactly: decisions unaffected by the flip
        keep a bit-identical table entry.
        """
        if i not in own:
            raise SimulationStateError(f"agent {m} flipped decision {i} outside its area {list(own)}")
        for j in own:
            if j == i:
                continue
            if contribs_now[j] != contribs_prev[j]:
                self.p[m, i, j] += 1
            else:
                self.q[m, i, j] += 1


def init_beliefs(n_decisions: int, m_agents: int) -> BeliefState:
    return BeliefState(n_decisions, m_agents)


def update_beliefs(state: BeliefState, m: int, i: int, own, contribs_prev, contribs_now) -> BeliefState:
    state.update(m, i, own, contribs_prev, contribs_now)
    return state


def belief(state: BeliefState, m: int, i: int, j: int) -> float:
    return state.belief(m, i, j)
