"""Periodic bottom-up task re-allocation by offers, signals and thresholds."""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Sequence

from .agents import Allocation
from .beliefs import BeliefState
from .exceptions import SimulationStateError


@dataclass(frozen=True)
class Offer:
    seller: int
    task: int
    threshold: float


@dataclass(frozen=True)
class Signal:
    bidder: int
    task: int
    value: float


@dataclass(frozen=True)
class Transfer:
    period: int
    task: int
    seller: int
    buyer: int
    threshold: float
    signal: float
    bidder_rank: int

    def as_row(self) -> dict:
        return asdict(self)


def _mean_belief(beliefs: BeliefState, m: int, i: int, others) -> float:
    others = [j for j in others if j != i]
    return sum(beliefs.belief(m, i, j) for j in others) / len(others)


def compute_offer(m: int, owned: Sequence[int], beliefs: BeliefState, rng) -> Offer | None:
    """Offer the owned task with the lowest mean belief on internal interdependencies.

    Agents holding a single task never offer it. Ties are broken uniformly.
    """
    if len(owned) <= 1:
        return None
    means = [_mean_belief(beliefs, m, i, owned) for i in owned]
    low = min(means)
    tied = [i for i, v in zip(owned, means) if v == low]
    task = tied[0] if len(tied) == 1 else tied[int(rng.random() * len(tied))]
    return Offer(seller=m, task=task, threshold=low)


def compute_signal(r: int, task: int, owned: Sequence[int], beliefs: BeliefState, capacity: int) -> Signal | None:
    if task in owned:
        raise SimulationStateError(f"agent {r} cannot bid on its own task {task}")
    if len(owned) >= capacity or not owned:
        return None
    value = sum(beliefs.belief(r, task, j) for j in owned) / len(owned)
    return Signal(bidder=r, task=task, value=value)


def _ranked(signals: Sequence[Signal], rng) -> list[Signal]:
    keys = rng.random(len(signals)).tolist() if signals else []
    order = sorted(range(len(signals)), key=lambda s: (-signals[s].value, keys[s]))
    return [signals[s] for s in order]


def resolve_offers(
    offers: Sequence[Offer],
    signals: dict[int, list[Signal]],
    allocation: Allocation,
    capacities: Sequence[int],
    rng,
    period: int = 0,
    fallthrough: bool = True,
) -> tuple[Allocation, list[Transfer]]:
    """Apply offers sequentially in random order.

    For each offer the bidders are ranked by signal (ties uniform). With
    ``fallthrough`` the best bidder that still has spare capacity is
    considered; otherwise only the top-ranked bidder is, and a full top
    bidder blocks the trade. The task moves if that signal is at least the
    seller's threshold.
    """
    alloc = allocation.copy()
    log: list[Transfer] = []
    for o in rng.permutation(len(offers)).tolist():
        offer = offers[o]
        if alloc.owner[offer.task] != offer.seller:
            raise SimulationStateError(
                f"offer of task {offer.task} by agent {offer.seller}, but owner is {alloc.owner[offer.task]}"
            )
        ranked = _ranked(signals.get(offer.task, []), rng)
        chosen = None
        for rank, sig in enumerate(ranked):
            if len(alloc.areas[sig.bidder]) < capacities[sig.bidder]:
                chosen = (rank, sig)
                break
            if not fallthrough:
                break
        if chosen is None:
            continue
        rank, sig = chosen
        if sig.value >= offer.threshold:
            alloc.transfer(offer.task, offer.seller, sig.bidder)
            log.append(Transfer(period, offer.task, offer.seller, sig.bidder, offer.threshold, sig.value, rank))
    return alloc, log


def reallocate(
    allocation: Allocation,
    beliefs: BeliefState,
    capacities: Sequence[int],
    rng,
    period: int = 0,
    fallthrough: bool = True,
) -> tuple[Allocation, list[Transfer]]:
    """Full re-allocation phase computed from the period-start state."""
    offers = []
    for m, area in enumerate(allocation.areas):
        offer = compute_offer(m, area, beliefs, rng)
        if offer is not None:
            offers.append(offer)
    signals: dict[int, list[Signal]] = {}
    for offer in offers:
        for r, area in enumerate(allocation.areas):
            if r == offer.seller:
                continue
            sig = compute_signal(r, offer.task, area, beliefs, capacities[r])
            if sig is not None:
                signals.setdefault(offer.task, []).append(sig)
    return resolve_offers(offers, signals, allocation, capacities, rng, period, fallthrough)
