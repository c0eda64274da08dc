"""NK performance landscapes over binary decision vectors.

Decisions are indexed ``0..N-1``. ``matrix.depends[n, j]`` is true when the
contribution of decision ``n`` is affected by decision ``j``. Each decision
owns a contribution table of ``2**(K_n + 1)`` uniform draws; the table index
takes the decision's own bit as the most significant bit, followed by the
dependency bits in ascending decision order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError, DomainError

KINDS = ("decomposable2", "nondecomposable5", "random")
STYLIZED_K = {"decomposable2": 2, "nondecomposable5": 5}
BLOCK = 3
MAX_OPTIMUM_N = 25
_CHUNK_BITS = 18


@dataclass(frozen=True)
class InfluenceMatrix:
    depends: np.ndarray
    kind: str = "random"
    k: int = 0

    def __post_init__(self):
        dep = np.asarray(self.depends, dtype=bool)
        if dep.ndim != 2 or dep.shape[0] != dep.shape[1] or dep.shape[0] < 1:
            raise ConfigurationError(f"influence matrix must be square, got shape {dep.shape}")
        if not dep.diagonal().all():
            raise ConfigurationError("influence matrix diagonal must be all true")
        dep.setflags(write=False)
        object.__setattr__(self, "depends", dep)

    @property
    def n_decisions(self) -> int:
        return self.depends.shape[0]

    def dependencies(self, n: int) -> tuple[int, ...]:
        """Off-diagonal dependencies of contribution ``n`` in ascending order."""
        row = self.depends[n]
        return tuple(int(j) for j in np.flatnonzero(row) if j != n)

    def __eq__(self, other):
        if not isinstance(other, InfluenceMatrix):
            return NotImplemented
        return (self.kind, self.k) == (other.kind, other.k) and np.array_equal(
            self.depends, other.depends
        )

    def __hash__(self):
        return hash((self.kind, self.k, self.depends.tobytes()))


def build_influence_matrix(kind: str, n_decisions: int, k: int, rng=None) -> InfluenceMatrix:
    """Build the interdependence structure of the decision problem.

    ``decomposable2`` and ``nondecomposable5`` are the two stylized 15-decision
    structures with 3-decision blocks; ``random`` draws ``k`` distinct
    off-diagonal dependencies per row uniformly (requires ``rng``).
    """
    if kind not in KINDS:
        raise ConfigurationError(f"unknown matrix kind {kind!r}; expected one of {KINDS}")
    if n_decisions < 1:
        raise ConfigurationError(f"n_decisions must be >= 1, got {n_decisions}")
    if not 0 <= k <= n_decisions - 1:
        raise ConfigurationError(f"k must lie in [0, {n_decisions - 1}], got {k}")

    dep = np.eye(n_decisions, dtype=bool)
    if kind in STYLIZED_K:
        if n_decisions != 15:
            raise ConfigurationError(f"kind {kind!r} requires n_decisions=15, got {n_decisions}")
        if k != STYLIZED_K[kind]:
            raise ConfigurationError(f"kind {kind!r} requires k={STYLIZED_K[kind]}, got {k}")
        n_blocks = n_decisions // BLOCK
        for n in range(n_decisions):
            b = n // BLOCK
            dep[n, b * BLOCK:(b + 1) * BLOCK] = True
            if kind == "nondecomposable5":
                nxt = (b + 1) % n_blocks
                dep[n, nxt * BLOCK:(nxt + 1) * BLOCK] = True
    else:
        if rng is None:
            raise ConfigurationError("kind 'random' needs a random generator")
        for n in range(n_decisions):
            others = np.array([j for j in range(n_decisions) if j != n], dtype=int)
            if k:
                dep[n, rng.choice(others, size=k, replace=False)] = True
    return InfluenceMatrix(dep, kind=kind, k=k)


@dataclass
class Landscape:
    """Contribution tables plus the cached global optimum.

    ``tables[n]`` is a tuple of floats of length ``2**(len(deps[n]) + 1)``.
    """

    matrix: InfluenceMatrix
    tables: tuple
    meta: dict = field(default_factory=dict)
    optimum: tuple | None = None

    def __post_init__(self):
        n = self.matrix.n_decisions
        if len(self.tables) != n:
            raise ConfigurationError(f"expected {n} tables, got {len(self.tables)}")
        self.tables = tuple(tuple(float(v) for v in t) for t in self.tables)
        self._deps = tuple(self.matrix.dependencies(i) for i in range(n))
        for i, (t, d) in enumerate(zip(self.tables, self._deps)):
            if len(t) != 2 ** (len(d) + 1):
                raise ConfigurationError(
                    f"table {i} has length {len(t)}, expected {2 ** (len(d) + 1)}"
                )
            if min(t) < 0.0 or max(t) > 1.0:
                raise ConfigurationError(f"table {i} has values outside [0, 1]")
        # decisions whose contribution reacts to a flip of j (including j itself)
        self._affected = tuple(
            tuple(int(r) for r in np.flatnonzero(self.matrix.depends[:, j]))
            for j in range(n)
        )
        if self.optimum is None:
            self.optimum = exhaustive_optimum(self)

    @property
    def n_decisions(self) -> int:
        return self.matrix.n_decisions

    @property
    def optimum_performance(self) -> float:
        return self.optimum[1]

    def affected_by(self, j: int) -> tuple[int, ...]:
        return self._affected[j]

    def contribution(self, n: int, d: Sequence[int]) -> float:
        idx = d[n]
        for j in self._deps[n]:
            idx = (idx << 1) | d[j]
        return self.tables[n][idx]

    def contributions(self, d: Sequence[int]) -> list[float]:
        return [self.contribution(n, d) for n in range(self.n_decisions)]

    def performance(self, d: Sequence[int]) -> float:
        if len(d) != self.n_decisions:
            raise DomainError(f"decision vector has length {len(d)}, expected {self.n_decisions}")
        return sum(self.contributions(d)) / self.n_decisions

    def partial_performance(self, subset: Sequence[int], d: Sequence[int]) -> float:
        """Mean contribution over ``subset``, evaluated in the context of the full vector ``d``."""
        subset = list(subset)
        if not subset:
            raise DomainError("partial performance needs a nonempty subset")
        if any(not 0 <= n < self.n_decisions for n in subset):
            raise DomainError(f"subset {subset} not within 0..{self.n_decisions - 1}")
        return sum(self.contribution(n, d) for n in subset) / len(subset)


def contribution(landscape: Landscape, n: int, d: Sequence[int]) -> float:
    return landscape.contribution(n, d)


def performance(landscape: Landscape, d: Sequence[int]) -> float:
    return landscape.performance(d)


def partial_performance(landscape: Landscape, subset: Sequence[int], d: Sequence[int]) -> float:
    return landscape.partial_performance(subset, d)


def generate_landscape(matrix: InfluenceMatrix, rng, meta: dict | None = None) -> Landscape:
    """Draw i.i.d. U(0,1) contribution tables for ``matrix`` and cache the optimum."""
    tables = []
    for n in range(matrix.n_decisions):
        size = 2 ** (len(matrix.dependencies(n)) + 1)
        tables.append(tuple(rng.random(size).tolist()))
    return Landscape(matrix, tuple(tables), meta=dict(meta or {}))


@lru_cache(maxsize=8)
def _enumeration_bits(n: int, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    values = np.arange(start, stop, dtype=np.int64)
    bits = np.ascontiguousarray(_bits_of(values, n).T)
    bits.setflags(write=False)
    return values, bits


def _bits_of(values: np.ndarray, n: int) -> np.ndarray:
    # decision 0 is the most significant bit of the enumeration counter
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((values[:, None] >> shifts) & 1).astype(np.int64)


def exhaustive_optimum(landscape: Landscape) -> tuple[tuple[int, ...], float]:
    """Enumerate all ``2**N`` vectors; ties go to the lowest binary value.

    The binary value reads decision 0 as the most significant bit. Summation
    runs sequentially in decision order so the returned value is bit-identical
    to ``Landscape.performance`` on the returned vector.
    """
    n = landscape.n_decisions
    if n > MAX_OPTIMUM_N:
        raise ConfigurationError(f"exhaustive optimum limited to N <= {MAX_OPTIMUM_N}, got {n}")
    tables = [np.asarray(t, dtype=np.float64) for t in landscape.tables]
    deps = [landscape.matrix.dependencies(i) for i in range(n)]
    total = 1 << n
    chunk = 1 << min(n, _CHUNK_BITS)
    best_val, best_vec = -np.inf, 0
    for start in range(0, total, chunk):
        values, bits = _enumeration_bits(n, start, min(start + chunk, total))
        acc = None
        for i in range(n):
            idx = bits[i]
            for j in deps[i]:
                idx = (idx << 1) | bits[j]
            contrib = tables[i][idx]
            acc = contrib.copy() if acc is None else acc + contrib
        perf = acc / n
        pos = int(np.argmax(perf))
        if perf[pos] > best_val:
            best_val, best_vec = float(perf[pos]), int(values[pos])
    vec = tuple(int(b) for b in _bits_of(np.array([best_vec]), n)[0])
    return vec, best_val


def save_landscape(landscape: Landscape, path, seed=None) -> None:
    """Write a landscape as text: header, 0/1 matrix rows, 17-digit tables."""
    m = landscape.matrix
    seed = landscape.meta.get("seed") if seed is None else seed
    lines = [
        "# orgsim landscape v1",
        f"kind: {m.kind}",
        f"k: {m.k}",
        f"n_decisions: {m.n_decisions}",
        f"seed: {seed if seed is not None else 'none'}",
        "matrix:",
    ]
    lines += ["".join("1" if x else "0" for x in row) for row in m.depends]
    lines.append("tables:")
    lines += [" ".join(f"{v:.17g}" for v in t) for t in landscape.tables]
    Path(path).write_text("\n".join(lines) + "\n")


def load_landscape(path) -> Landscape:
    lines = Path(path).read_text().splitlines()
    header = {}
    pos = 1
    while lines[pos] != "matrix:":
        key, _, value = lines[pos].partition(":")
        header[key.strip()] = value.strip()
        pos += 1
    n = int(header["n_decisions"])
    rows = lines[pos + 1:pos + 1 + n]
    dep = np.array([[c == "1" for c in row] for row in rows], dtype=bool)
    if lines[pos + 1 + n] != "tables:":
        raise ConfigurationError(f"{path}: expected 'tables:' after {n} matrix rows")
    tables = tuple(
        tuple(float(v) for v in row.split()) for row in lines[pos + 2 + n:pos + 2 + 2 * n]
    )
    matrix = InfluenceMatrix(dep, kind=header["kind"], k=int(header["k"]))
    meta = {} if header["seed"] == "none" else {"seed": header["seed"]}
    return Landscape(matrix, tables, meta=meta)
