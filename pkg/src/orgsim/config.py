"""Grid configuration files (YAML key-value) and their validation."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import yaml

from .engine import SimConfig
from .exceptions import ConfigurationError
from .landscape import KINDS, STYLIZED_K
from .rng import stable_hash

TOP_KEYS = {
    "master_seed", "replications", "horizon", "n_decisions", "m_agents", "capacity",
    "paired_landscapes", "fallthrough", "record_beliefs", "grid",
}
GRID_KEYS = {"kind", "pair_prob", "alpha", "tau"}
REQUIRED = ("master_seed", "grid")
# SimConfig field -> config file key
_FIELD_KEYS = {
    "capacities": "capacity", "kind": "grid.kind", "k": "grid.kind", "alpha": "grid.alpha",
    "pair_prob": "grid.pair_prob", "tau": "grid.tau", "mode": "grid.tau",
}


@dataclass(frozen=True)
class GridConfig:
    master_seed: int
    kinds: tuple = (("decomposable2", 2), ("nondecomposable5", 5))
    pair_probs: tuple = tuple(round(0.05 * i, 10) for i in range(11))
    alphas: tuple = (0.25, 0.5, 0.75)
    taus: tuple = (None, 25)
    replications: int = 800
    horizon: int = 150
    n_decisions: int = 15
    m_agents: int = 5
    capacity: tuple = (5, 5, 5, 5, 5)
    paired_landscapes: bool = True
    fallthrough: bool = True
    record_beliefs: bool = False
    source: str = field(default="<memory>", compare=False)

    def cells(self) -> list[SimConfig]:
        out = []
        for (kind, k), tau, alpha, prob in itertools.product(self.kinds, self.taus, self.alphas, self.pair_probs):
            out.append(
                SimConfig(
                    kind=kind, k=k, alpha=alpha, pair_prob=prob, tau=tau,
                    horizon=self.horizon, n_decisions=self.n_decisions, m_agents=self.m_agents,
                    capacities=self.capacity, master_seed=self.master_seed,
                    replications=self.replications, paired_landscapes=self.paired_landscapes,
                    fallthrough=self.fallthrough, record_beliefs=self.record_beliefs,
                )
            )
        return out

    def canonical(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "kinds": [list(k) for k in self.kinds],
            "pair_probs": list(self.pair_probs),
            "alphas": list(self.alphas),
            "taus": list(self.taus),
            "replications": self.replications,
            "horizon": self.horizon,
            "n_decisions": self.n_decisions,
            "m_agents": self.m_agents,
            "capacity": list(self.capacity),
            "paired_landscapes": self.paired_landscapes,
            "fallthrough": self.fallthrough,
            "record_beliefs": self.record_beliefs,
        }

    @property
    def config_hash(self) -> str:
        return f"{stable_hash(self.canonical()):016x}"

    def with_overrides(self, seed: int | None = None, replications: int | None = None) -> "GridConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, master_seed=seed)
        if replications is not None:
            cfg = replace(cfg, replications=replications)
        return cfg


def _parse_range(text: str) -> list[float]:
    start, step, stop = (float(x) for x in text.split(":"))
    if step <= 0:
        raise ValueError("range step must be positive")
    n = int(round((stop - start) / step))
    return [round(start + i * step, 10) for i in range(n + 1)]


def _as_list(value):
    if isinstance(value, str) and value.count(":") == 2:
        return _parse_range(value)
    return value if isinstance(value, list) else [value]


def _parse_kind(entry):
    name, _, k = str(entry).partition(":")
    if name not in KINDS:
        raise ValueError(f"unknown kind {name!r}; expected one of {KINDS}")
    if name in STYLIZED_K:
        if k and int(k) != STYLIZED_K[name]:
            raise ValueError(f"kind {name} fixes k={STYLIZED_K[name]}")
        return (name, STYLIZED_K[name])
    if not k:
        raise ValueError("random kind needs a k, e.g. 'random:3'")
    return (name, int(k))


def _parse_tau(entry):
    if entry is None or str(entry).lower() in ("none", "null", "~", "∅"):
        return None
    if isinstance(entry, bool) or int(entry) != entry or int(entry) < 1:
        raise ValueError(f"tau must be 'none' or a positive integer, got {entry!r}")
    return int(entry)


def _line_map(text: str) -> dict:
    lines = {}
    root = yaml.compose(text)
    if not isinstance(root, yaml.MappingNode):
        return lines
    for knode, vnode in root.value:
        lines[knode.value] = knode.start_mark.line + 1
        if knode.value == "grid" and isinstance(vnode, yaml.MappingNode):
            for gk, _ in vnode.value:
                lines[f"grid.{gk.value}"] = gk.start_mark.line + 1
    return lines


def parse_grid_config(text: str, source: str = "<string>") -> GridConfig:
    """Parse and validate a grid config; all problems are reported together."""
    try:
        raw = yaml.safe_load(text)
        lines = _line_map(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{source}: parse error: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{source}: expected a mapping of keys to values")

    errors = []

    def err(key, msg):
        line = lines.get(key, lines.get(key.split(".")[0]))
        where = f"{source}:{line}" if line else source
        errors.append(f"{where}: {key}: {msg}")

    for key in raw:
        if key not in TOP_KEYS:
            err(key, "unknown key")
    for key in REQUIRED:
        if key not in raw:
            err(key, "missing required key (no default is applied)")
    grid = raw.get("grid") or {}
    if not isinstance(grid, dict):
        err("grid", "must be a mapping")
        grid = {}
    for key in grid:
        if key not in GRID_KEYS:
            err(f"grid.{key}", "unknown grid dimension")

    kw = {}

    def integer(key, minimum):
        if key not in raw:
            return
        v = raw[key]
        if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
            err(key, f"must be an integer >= {minimum}, got {v!r}")
        else:
            kw[key] = v

    integer("master_seed", 0)
    integer("replications", 1)
    integer("horizon", 1)
    integer("n_decisions", 1)
    integer("m_agents", 1)
    for key in ("paired_landscapes", "fallthrough", "record_beliefs"):
        if key in raw:
            if not isinstance(raw[key], bool):
                err(key, f"must be true or false, got {raw[key]!r}")
            else:
                kw[key] = raw[key]

    m = kw.get("m_agents", 5)
    if "capacity" in raw:
        cap = raw["capacity"]
        caps = [cap] * m if not isinstance(cap, list) else cap
        if len(caps) != m or any(isinstance(c, bool) or not isinstance(c, int) or c < 1 for c in caps):
            err("capacity", f"must be a positive integer or a list of {m} positive integers, got {cap!r}")
        else:
            kw["capacity"] = tuple(caps)
    else:
        kw["capacity"] = (5,) * m

    def dimension(key, target, parse):
        if key not in grid:
            return
        try:
            values = [parse(v) for v in _as_list(grid[key])]
        except (TypeError, ValueError) as exc:
            err(f"grid.{key}", str(exc))
            return
        if not values:
            err(f"grid.{key}", "needs at least one value")
        elif len(set(values)) != len(values):
            err(f"grid.{key}", "contains duplicate values")
        else:
            kw[target] = tuple(values)

    def probability(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"expected a number in [0, 1], got {v!r}")
        if not 0.0 <= float(v) <= 1.0:
            raise ValueError(f"value {v} outside [0, 1]")
        return float(v)

    dimension("kind", "kinds", _parse_kind)
    dimension("pair_prob", "pair_probs", probability)
    dimension("alpha", "alphas", probability)
    dimension("tau", "taus", _parse_tau)

    if errors:
        raise ConfigurationError("\n".join(errors))
    cfg = GridConfig(source=source, **kw)
    try:
        cfg.cells()
    except ConfigurationError as exc:
        field_name = str(exc).split(":", 1)[0]
        key = _FIELD_KEYS.get(field_name, field_name)
        err(key, str(exc).split(":", 1)[-1].strip())
        raise ConfigurationError("\n".join(errors)) from exc
    return cfg


def load_grid_config(path) -> GridConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"{path}: no such config file")
    return parse_grid_config(path.read_text(), source=str(path))


def builtin_config(name: str) -> GridConfig:
    text = resources.files("orgsim").joinpath("configs", f"{name}.yaml").read_text()
    return parse_grid_config(text, source=f"<builtin:{name}>")
