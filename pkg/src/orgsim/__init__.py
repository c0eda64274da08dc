"""Simulation of multi-unit organizations searching NK performance landscapes."""

__version__ = "0.1.0"

from .exceptions import ConfigurationError, DomainError, SimulationStateError  # noqa: E402
from .landscape import (  # noqa: E402
    InfluenceMatrix,
    Landscape,
    build_influence_matrix,
    exhaustive_optimum,
    generate_landscape,
    load_landscape,
    save_landscape,
)
from .engine import SimConfig, run_grid, run_simulation  # noqa: E402

__all__ = [
    "ConfigurationError",
    "DomainError",
    "SimulationStateError",
    "InfluenceMatrix",
    "Landscape",
    "build_influence_matrix",
    "exhaustive_optimum",
    "generate_landscape",
    "load_landscape",
    "save_landscape",
    "SimConfig",
    "run_grid",
    "run_simulation",
]
