"""Seed derivation for reproducible, order-independent random streams.

Every stream is keyed by ``(master_seed, key, run, label)`` and backed by a
counter-based Philox generator, so a run's draws never depend on which
process executes it or in which order.
"""
from __future__ import annotations

import hashlib
import json

import numpy as np

STREAM_LABELS = {"landscape": 0, "dynamics": 1, "bootstrap": 2, "test": 3}


def stable_hash(payload) -> int:
    """64-bit integer hash of a JSON-serializable payload (canonical form)."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def make_rng(master_seed: int, key: int, run: int, label: str) -> np.random.Generator:
    if master_seed < 0:
        raise ValueError(f"master_seed must be non-negative, got {master_seed}")
    seq = np.random.SeedSequence(
        entropy=int(master_seed),
        spawn_key=(int(key), int(run), STREAM_LABELS[label]),
    )
    return np.random.Generator(np.random.Philox(seq))
