"""Deterministic RNG derivation from a master seed plus an integer path.

Every stochastic unit of work (realization, knot screen, trace chunk,
detector stream) derives its generator from (master_seed, path...) only, so
results never depend on evaluation order.
"""

from __future__ import annotations

import numpy as np


def _sequence(seed: int, path: tuple[int, ...]) -> np.random.SeedSequence:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    if any(p < 0 for p in path):
        raise ValueError("rng path entries must be nonnegative")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Generator keyed by (seed, path); independent across distinct paths."""
    return np.random.default_rng(_sequence(seed, path))


def derive_seed(seed: int, *path: int) -> int:
    """Collapse (seed, path) into a fresh integer seed."""
    return int(_sequence(seed, path).generate_state(1, np.uint64)[0])
