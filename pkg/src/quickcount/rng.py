"""Seeded random streams.

Every random quantity in a study is keyed by a path of integers below the
master seed, e.g. ``(seed, STUDY, rep, COPULA)``. Streams for different keys
are statistically independent and do not depend on execution order, so
replications can run in any order or in parallel with identical results.
"""
from __future__ import annotations

import numpy as np

# stream tags
CALIBRATION = 0
STUDY = 1
SAMPLE = 0
COPULA = 1
BASELINE = 2
VICTORY = 3


def seed_sequence(seed, *path: int) -> np.random.SeedSequence:
    """SeedSequence for ``seed`` extended by the integer ``path``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(path))
    if isinstance(seed, tuple):
        seed, *rest = seed
        path = tuple(rest) + tuple(path)
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))


def generator(seed, *path: int) -> np.random.Generator:
    """PCG64 generator for ``seed``; an existing Generator is passed through."""
    if isinstance(seed, np.random.Generator):
        if path:
            raise ValueError("cannot derive a keyed stream from a live Generator")
        return seed
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *path)))
