"""Seed handling: every random stream is a child of a ``SeedSequence``."""
from __future__ import annotations

import numpy as np


def seed_sequence(seed=None) -> np.random.SeedSequence:
    """A fresh ``SeedSequence`` for ``seed``.

    Existing sequences are copied rather than reused, since ``spawn`` mutates
    its receiver and would make repeated calls non-reproducible.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key, pool_size=seed.pool_size)
    return np.random.SeedSequence(seed)


def spawn(seed, count: int) -> list:
    return seed_sequence(seed).spawn(count)


def derive(seed, *keys: int) -> np.random.SeedSequence:
    """Child sequence addressed by integer ``keys``, independent of spawn order."""
    base = seed_sequence(seed)
    return np.random.SeedSequence(base.entropy, spawn_key=tuple(base.spawn_key) + tuple(int(k) for k in keys))


def generator(seed=None) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed) if isinstance(seed, np.random.SeedSequence) else seed)
