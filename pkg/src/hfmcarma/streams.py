"""Deterministic, splittable random streams.

A stream is identified by a 64-bit base seed plus an index tuple; the same
identifiers always give the same ``numpy.random.Generator``, independent of
the order in which streams are created.
"""
from __future__ import annotations

import numpy as np

SEED_LIMIT = 2**64


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < SEED_LIMIT:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def stream(base_seed: int, *index: int) -> np.random.Generator:
    """Generator for stream ``index`` under ``base_seed``."""
    ss = np.random.SeedSequence(check_seed(base_seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> tuple[np.random.Generator, int | None]:
    """Accept a seed or a Generator; return the generator and the seed if known."""
    if isinstance(rng, np.random.Generator):
        return rng, None
    seed = check_seed(rng)
    return stream(seed), seed
