"""Deterministic random-stream derivation.

Every sampling routine in the package takes an explicit seed and derives
independent child streams from (seed, *path) tuples of non-negative
integers, so results are identical no matter how work is scheduled.
"""

from __future__ import annotations

import numpy as np


def _entropy(seed, path):
    if isinstance(seed, (tuple, list)):
        head = tuple(int(k) for k in seed)
    else:
        head = (int(seed),)
    ent = head + tuple(int(k) for k in path)
    if any(k < 0 for k in ent):
        raise ValueError(f"seed path must be non-negative integers, got {ent}")
    return ent


def seed_sequence(seed, *path) -> np.random.SeedSequence:
    return np.random.SeedSequence(_entropy(seed, path))


def derive_rng(seed, *path) -> np.random.Generator:
    """Generator for the stream identified by (seed, *path)."""
    return np.random.default_rng(seed_sequence(seed, *path))


def derive_int(seed, *path) -> int:
    """A stable 64-bit integer key for the stream (seed, *path)."""
    return int(seed_sequence(seed, *path).generate_state(1, np.uint64)[0])
