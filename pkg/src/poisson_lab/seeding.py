"""Seed splitting.

Every randomized routine takes a 64-bit root seed. Independent substreams are
derived with :class:`numpy.random.SeedSequence` spawn keys: the stream for a
task identified by integers ``(k1, k2, ...)`` is
``SeedSequence(root, spawn_key=(k1, k2, ...))``. Keys used by the package:

* ``(STREAM_PATH,)`` -- ``sample_path``
* ``(STREAM_INDUCED, attempt)`` -- induced-map excursions (attempt > 0 on retry)
* ``(STREAM_CONFIG, replicate)`` -- suspension configurations
* ``(STREAM_MARKED,)`` -- marked Poisson model
"""
from __future__ import annotations

import numpy as np

STREAM_PATH = 1
STREAM_INDUCED = 2
STREAM_CONFIG = 3
STREAM_MARKED = 4
STREAM_ESTIMATE = 5

MASK64 = (1 << 64) - 1


def seed_sequence(root: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(root) & MASK64, spawn_key=tuple(int(k) for k in key))


def rng(root: int, *key: int) -> np.random.Generator:
    """Generator for the substream ``key`` of ``root``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(root, *key)))


def child_seed(root: int, *key: int) -> int:
    """A derived 64-bit integer seed, for handing to another component."""
    return int(seed_sequence(root, *key).generate_state(1, dtype=np.uint64)[0])
