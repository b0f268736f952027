"""Deterministic, splittable random streams.

Every stochastic component draws from a named substream derived from the
experiment seed via ``numpy``'s SeedSequence spawn keys. Substreams are
independent of each other and of execution order, which makes replications
safe to run concurrently while staying bit-reproducible.
"""

from __future__ import annotations

import numpy as np

# Fixed tags so call sites cannot collide by accident.
STREAM_ENV = 0
STREAM_DATASET = 1
STREAM_TRAIN = 2
STREAM_TEST_CONTEXTS = 3
STREAM_TRUE_VALUE = 4


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return a generator for the substream named by ``key`` under ``seed``.

    The same (seed, key) always yields the same stream; distinct keys yield
    statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)
