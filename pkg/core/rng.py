"""
Deterministic random streams.

Every stochastic operation derives its generator from the run seed and a
tuple of integer stream ids:

    SeedSequence(seed, spawn_key=stream) -> PCG64 -> Generator

The same (seed, stream) always yields the same draws on every platform, and
draws never depend on scheduling order.
"""
from typing import Tuple

import numpy as np

from .exceptions import DataValidationError


# Stream ids, first element of the spawn key
STREAM_DATA = 0
STREAM_METHOD = 1
STREAM_NOISE = 2
STREAM_FOLDS = 3
STREAM_CHAIN = 4
STREAM_GROUPS = 5
STREAM_SUBSETS = 6
STREAM_DIY = 7

MAX_SEED = 2 ** 64 - 1


def _sequence(seed: int, stream: Tuple[int, ...]) -> np.random.SeedSequence:
    if seed < 0 or seed > MAX_SEED:
        raise DataValidationError(f"Seed must be an unsigned 64-bit integer; got {seed}")
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))


def child_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for the stream (seed, stream...)."""
    return np.random.Generator(np.random.PCG64(_sequence(seed, stream)))


def child_seed(seed: int, *stream: int) -> int:
    """32-bit integer seed for libraries that take an int ``random_state``."""
    return int(_sequence(seed, stream).generate_state(1, np.uint32)[0])
