"""Deterministic random-stream derivation.

One master seed fans out into independent, reproducible streams: every
work unit (a replica, a block of replicas, a component of a forest) gets
its own Philox generator keyed by SplitMix64 words derived from the
master seed and the unit index.  Results are therefore identical for any
worker count and any execution order.
"""

from __future__ import annotations

import os

import numpy as np

DEFAULT_SEED = 0xC0FFEE

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance one SplitMix64 step; returns (new_state, output word)."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z = z ^ (z >> 31)
    return state, z


def derive_words(seed: int, index: int, count: int = 2) -> tuple[int, ...]:
    """`count` 64-bit words for work unit `index` under the master seed.

    The unit index is folded into the state before mixing so that
    neighbouring indices give unrelated streams.
    """
    if index < 0:
        raise ValueError("work unit index must be nonnegative")
    state = (seed & _MASK) ^ ((index * _GOLDEN) & _MASK)
    # burn one step so that index 0 with seed 0 does not start at state 0
    state, _ = splitmix64(state)
    words = []
    for _ in range(count):
        state, w = splitmix64(state)
        words.append(w)
    return tuple(words)


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Philox generator for work unit `index` keyed off the master seed."""
    key = derive_words(seed, index, 2)
    return np.random.Generator(np.random.Philox(key=np.array(key, dtype=np.uint64)))


def resolve_seed(explicit: int | None) -> int:
    """Explicit seed if given, else MGW_SEED from the environment, else default."""
    if explicit is not None:
        return int(explicit)
    env = os.environ.get("MGW_SEED")
    if env is not None:
        try:
            return int(env, 0)
        except ValueError as exc:
            raise ValueError(f"MGW_SEED is not an integer: {env!r}") from exc
    return DEFAULT_SEED
