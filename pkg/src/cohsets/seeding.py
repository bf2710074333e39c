"""Deterministic derivation of per-task RNG seeds from a single master seed."""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix_seed(master_seed: int, index: int) -> int:
    """Derive the ``index``-th sub-seed from ``master_seed``.

    Uses one splitmix64 avalanche step on ``master + (index+1) * golden``,
    so consecutive indices give statistically independent 64-bit seeds and
    the derivation is reproducible across processes.
    """
    z = (int(master_seed) + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def rng_for(master_seed: int, index: int) -> np.random.Generator:
    """Generator seeded with ``mix_seed(master_seed, index)``."""
    return np.random.default_rng(mix_seed(master_seed, index))
