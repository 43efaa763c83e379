"""Deterministic derivation of independent RNG streams.

Every stochastic component draws from its own stream derived from the
experiment seed plus a tag tuple, so results do not depend on scheduling
or call order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *tags) -> int:
    """Stable sub-seed from a hash of (seed, *tags)."""
    digest = hashlib.sha256(repr((int(seed),) + tags).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(seed: int, *tags) -> np.random.Generator:
    """Generator seeded from a stable hash of (seed, *tags)."""
    return np.random.default_rng(derive_seed(seed, *tags))
