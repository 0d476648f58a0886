"""Deterministic counter-based random streams.

Streams are keyed by hashing the seed material (ints, tuples, strings), so
worker indices can be mixed into a seed without colliding and the same
seed always reproduces the same stream on any platform.
"""

from __future__ import annotations

import hashlib

import numpy as np


def philox_key(seed) -> np.ndarray:
    digest = hashlib.sha256(repr(seed).encode()).digest()
    return np.frombuffer(digest, dtype=np.uint64)[:2]


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=philox_key(seed)))
