"""Deterministic RNG substreams.

Every randomized routine in this package takes an integer ``seed`` and derives
its generator through :func:`substream`, keyed by a path of labels.  Two calls
with the same seed and path are bitwise identical; distinct paths give
independent streams.  Sharded Monte Carlo loops derive one substream per shard
index, so results are reproducible for a fixed (seed, shard count).
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["substream", "stable_int"]


def stable_int(label) -> int:
    """Map a label (str/int/float/tuple) to a stable 32-bit integer.

    Python's builtin ``hash`` is salted per process, so we go through
    blake2s for strings.  Ints pass through (masked to 63 bits).
    """
    if isinstance(label, (int, np.integer)):
        return int(label) & 0x7FFFFFFFFFFFFFFF
    if isinstance(label, float):
        label = repr(label)
    if isinstance(label, tuple):
        label = "/".join(repr(x) for x in label)
    digest = hashlib.blake2s(str(label).encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "big")


def substream(seed: int, *path) -> np.random.Generator:
    """Generator for (seed, path).  Independent streams for distinct paths."""
    entropy = [int(seed) & 0x7FFFFFFFFFFFFFFF] + [stable_int(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))
