"""Deterministic random streams, split per entity.

One master seed fans out into independent named streams so that adding or
removing an entity never perturbs the draws of another.  Stream seeds are
derived with SHA-256 over "seed/tag"; never use the built-in hash() here,
it is salted per process and would break reproducibility.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(seed: int, tag: str) -> int:
    digest = hashlib.sha256(f"{seed}/{tag}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class SeedSplitter:
    """Hands out one cached random.Random per (seed, tag) pair."""

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, random.Random] = {}

    def stream(self, tag: str) -> random.Random:
        rng = self._streams.get(tag)
        if rng is None:
            rng = random.Random(derive_seed(self.seed, tag))
            self._streams[tag] = rng
        return rng
