"""Deterministic derivation of independent random streams."""
from __future__ import annotations

import zlib

import numpy as np

# Stream labels are hashed so that adding a new consumer never shifts existing ones.


def _label(name: str) -> int:
    return zlib.crc32(name.encode("ascii"))


def derive(seed: int, name: str, *ids: int) -> np.random.Generator:
    """Generator for the unit ``(name, *ids)`` under a master ``seed``.

    The stream depends only on the arguments, never on call order, which is what
    keeps pipeline output independent of the number of workers.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_label(name), *map(int, ids)))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
