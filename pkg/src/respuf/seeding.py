"""Deterministic seed splitting.

Every random stream in the package is derived from one master seed plus a
key path such as ``("device", 7)`` or ``("probe", "temp", 3, 7, 0)``. Streams
never depend on evaluation order, so work can be split across processes
without changing results.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_word(part: int | str) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"seed key parts must be non-negative, got {part}")
        return int(part)
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def split_seed(master: int, *path: int | str) -> np.random.SeedSequence:
    """Return the SeedSequence for ``path`` under ``master``.

    Integer parts are used as-is; string parts map to the first 64 bits of
    their SHA-256 digest.
    """
    return np.random.SeedSequence(entropy=int(master), spawn_key=tuple(_key_word(p) for p in path))


def rng_for(master: int, *path: int | str) -> np.random.Generator:
    return np.random.default_rng(split_seed(master, *path))
