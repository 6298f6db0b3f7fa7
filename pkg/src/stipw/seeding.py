"""Deterministic RNG streams keyed by (master seed, string/int labels).

Streams are derived by hashing the label path with SHA-256, so adding new
settings or stages never perturbs existing ones, and derivation does not
depend on the process hash seed.
"""

from __future__ import annotations

import hashlib

import numpy as np


def seed_words(master_seed: int, *labels) -> list[int]:
    """Four 64-bit words derived from the master seed and a label path."""
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode())
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode())
    digest = h.digest()
    return [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]


def rng_for(master_seed: int, *labels) -> np.random.Generator:
    """Independent generator for one stage of one run."""
    return np.random.Generator(np.random.PCG64(seed_words(master_seed, *labels)))
