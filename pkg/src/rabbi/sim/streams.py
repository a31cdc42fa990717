"""Deterministic random stream derivation for experiment replications.

Every (scaling factor, replication, purpose) triple gets its own
independently seeded PCG64 generator, derived from the master seed by
hashing the purpose tag into a SeedSequence spawn key.  Replications are
therefore independent of execution order, chunking, and thread count.
"""

from __future__ import annotations

import hashlib

import numpy as np


def purpose_key(purpose: str) -> int:
    """Stable 64-bit integer derived from a purpose tag string."""
    digest = hashlib.sha256(purpose.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_stream(master_seed: int, k: int, replication: int, purpose: str = "episode") -> np.random.Generator:
    """Generator for one replication of one scaled instance.

    The entropy is the tuple (master_seed, k, replication, H(purpose)),
    so streams never collide across the experiment grid and the same
    tuple always reproduces the same draws.
    """
    if master_seed < 0 or k < 0 or replication < 0:
        raise ValueError("seed components must be nonnegative")
    entropy = [int(master_seed), int(k), int(replication), purpose_key(purpose)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
