"""Deterministic seed derivation.

Every random stream in a run is derived from the master seed plus a tuple of
labels (role, agent name, environment id, episode index, ...).  Streams are
therefore independent of scheduling and of each other, which is what makes
parallel execution reproducible and per-environment estimates statistically
independent.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *parts: object) -> int:
    """Return a 64-bit seed from the master seed and a label tuple."""
    key = repr((int(master),) + parts).encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "little")
