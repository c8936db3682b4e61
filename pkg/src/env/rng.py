"""Counter-based random streams keyed by (seed, purpose, index).

Every draw in the simulator and the policy comes from a Philox generator whose
key is derived from the episode seed plus a tuple such as ("demand", t), so a
draw never depends on how many other draws happened before it.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK_64 = (1 << 64) - 1


def _key_word(part: int | str) -> int:
    if isinstance(part, str):
        return int.from_bytes(hashlib.blake2b(part.encode(), digest_size=8).digest(), "little")
    return int(part) & MASK_64


def _seed_sequence(seed: int, key: tuple[int | str, ...]) -> np.random.SeedSequence:
    words = []
    for part in key:
        word = _key_word(part)
        # spawn_key entries are 32-bit words
        words.extend([word & 0xFFFFFFFF, word >> 32])
    return np.random.SeedSequence(int(seed) & MASK_64, spawn_key=tuple(words))


def stream(seed: int, *key: int | str) -> np.random.Generator:
    """Independent generator for one (seed, key) pair."""
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, key)))


def derive_seed(seed: int, *key: int | str) -> int:
    """64-bit child seed, e.g. derive_seed(root, "episode", 12)."""
    lo, hi = _seed_sequence(seed, key).generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)
