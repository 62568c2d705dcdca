"""Seeded, splittable random streams.

All randomness in mixalign goes through ``make_rng``. The algorithm is
numpy's PCG64 bit generator seeded by a ``SeedSequence`` built from the master
seed followed by the stream keys ("PCG64/SeedSequence"). Keys make every
stream addressable, so results never depend on the order in which workers
happen to run.
"""

import hashlib
from typing import Union

import numpy as np

Key = Union[int, str]

_MASK64 = (1 << 64) - 1


def key_to_int(key: Key) -> int:
    """Map a stream key to a non-negative 64-bit integer."""
    if isinstance(key, (int, np.integer)):
        return int(key) & _MASK64
    digest = hashlib.blake2b(str(key).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int, *keys: Key) -> np.random.Generator:
    """Return the generator for stream ``(seed, *keys)``."""
    entropy = [key_to_int(seed)] + [key_to_int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def text_seed(text: str) -> int:
    """Stable 64-bit seed derived from arbitrary text."""
    return key_to_int(text)
