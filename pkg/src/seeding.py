"""
Named random streams derived from one top-level seed
"""
import zlib
from typing import List, Union

import numpy as np

from src.exceptions import DomainError

# Fixed ids; changing one changes every downstream artifact
STREAMS = {
    "gen": 1,
    "filter": 2,
    "train": 3,
    "eval": 4,
    "augment": 5,
}

Key = Union[int, str]


def _key_to_int(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise DomainError(f"stream keys must be non-negative, got {key}")
    return int(key)


def stream_entropy(seed: int, stream: str, *keys: Key) -> List[int]:
    """Entropy list for np.random.SeedSequence identifying one stream"""
    if stream not in STREAMS:
        raise DomainError(f"unknown random stream '{stream}'")
    if seed < 0:
        raise DomainError(f"seed must be non-negative, got {seed}")
    return [int(seed), STREAMS[stream]] + [_key_to_int(k) for k in keys]


def make_rng(seed: int, stream: str, *keys: Key) -> np.random.Generator:
    """
    Independent generator for (seed, stream, keys)

    Args:
        seed: Top-level run seed
        stream: One of gen, filter, train, eval, augment
        *keys: Extra discriminators (episode id, iteration, phase, ...)

    Returns:
        numpy Generator; equal arguments always give identical draws
    """
    return np.random.default_rng(stream_entropy(seed, stream, *keys))
