"""Root-seed fan-out.

A child stream is keyed by ``(root_seed, crc32(tag))`` through
:class:`numpy.random.SeedSequence`, so adding a new consumer never shifts the
random stream of an existing one.
"""

from __future__ import annotations

import zlib

import numpy as np


def child_seed(seed: int, tag: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(tag.encode("utf-8"))])


def child_rng(seed: int, tag: str) -> np.random.Generator:
    return np.random.default_rng(child_seed(seed, tag))


def child_int(seed: int, tag: str) -> int:
    """A 31-bit integer seed for APIs that take plain ints."""
    return int(child_seed(seed, tag).generate_state(1)[0] & 0x7FFFFFFF)
