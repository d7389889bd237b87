"""Independent, reproducible random streams keyed by (master seed, concern)."""
from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, tag: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(tag.encode())]))
