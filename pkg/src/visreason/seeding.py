"""Named random substreams derived from one configured seed."""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, *names: object) -> int:
    """A 63-bit integer seed determined by ``seed`` and the stream ``names``."""
    h = hashlib.sha256(repr((int(seed),) + tuple(str(n) for n in names)).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big") >> 1


def rng(seed: int, *names: object) -> np.random.Generator:
    return np.random.default_rng(substream(seed, *names))
