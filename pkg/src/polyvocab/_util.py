"""Small helpers shared across modules."""

from __future__ import annotations

import hashlib
import math
import zlib
from collections.abc import Mapping
from pathlib import Path

import numpy as np


def largest_remainder(weights: Mapping[str, float], total: int) -> dict[str, int]:
    """Round ``total * w / sum(w)`` to integers summing exactly to ``total``.

    Leftover units go to the largest fractional parts; ties are broken by key
    order so the result is deterministic.
    """
    if total < 0:
        raise ValueError("total must be nonnegative")
    keys = sorted(weights)
    mass = math.fsum(weights[k] for k in keys)
    if not keys or mass <= 0:
        raise ValueError("weights must be non-empty with positive mass")
    exact = {k: total * weights[k] / mass for k in keys}
    out = {k: int(math.floor(exact[k])) for k in keys}
    short = total - sum(out.values())
    order = sorted(keys, key=lambda k: (-(exact[k] - out[k]), k))
    for k in order[:short]:
        out[k] += 1
    return out


def derive_rng(seed: int, *labels: str) -> np.random.Generator:
    """A generator keyed by ``seed`` and any number of string labels."""
    entropy = [int(seed) & 0xFFFFFFFF] + [zlib.crc32(s.encode("utf-8")) for s in labels]
    return np.random.default_rng(entropy)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
