"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, domain)`` whose counter
starts at an offset given by up to two integer indices (e.g. trial number,
or seed replica and time step). Streams never overlap, so work split across
processes reproduces the serial result exactly.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["stream", "uniforms"]

_MASK64 = (1 << 64) - 1


def _domain_word(domain: str) -> int:
    return zlib.crc32(domain.encode("utf-8"))


def stream(seed: int, domain: str, *index: int) -> np.random.Generator:
    if len(index) > 2:
        raise ValueError("at most two stream indices")
    if seed < 0 or seed > _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    words = [0, 0] + [int(i) & _MASK64 for i in index] + [0] * (2 - len(index))
    key = np.array([seed, _domain_word(domain)], dtype=np.uint64)
    bitgen = np.random.Philox(counter=np.array(words, dtype=np.uint64), key=key)
    return np.random.Generator(bitgen)


def uniforms(seed: int, domain: str, indices, size: int) -> np.ndarray:
    """Stack ``size`` uniforms from each stream ``(seed, domain, i)``, one row per index."""
    out = np.empty((len(indices), size))
    for row, i in enumerate(indices):
        out[row] = stream(seed, domain, i).random(size)
    return out
