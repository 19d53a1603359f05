"""Counter-based random numbers.

Every uniform is a pure function of ``(seed, stream, index)``: the value is
the ``index``-th output of a SplitMix64 generator seeded with a key derived
from ``seed`` and ``stream``.  Materialising any index range therefore gives
the same numbers regardless of the order in which ranges are requested.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, stream: int) -> np.uint64:
    k = mix64(np.array([(int(seed) + (int(stream) + 1) * int(GAMMA)) & _MASK64], dtype=np.uint64))
    return k[0]


def raw(seed: int, stream: int, start: int, stop: int) -> np.ndarray:
    """Raw 64-bit outputs for indices ``start <= i < stop`` (non-negative)."""
    if start < 0 or stop < start:
        raise ValueError("indices must satisfy 0 <= start <= stop")
    key = stream_key(seed, stream)
    idx = np.arange(start + 1, stop + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(key + idx * GAMMA)


def uniforms(seed: int, stream: int, start: int, stop: int) -> np.ndarray:
    """Doubles in ``[0, 1)`` with 53 random bits."""
    return (raw(seed, stream, start, stop) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def bits(seed: int, stream: int, start: int, stop: int) -> np.ndarray:
    return (raw(seed, stream, start, stop) >> np.uint64(63)).astype(np.uint8)


def derive_seeds(seed: int, count: int) -> np.ndarray:
    """Per-sample seeds; sample ``i`` always gets the same one."""
    return raw(seed, 0x5EED, 0, count)
