"""Deterministic counter-based random numbers.

All randomness in the library (disorder realizations, solver starting
vectors) comes from the splitmix64 mixing function applied to
``seed + (counter + 1) * GAMMA`` with

    GAMMA = 0x9E3779B97F4A7C15
    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

Doubles are built from the top 53 bits of the mixed word, uniform on
[0, 1).  A draw is a pure function of (seed, counter), so any slice of a
stream can be produced independently and identical seeds give bit-identical
streams on every platform.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_INV53 = float(2.0**-53)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def uniform01(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Draws ``count`` doubles uniform on [0, 1) at counters start..start+count-1."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _GAMMA)
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


def uniform(seed: int, count: int, low: float, high: float, start: int = 0) -> np.ndarray:
    """Draws uniform on [low, high); same counter convention as uniform01."""
    return low + (high - low) * uniform01(seed, count, start=start)


def starting_vector(seed: int, n: int) -> np.ndarray:
    """Seeded nonconstant unit vector used to start iterative eigensolvers."""
    v = uniform01(seed, n) - 0.5
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:  # cannot happen for n >= 1 in practice, but stay safe
        v[0] = 1.0
        nrm = 1.0
    return v / nrm
