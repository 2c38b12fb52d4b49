"""Deterministic random number generation.

Everything stochastic in this package (weight init, shuffles, negative
sampling, seed-set sampling) runs off SplitMix64 so results are bit-stable
across platforms and runs. numpy's own generators are deliberately not
used for anything that affects outputs.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


class SplitMix64:
    """Scalar SplitMix64 stream over Python ints (no overflow traps)."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix(self._state)

    def next_float(self) -> float:
        """Uniform double in (0, 1]."""
        return ((self.next_uint64() >> 11) + 1) * 2.0**-53

    def randint_below(self, n: int) -> int:
        """Uniform int in [0, n). Modulo bias is negligible for n << 2^64."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_uint64() % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, count: int) -> list[int]:
        """`count` distinct indices from range(n), without replacement."""
        if count > n:
            raise ValueError(f"cannot sample {count} from {n}")
        pool = list(range(n))
        # partial Fisher-Yates: fix positions n-1 .. n-count
        out = []
        for i in range(n - 1, n - 1 - count, -1):
            j = self.randint_below(i + 1)
            pool[i], pool[j] = pool[j], pool[i]
            out.append(pool[i])
        return out


def splitmix64_array(seed: int, n: int) -> np.ndarray:
    """First n outputs of the SplitMix64 stream, vectorized (uint64)."""
    i = np.arange(1, n + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK64) + i * np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def gaussian_array(seed: int, n: int) -> np.ndarray:
    """n standard normals via Box-Muller over the SplitMix64 stream.

    Consecutive stream outputs are paired as (u1, u2); each pair yields
    (r cos, r sin) which are emitted in that order. Uniforms live in
    (0, 1] so the log never sees zero.
    """
    n_pairs = (n + 1) // 2
    raw = splitmix64_array(seed, 2 * n_pairs)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * math.pi * u2
    out = np.empty(2 * n_pairs, dtype=np.float64)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:n]
