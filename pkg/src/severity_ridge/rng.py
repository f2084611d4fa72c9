"""SplitMix64 generator, scalar and vectorized.

Every random draw in the package goes through this module so that cohorts
and splits are bit-reproducible across platforms and languages. The
vectorized helpers operate on arrays of independent 64-bit states, one per
stream; numpy ``uint64`` arithmetic wraps modulo 2**64, which is exactly
what the algorithm needs.
"""

from __future__ import annotations

import math

import numpy as np

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53

_U_GAMMA = np.uint64(GOLDEN_GAMMA)
_U_MUL1 = np.uint64(_MUL1)
_U_MUL2 = np.uint64(_MUL2)
_U30, _U27, _U31, _U11 = (np.uint64(k) for k in (30, 27, 31, 11))


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def stream_seed(master_seed: int, index: int) -> int:
    """Seed of the independent stream used for item ``index``."""
    return (master_seed ^ (index * GOLDEN_GAMMA)) & MASK64


class SplitMix64:
    """Sequential SplitMix64 stream.

    Parameters
    ----------
    seed : int
        Initial 64-bit state. Values outside ``[0, 2**64)`` are reduced
        modulo 2**64.
    """

    def __init__(self, seed: int) -> None:
        self.state = int(seed) & MASK64

    def next64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return _mix(self.state)

    def uniform01(self) -> float:
        return (self.next64() >> 11) * _INV_2_53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + self.uniform01() * (hi - lo)

    def randint(self, a: int, b: int) -> int:
        """Integer in the closed range ``[a, b]``."""
        span = b - a + 1
        while True:
            u = self.uniform01()
            if u < 1.0:
                break
        # fl(u * span) can round up to span when span is large
        return a + min(math.floor(u * span), span - 1)

    def next64_batch(self, count: int) -> np.ndarray:
        """Next ``count`` outputs as a uint64 array, advancing the stream."""
        steps = np.arange(1, count + 1, dtype=np.uint64)
        states = np.uint64(self.state) + steps * _U_GAMMA
        self.state = (self.state + count * GOLDEN_GAMMA) & MASK64
        return mix_array(states)


def mix_array(states: np.ndarray) -> np.ndarray:
    """Apply the SplitMix64 output function elementwise."""
    z = states.astype(np.uint64, copy=True)
    z = (z ^ (z >> _U30)) * _U_MUL1
    z = (z ^ (z >> _U27)) * _U_MUL2
    return z ^ (z >> _U31)


class StreamArray:
    """A bank of independent SplitMix64 streams advanced in lockstep.

    Draw ``k`` from this object is the same as draw ``k`` from each
    :class:`SplitMix64` built with the corresponding seed.
    """

    def __init__(self, seeds: np.ndarray) -> None:
        self.state = np.asarray(seeds, dtype=np.uint64).copy()

    @classmethod
    def for_items(cls, master_seed: int, start: int, stop: int) -> "StreamArray":
        idx = np.arange(start, stop, dtype=np.uint64)
        return cls(np.uint64(master_seed & MASK64) ^ (idx * _U_GAMMA))

    def __len__(self) -> int:
        return self.state.shape[0]

    def next64(self) -> np.ndarray:
        self.state += _U_GAMMA
        return mix_array(self.state)

    def uniform01(self) -> np.ndarray:
        return (self.next64() >> _U11).astype(np.float64) * _INV_2_53

    def uniform(self, lo, hi) -> np.ndarray:
        return lo + self.uniform01() * (np.asarray(hi, dtype=np.float64) - lo)

    def randint(self, a: int, b: int) -> np.ndarray:
        # uniform01 never returns 1.0 with the 53-bit mantissa construction,
        # so the scalar re-draw branch has no vector counterpart.
        span = b - a + 1
        k = np.floor(self.uniform01() * float(span)).astype(np.int64)
        return a + np.minimum(k, span - 1)
