"""Counter-based random streams and discrete sampling.

All randomness in the package flows through Philox substreams keyed by
(seed, purpose, path...).  Philox is counter-based, so a substream's output
depends only on its key, never on how many other substreams exist or in
which order they are consumed.  That is what makes Monte Carlo runs
bit-reproducible under any thread schedule.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

# Purpose tags keep unrelated consumers on disjoint key spaces.
STREAM_WALK = 1
STREAM_GAUGE = 2
STREAM_BOOTSTRAP = 3
STREAM_SCAN = 4
STREAM_TEST = 9

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    # Standard splitmix64 finalizer; good avalanche, cheap, portable.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _mix_path(parts: tuple[int, ...]) -> int:
    h = 0x243F6A8885A308D3
    for p in parts:
        h = _splitmix64(h ^ (int(p) & _MASK64))
    return h


def substream(seed: int, *path: int) -> Generator:
    """Independent generator for (seed, *path).

    Same arguments always give the same stream; distinct paths give
    streams that never collide (128-bit Philox key).
    """
    key = np.array([int(seed) & _MASK64, _mix_path(tuple(path))], dtype=np.uint64)
    return Generator(Philox(key=key))


class AliasSampler:
    """Walker/Vose alias table for a finite distribution.

    Sampling consumes exactly two uniforms per draw, so the draw count per
    step is fixed no matter what the probabilities are.
    """

    def __init__(self, probs):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a nonempty 1-d array")
        if np.any(p < 0):
            raise ValueError("negative probability")
        total = p.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        k = p.size
        scaled = p * k / total
        self.n = k
        self.prob = np.ones(k)
        self.alias = np.arange(k)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        scaled = scaled.copy()
        while small and large:
            s = small.pop()
            l = large.pop()
            self.prob[s] = scaled[s]
            self.alias[s] = l
            scaled[l] = scaled[l] - (1.0 - scaled[s])
            (small if scaled[l] < 1.0 else large).append(l)
        # leftovers are 1 up to rounding
        for i in small + large:
            self.prob[i] = 1.0

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms u of shape (..., 2) to atom indices."""
        u = np.asarray(u)
        idx = np.minimum((u[..., 0] * self.n).astype(np.int64), self.n - 1)
        take = u[..., 1] < self.prob[idx]
        return np.where(take, idx, self.alias[idx])
