"""Counter-based uniform stream for (x, z) pairs.

Every coordinate is a pure function of (seed, replicate, pair index,
coordinate, x-or-z), so any block of pairs can be generated independently
of how the work is split.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_BLOCK = 4  # Philox4x64 yields four 64-bit words per counter value


def _key(seed: int, replicate: int) -> list[int]:
    return [int(seed) & _MASK64, int(replicate) & _MASK64]


def uniform_pairs(seed: int, replicate: int, start: int, stop: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (x, z), each of shape (stop - start, d), for pairs start..stop-1.

    Pair i owns counters [i * b, (i + 1) * b) with b = ceil(2d / 4); word j of
    its block is x_{j+1} for j < d and z_{j-d+1} for d <= j < 2d.
    """
    if stop < start:
        raise ValueError("stop must be >= start")
    count = stop - start
    blocks = -(-2 * d // _BLOCK)
    bg = np.random.Philox(key=_key(seed, replicate), counter=[start * blocks, 0, 0, 0])
    raw = bg.random_raw(count * blocks * _BLOCK).reshape(count, blocks * _BLOCK)[:, : 2 * d]
    # top 53 bits -> [0, 1)
    u = (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
    return u[:, :d], u[:, d:]
