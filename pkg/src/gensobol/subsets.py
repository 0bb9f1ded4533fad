"""Bitmask subsets of {1, ..., d} and the Moebius relations between
variance components and lower Sobol' indices.

Index ``j`` lives at bit ``j - 1``. Everything that iterates over subsets
does so in ascending integer order of the bitmask.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass

import numpy as np

MAX_DIM = 20
MAX_ENUM_DIM = 12


class DimensionError(ValueError):
    """Raised when subsets of different ambient dimension are combined, or d is out of range."""


class EnumerationLimitError(ValueError):
    """Raised when an operation would enumerate all 2^d subsets for d > MAX_ENUM_DIM."""


def _check_dim(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or not 1 <= d <= MAX_DIM:
        raise DimensionError(f"dimension must be an integer in [1, {MAX_DIM}], got {d!r}")


def check_enumerable(d: int) -> None:
    if d > MAX_ENUM_DIM:
        raise EnumerationLimitError(
            f"refusing to enumerate 2^{d} subsets (limit d <= {MAX_ENUM_DIM})"
        )


@dataclass(frozen=True, order=True, slots=True)
class SubsetMask:
    """A subset u of {1, ..., d} stored as a bitmask."""

    bits: int
    d: int

    def __post_init__(self) -> None:
        _check_dim(self.d)
        if not 0 <= self.bits < (1 << self.d):
            raise DimensionError(f"bitmask {self.bits} out of range for d={self.d}")

    @classmethod
    def from_indices(cls, indices: Iterable[int], d: int) -> SubsetMask:
        _check_dim(d)
        bits = 0
        for j in indices:
            j = int(j)
            if not 1 <= j <= d:
                raise DimensionError(f"index {j} out of range 1..{d}")
            bits |= 1 << (j - 1)
        return cls(bits, d)

    @classmethod
    def empty(cls, d: int) -> SubsetMask:
        return cls(0, d)

    @classmethod
    def full(cls, d: int) -> SubsetMask:
        _check_dim(d)
        return cls((1 << d) - 1, d)

    @classmethod
    def interval(cls, lo: int, hi: int, d: int) -> SubsetMask:
        """The consecutive block (lo, hi] = {lo+1, ..., hi}."""
        if not 0 <= lo <= hi <= d:
            raise DimensionError(f"bad interval ({lo}, {hi}] for d={d}")
        return cls(((1 << hi) - 1) ^ ((1 << lo) - 1), d)

    @property
    def cardinality(self) -> int:
        return bin(self.bits).count("1")

    def __len__(self) -> int:
        return self.cardinality

    def __contains__(self, j: int) -> bool:
        return 1 <= j <= self.d and bool(self.bits >> (j - 1) & 1)

    def indices(self) -> list[int]:
        return [j + 1 for j in range(self.d) if self.bits >> j & 1]

    def is_subset_of(self, other: SubsetMask) -> bool:
        _same_dim(self, other)
        return self.bits & ~other.bits == 0

    def min_index(self) -> int:
        if not self.bits:
            raise ValueError("empty set has no least index")
        return (self.bits & -self.bits).bit_length()

    def max_index(self) -> int:
        if not self.bits:
            raise ValueError("empty set has no greatest index")
        return self.bits.bit_length()

    def bool_mask(self) -> np.ndarray:
        return np.array([bool(self.bits >> j & 1) for j in range(self.d)])

    def __or__(self, other: SubsetMask) -> SubsetMask:
        _same_dim(self, other)
        return SubsetMask(self.bits | other.bits, self.d)

    def __and__(self, other: SubsetMask) -> SubsetMask:
        _same_dim(self, other)
        return SubsetMask(self.bits & other.bits, self.d)

    def __sub__(self, other: SubsetMask) -> SubsetMask:
        _same_dim(self, other)
        return SubsetMask(self.bits & ~other.bits, self.d)

    def __str__(self) -> str:
        return "[" + ",".join(map(str, self.indices())) + "]"

    def __repr__(self) -> str:
        return f"SubsetMask({self}, d={self.d})"


def _same_dim(u: SubsetMask, v: SubsetMask) -> None:
    if u.d != v.d:
        raise DimensionError(f"dimension mismatch: {u.d} vs {v.d}")


def xor_set(u: SubsetMask, v: SubsetMask) -> SubsetMask:
    _same_dim(u, v)
    return SubsetMask(u.bits ^ v.bits, u.d)


def complement(u: SubsetMask) -> SubsetMask:
    return SubsetMask(((1 << u.d) - 1) ^ u.bits, u.d)


def nxor_set(u: SubsetMask, v: SubsetMask) -> SubsetMask:
    """Indices on which u and v agree: (u & v) | (~u & ~v)."""
    return complement(xor_set(u, v))


def subsets_of(w: SubsetMask) -> Iterator[SubsetMask]:
    """All subsets of ``w`` in ascending bitmask order."""
    # Enumerate submasks upward: s -> (s - w) & w walks them in increasing order.
    s = 0
    while True:
        yield SubsetMask(s, w.d)
        if s == w.bits:
            return
        s = (s - w.bits) & w.bits


def all_subsets(d: int) -> list[SubsetMask]:
    _check_dim(d)
    check_enumerable(d)
    return [SubsetMask(b, d) for b in range(1 << d)]


def parse_subset(text: str | Iterable[int], d: int) -> SubsetMask:
    """Parse ``"[1,3,4]"``, ``"1,3,4"``, ``"[]"`` or an index list."""
    if isinstance(text, str):
        body = text.strip().strip("[]").strip()
        items = [int(tok) for tok in body.replace(" ", ",").split(",") if tok]
    else:
        items = [int(j) for j in text]
    return SubsetMask.from_indices(items, d)


def _ambient_dim(table: Mapping[SubsetMask, float]) -> int:
    dims = {u.d for u in table}
    if len(dims) != 1:
        raise DimensionError(f"map mixes dimensions {sorted(dims)}")
    return dims.pop()


def _moebius(table: Mapping[SubsetMask, float], signed: bool) -> dict[SubsetMask, float]:
    if not table:
        return {}
    d = _ambient_dim(table)
    if d <= MAX_ENUM_DIM and len(table) == 1 << d:
        # Complete table: in-place butterfly over each coordinate, O(d 2^d).
        arr = np.array([table[SubsetMask(b, d)] for b in range(1 << d)], dtype=float)
        for j in range(d):
            arr = arr.reshape(-1, 2, 1 << j)
            if signed:
                arr[:, 1, :] -= arr[:, 0, :]
            else:
                arr[:, 1, :] += arr[:, 0, :]
        arr = arr.reshape(-1)
        return {SubsetMask(b, d): float(arr[b]) for b in range(1 << d)}
    out = {}
    for u in table:
        total = []
        for v in subsets_of(u):
            if v not in table:
                raise KeyError(f"missing subset {v} needed for {u}")
            sign = -1.0 if signed and (u.cardinality - v.cardinality) % 2 else 1.0
            total.append(sign * table[v])
        out[u] = float(np.sum(total))
    return out


def sigma_from_lower(lower: Mapping[SubsetMask, float]) -> dict[SubsetMask, float]:
    """Variance components from lower indices: sigma2_u = sum_{v<=u} (-1)^{|u-v|} lower_v."""
    return _moebius(lower, signed=True)


def lower_from_sigma(sigma: Mapping[SubsetMask, float]) -> dict[SubsetMask, float]:
    """Lower indices as cumulative subset sums of variance components."""
    return _moebius(sigma, signed=False)


def superset_from_sigma(sigma: Mapping[SubsetMask, float]) -> dict[SubsetMask, float]:
    """Superset importance: sum of sigma2_v over v containing u. Needs the full table."""
    d = _ambient_dim(sigma)
    flipped = {complement(u): s for u, s in sigma.items()}
    if len(flipped) != 1 << d:
        raise KeyError("superset sums need every subset")
    return {complement(u): s for u, s in lower_from_sigma(flipped).items()}
