"""Occupation-number basis of the completely symmetric M-copy space.

A basis state |n_1, ..., n_N> holds n_i of the M copies in level i.  Basis
vectors are enumerated in a fixed order: ascending in n_N, then n_{N-1}, and
so on down to n_1 (lexicographic on the reversed tuple).  For N=2, M=2 that
gives (2,0), (1,1), (0,2).

Levels are 0-based throughout the library.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np


@dataclass(frozen=True)
class OccupationVector:
    """Counts of copies per level."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 1:
            raise ValueError("an occupation vector needs at least one level")
        if any(c < 0 for c in counts):
            raise ValueError(f"negative occupation in {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def n_levels(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def errors(self, level: int) -> int:
        """Number of copies *not* in ``level`` (the error count m_i)."""
        return self.total - self.counts[level]

    def shifted(self, level: int, delta: int) -> OccupationVector:
        counts = list(self.counts)
        counts[level] += delta
        return OccupationVector(tuple(counts))

    def __getitem__(self, level: int) -> int:
        return self.counts[level]

    def __iter__(self) -> Iterator[int]:
        return iter(self.counts)

    def __len__(self) -> int:
        return len(self.counts)


def occ(*counts: int) -> OccupationVector:
    """Shorthand constructor: ``occ(2, 0)``."""
    return OccupationVector(tuple(counts))


def symmetric_dimension(n_levels: int, n_copies: int) -> int:
    """Dimension C(M+N-1, N-1) of the symmetric M-copy space.

    Raises OverflowError when the dimension does not fit a machine index,
    since every caller uses it to size an array.
    """
    _check_sizes(n_levels, n_copies)
    dim = math.comb(n_copies + n_levels - 1, n_levels - 1)
    if dim > sys.maxsize:
        raise OverflowError(f"symmetric dimension for N={n_levels}, M={n_copies} exceeds the index range")
    return dim


def _check_sizes(n_levels: int, n_copies: int) -> None:
    if n_levels < 1:
        raise ValueError(f"n_levels must be >= 1, got {n_levels}")
    if n_copies < 0:
        raise ValueError(f"n_copies must be >= 0, got {n_copies}")


def _compositions(n_levels: int, total: int) -> Iterator[tuple[int, ...]]:
    # Last level is the most significant digit.
    if n_levels == 1:
        yield (total,)
        return
    for last in range(total + 1):
        for head in _compositions(n_levels - 1, total - last):
            yield head + (last,)


def rank_occupation(v: OccupationVector | Sequence[int]) -> int:
    """Position of ``v`` in the enumeration order, computed combinatorially."""
    counts = tuple(v)
    remaining = sum(counts)
    r = 0
    for idx in range(len(counts) - 1, 0, -1):
        # Every smaller value in slot idx precedes v; each leaves
        # `remaining - value` copies for levels 0..idx-1.
        for value in range(counts[idx]):
            r += math.comb(remaining - value + idx - 1, idx - 1)
        remaining -= counts[idx]
    return r


def unrank_occupation(n_levels: int, n_copies: int, rank: int) -> OccupationVector:
    """Inverse of :func:`rank_occupation`."""
    dim = symmetric_dimension(n_levels, n_copies)
    if not 0 <= rank < dim:
        raise IndexError(f"rank {rank} out of range for dimension {dim}")
    counts = [0] * n_levels
    remaining = n_copies
    for idx in range(n_levels - 1, 0, -1):
        value = 0
        while True:
            block = math.comb(remaining - value + idx - 1, idx - 1)
            if rank < block:
                break
            rank -= block
            value += 1
        counts[idx] = value
        remaining -= value
    counts[0] = remaining
    return OccupationVector(tuple(counts))


@dataclass(frozen=True)
class SymmetricBasis:
    n_levels: int
    n_copies: int
    vectors: tuple[OccupationVector, ...] = field(repr=False)
    rank: dict = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self) -> Iterator[OccupationVector]:
        return iter(self.vectors)

    def __getitem__(self, i: int) -> OccupationVector:
        return self.vectors[i]

    def index(self, v: OccupationVector | Sequence[int]) -> int:
        if not isinstance(v, OccupationVector):
            v = OccupationVector(tuple(v))
        return self.rank[v]

    def __contains__(self, v) -> bool:
        if not isinstance(v, OccupationVector):
            v = OccupationVector(tuple(v))
        return v in self.rank


@lru_cache(maxsize=None)
def enumerate_occupations(n_levels: int, n_copies: int) -> SymmetricBasis:
    """All compositions of ``n_copies`` into ``n_levels`` non-negative parts."""
    _check_sizes(n_levels, n_copies)
    vectors = tuple(OccupationVector(c) for c in _compositions(n_levels, n_copies))
    rank = {v: i for i, v in enumerate(vectors)}
    return SymmetricBasis(n_levels, n_copies, vectors, rank)


def single_copy_transition(n_prime: OccupationVector, k: int, l: int, n: OccupationVector) -> float:
    """<n'| (|k><l| on one copy, identity on the other M-1) |n>.

    Nonzero only for n' = n - e_l + e_k, where it equals
    sqrt(n_l (n_k + 1)) / M for k != l and n_l / M for k == l.
    """
    if n_prime.n_levels != n.n_levels:
        raise ValueError("occupation vectors have different level counts")
    if n_prime.total != n.total:
        raise ValueError("occupation vectors have different copy counts")
    n_levels, m = n.n_levels, n.total
    if not (0 <= k < n_levels and 0 <= l < n_levels):
        raise ValueError(f"levels ({k}, {l}) out of range for N={n_levels}")
    if m < 1:
        raise ValueError("transition elements need at least one copy")
    if k == l:
        return n[l] / m if n_prime == n else 0.0
    if n[l] == 0:
        return 0.0
    expected = list(n.counts)
    expected[l] -= 1
    expected[k] += 1
    if n_prime.counts != tuple(expected):
        return 0.0
    return math.sqrt(n[l] * (n[k] + 1)) / m


@lru_cache(maxsize=64)
def transition_operators(n_levels: int, n_copies: int) -> np.ndarray:
    """Array T with T[k, l] the matrix of |k><l| (x) I on the symmetric space.

    ``T[k, l][a, b] = single_copy_transition(basis[a], k, l, basis[b])``.
    The returned array is read-only.
    """
    basis = enumerate_occupations(n_levels, n_copies)
    dim = len(basis)
    ops = np.zeros((n_levels, n_levels, dim, dim))
    for b, n in enumerate(basis):
        for l in range(n_levels):
            if n[l] == 0:
                continue
            for k in range(n_levels):
                target = n if k == l else n.shifted(l, -1).shifted(k, +1)
                ops[k, l, basis.index(target), b] = single_copy_transition(target, k, l, n)
    ops.flags.writeable = False
    return ops
