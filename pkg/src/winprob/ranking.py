"""Rankings, benchmark samples and rank-count statistics.

A ranking is stored position-first: ``order[j]`` is the index of the
algorithm that finished in position ``j + 1``. Partial (top-K) rankings are
plain prefixes of that array.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import RankingError

#: Probability floor applied before taking logarithms of estimates.
EPSILON = 1e-6


@dataclass(frozen=True)
class RankingObservation:
    """One dataset's ranking: ``order[j]`` is the algorithm in position j+1."""

    order: tuple[int, ...]
    m: int

    def __post_init__(self):
        order = tuple(int(a) for a in self.order)
        object.__setattr__(self, "order", order)
        if not 1 <= len(order) <= self.m:
            raise RankingError(f"ranking depth {len(order)} not in [1, {self.m}]")
        if len(set(order)) != len(order):
            raise RankingError(f"ranking {order} repeats an algorithm")
        if min(order) < 0 or max(order) >= self.m:
            raise RankingError(f"ranking {order} references an index outside [0, {self.m})")

    @property
    def depth(self) -> int:
        return len(self.order)

    @property
    def is_full(self) -> bool:
        return len(self.order) == self.m


def winner_of(obs: RankingObservation) -> int:
    """Index of the top-ranked algorithm."""
    return obs.order[0]


@dataclass(frozen=True)
class RankCountMatrix:
    """``counts[i, j]`` = number of datasets where algorithm i finished j+1-th."""

    counts: np.ndarray
    n: int

    @property
    def m(self) -> int:
        return self.counts.shape[0]

    @property
    def depth(self) -> int:
        return self.counts.shape[1]


@dataclass(frozen=True, eq=False)
class BenchmarkSample:
    """n ranking observations over a fixed roster of m algorithms.

    Observations are held as an ``(n, D)`` integer array padded with ``-1``
    where a partial ranking is shorter than the deepest one. Build samples
    with :meth:`from_orders` or :meth:`from_observations`.
    """

    names: tuple[str, ...]
    orders: np.ndarray
    depths: np.ndarray = field(repr=False)

    def __post_init__(self):
        names = tuple(str(s) for s in self.names)
        object.__setattr__(self, "names", names)
        m = len(names)
        if m < 2:
            raise RankingError("need at least two algorithms")
        if len(set(names)) != m:
            raise RankingError("algorithm names must be distinct")
        orders = np.array(self.orders, dtype=np.int64, copy=True)
        if orders.ndim != 2 or orders.shape[0] < 1:
            raise RankingError("need at least one observation")
        depths = np.array(self.depths, dtype=np.int64, copy=True)
        if depths.shape != (orders.shape[0],):
            raise RankingError("depths must have one entry per observation")
        if depths.min() < 1 or depths.max() > min(m, orders.shape[1]):
            raise RankingError("observation depth out of range")
        cols = np.arange(orders.shape[1])
        listed = cols[None, :] < depths[:, None]
        if np.any(orders[listed] < 0) or np.any(orders[listed] >= m):
            raise RankingError(f"observation references an index outside [0, {m})")
        if np.any(orders[~listed] != -1):
            raise RankingError("padding beyond an observation's depth must be -1")
        # duplicate detection per row: sort listed entries and compare neighbours
        masked = np.where(listed, orders, -1 - cols[None, :])
        srt = np.sort(masked, axis=1)
        if np.any(srt[:, 1:] == srt[:, :-1]):
            bad = int(np.nonzero(np.any(srt[:, 1:] == srt[:, :-1], axis=1))[0][0])
            raise RankingError("an algorithm appears twice in the same ranking", row=bad)
        orders.setflags(write=False)
        depths.setflags(write=False)
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "depths", depths)

    @classmethod
    def from_orders(cls, orders, names: Sequence[str] | None = None, m: int | None = None):
        """Build a sample from a rectangular ``(n, K)`` array of positions."""
        orders = np.asarray(orders, dtype=np.int64)
        if orders.ndim != 2:
            raise RankingError("orders must be a 2-D array")
        if names is None:
            if m is None:
                m = orders.shape[1]
            names = default_names(m)
        depths = np.full(orders.shape[0], orders.shape[1])
        return cls(tuple(names), orders, depths)

    @classmethod
    def from_observations(cls, observations: Sequence[RankingObservation | Sequence[int]],
                          names: Sequence[str] | None = None, m: int | None = None):
        obs = list(observations)
        if not obs:
            raise RankingError("need at least one observation")
        rows = [o.order if isinstance(o, RankingObservation) else tuple(o) for o in obs]
        if m is None:
            if names is not None:
                m = len(names)
            elif isinstance(obs[0], RankingObservation):
                m = obs[0].m
            else:
                m = max(max(len(r) for r in rows), max(max(r) for r in rows) + 1)
        depth = max(len(r) for r in rows)
        orders = np.full((len(rows), depth), -1, dtype=np.int64)
        for i, r in enumerate(rows):
            orders[i, : len(r)] = r
        if names is None:
            names = default_names(m)
        return cls(tuple(names), orders, np.array([len(r) for r in rows]))

    @property
    def m(self) -> int:
        return len(self.names)

    @property
    def n(self) -> int:
        return self.orders.shape[0]

    @cached_property
    def effective_depth(self) -> int:
        return int(self.depths.min())

    @property
    def is_full(self) -> bool:
        return self.effective_depth == self.m

    @property
    def winners(self) -> np.ndarray:
        return self.orders[:, 0]

    @property
    def observations(self) -> list[RankingObservation]:
        return [RankingObservation(tuple(row[:d]), self.m)
                for row, d in zip(self.orders, self.depths)]

    def subset(self, indices) -> BenchmarkSample:
        """Sample restricted to the given observation indices (roster kept)."""
        idx = np.asarray(indices, dtype=np.int64)
        depths = self.depths[idx]
        orders = self.orders[idx][:, : int(depths.max())]
        return BenchmarkSample(self.names, orders, depths)

    def relabel(self, perm) -> BenchmarkSample:
        """Rename algorithm ``a`` to ``perm[a]``; names follow their algorithm."""
        perm = np.asarray(perm, dtype=np.int64)
        names = [""] * self.m
        for a, b in enumerate(perm):
            names[b] = self.names[a]
        orders = np.where(self.orders >= 0, perm[np.maximum(self.orders, 0)], -1)
        return BenchmarkSample(tuple(names), orders, self.depths)

    def to_rank_matrix(self) -> np.ndarray:
        """``(n, m)`` matrix of 1-based ranks; only defined for full samples."""
        if not self.is_full:
            raise RankingError("rank matrix needs full rankings")
        ranks = np.empty((self.n, self.m), dtype=np.int64)
        rows = np.arange(self.n)[:, None]
        ranks[rows, self.orders[:, : self.m]] = np.arange(1, self.m + 1)[None, :]
        return ranks


def default_names(m: int) -> tuple[str, ...]:
    if m <= 26:
        return tuple(chr(ord("A") + i) for i in range(m))
    return tuple(f"alg{i}" for i in range(m))


def _tally(orders: np.ndarray, m: int, depth: int) -> np.ndarray:
    counts = np.zeros((m, depth), dtype=np.int64)
    cols = np.broadcast_to(np.arange(depth), (orders.shape[0], depth))
    np.add.at(counts, (orders[:, :depth], cols), 1)
    return counts


def compute_rank_counts(sample: BenchmarkSample, depth: int | None = None) -> RankCountMatrix:
    """Count how often each algorithm finished in each of the first positions.

    Args:
        sample: The benchmark sample.
        depth: Number of rank positions to count; defaults to the sample's
            effective depth (the shallowest observation).

    Returns:
        RankCountMatrix with an ``(m, depth)`` count array whose columns each
        sum to n.
    """
    depth = sample.effective_depth if depth is None else depth
    if not 1 <= depth <= sample.effective_depth:
        raise RankingError(f"depth {depth} exceeds the sample's effective depth "
                           f"{sample.effective_depth}")
    return RankCountMatrix(_tally(sample.orders, sample.m, depth), sample.n)


def compute_rank_counts_excluding(sample: BenchmarkSample, i: int,
                                  depth: int | None = None) -> RankCountMatrix:
    """Rank counts of the sample with observation ``i`` removed."""
    if not 0 <= i < sample.n:
        raise IndexError(f"observation index {i} out of range for n={sample.n}")
    full = compute_rank_counts(sample, depth)
    counts = full.counts.copy()
    d = counts.shape[1]
    counts[sample.orders[i, :d], np.arange(d)] -= 1
    return RankCountMatrix(counts, sample.n - 1)
