"""Configurations, cluster decomposition, and the bottleneck statistics.

Conventions used throughout the package:

* vertices are 0..n-1, colors are 1..q (q integer where colors are involved);
* edges are unordered pairs (i, j) with i < j, stored as a canonical
  (m, 2) integer array sorted lexicographically;
* cluster ids are canonical: every cluster is labeled by its smallest member
  vertex, and cluster sizes are reported in non-increasing order with ties
  broken by that smallest member.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


@dataclass(frozen=True)
class ModelParams:
    """Parameters (n, q, lambda) with the derived edge probability and
    inverse temperature.

    p = lam/n and beta = -n*ln(1 - lam/n), so that lam/n = 1 - exp(-beta/n).
    """

    n: int
    q: float
    lam: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q!r}")
        if not (0.0 < self.lam < self.n):
            raise ValueError(f"lam must lie in (0, n), got {self.lam!r}")

    @property
    def p(self) -> float:
        return self.lam / self.n

    @property
    def beta(self) -> float:
        # -n*log1p(-p) is accurate for small p
        return -self.n * math.log1p(-self.p)

    @classmethod
    def from_beta(cls, n: int, q: float, beta: float) -> "ModelParams":
        if beta <= 0:
            raise ValueError(f"beta must be positive, got {beta!r}")
        lam = -n * math.expm1(-beta / n)
        return cls(n=n, q=q, lam=lam)

    @property
    def q_int(self) -> int:
        """Integer q, for operations defined only at integer cluster weight."""
        qi = round(self.q)
        if abs(self.q - qi) > 1e-12:
            raise ValueError(f"operation requires integer q, got q={self.q!r}")
        return int(qi)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SpinConfig:
    """A Potts coloring: colors[v] in {1..q}, with per-color counts."""

    colors: np.ndarray
    q: int
    counts: np.ndarray = field(init=False)

    def __post_init__(self):
        colors = np.ascontiguousarray(self.colors, dtype=np.int64)
        if colors.ndim != 1 or colors.size == 0:
            raise ValueError("colors must be a non-empty 1-d sequence")
        if self.q < 1 or int(self.q) != self.q:
            raise ValueError(f"q must be a positive integer, got {self.q!r}")
        if colors.min() < 1 or colors.max() > self.q:
            raise ValueError("colors must take values in 1..q")
        counts = np.bincount(colors, minlength=self.q + 1)[1:]
        object.__setattr__(self, "colors", _readonly(colors))
        object.__setattr__(self, "counts", _readonly(counts))

    @property
    def n(self) -> int:
        return self.colors.size

    def sorted_counts(self) -> np.ndarray:
        """Color-class sizes in non-increasing order (v^1 >= v^2 >= ...)."""
        return np.sort(self.counts)[::-1]


@dataclass(frozen=True)
class EdgeConfig:
    """An FK/random-cluster configuration: a set of unordered vertex pairs.

    pairs is an (m, 2) int array with i < j on every row, lexicographically
    sorted and duplicate-free. Construction canonicalizes row order and
    endpoint order but rejects duplicates and self-loops.
    """

    n: int
    pairs: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size:
            lo = pairs.min(axis=1)
            hi = pairs.max(axis=1)
            if (lo == hi).any():
                raise ValueError("self-loops are not allowed")
            if lo.min() < 0 or hi.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            pairs = np.column_stack([lo, hi])
            order = np.lexsort((pairs[:, 1], pairs[:, 0]))
            pairs = pairs[order]
            dup = (np.diff(pairs[:, 0]) == 0) & (np.diff(pairs[:, 1]) == 0)
            if dup.any():
                raise ValueError("duplicate edges are not allowed")
        object.__setattr__(self, "pairs", _readonly(np.ascontiguousarray(pairs)))

    @property
    def edge_count(self) -> int:
        return self.pairs.shape[0]

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.pairs}

    @classmethod
    def empty(cls, n: int) -> "EdgeConfig":
        return cls(n=n, pairs=np.empty((0, 2), dtype=np.int64))


def _edge_config_presorted(n: int, u: np.ndarray, v: np.ndarray) -> EdgeConfig:
    """Internal fast path: build an EdgeConfig from arrays already satisfying
    the canonical form (u < v, lexicographically sorted, no duplicates)."""
    cfg = object.__new__(EdgeConfig)
    pairs = np.column_stack([u, v]).astype(np.int64, copy=False)
    object.__setattr__(cfg, "n", n)
    object.__setattr__(cfg, "pairs", _readonly(np.ascontiguousarray(pairs)))
    return cfg


@dataclass(frozen=True)
class ClusterPartition:
    """Connected components of an EdgeConfig.

    assignment[v] is the canonical id (smallest member) of v's cluster;
    sizes is sorted non-increasing, ties broken by smallest member, and
    ids_by_size aligns cluster ids with that order, so ids_by_size[0] is
    "the largest cluster" in the package-wide tie-broken sense.
    """

    n: int
    assignment: np.ndarray
    sizes: np.ndarray
    ids_by_size: np.ndarray
    cluster_count: int

    def __post_init__(self):
        object.__setattr__(self, "assignment", _readonly(np.ascontiguousarray(self.assignment, dtype=np.int64)))
        object.__setattr__(self, "sizes", _readonly(np.ascontiguousarray(self.sizes, dtype=np.int64)))
        object.__setattr__(self, "ids_by_size", _readonly(np.ascontiguousarray(self.ids_by_size, dtype=np.int64)))

    @property
    def largest_size(self) -> int:
        return int(self.sizes[0])

    def canonical_order(self) -> tuple[np.ndarray, np.ndarray]:
        """(ids ascending, rank) where rank[v] indexes v's cluster in
        ascending-id order. This is the draw order for per-cluster
        randomness (recoloring, activation)."""
        ids = np.sort(self.ids_by_size)
        rank = np.searchsorted(ids, self.assignment)
        return ids, rank


def cluster_decompose(edges: EdgeConfig) -> ClusterPartition:
    """Connected components with canonical (smallest-member) cluster ids."""
    n = edges.n
    if edges.edge_count:
        u = edges.pairs[:, 0]
        v = edges.pairs[:, 1]
        g = coo_matrix((np.ones(len(u), dtype=np.int8), (u, v)), shape=(n, n))
        _, raw = connected_components(g, directed=False)
    else:
        raw = np.arange(n)
    # first occurrence of each component label is its smallest vertex
    _, first, inv = np.unique(raw, return_index=True, return_inverse=True)
    counts = np.bincount(inv)
    order = np.lexsort((first, -counts))
    return ClusterPartition(
        n=n,
        assignment=first[inv],
        sizes=counts[order],
        ids_by_size=first[order],
        cluster_count=len(counts),
    )


def s_m_vertices(partition: ClusterPartition, m_threshold: int) -> int:
    """|S_M|: number of vertices in clusters of size strictly greater than M."""
    if m_threshold < 0:
        raise ValueError("M must be >= 0")
    sizes = partition.sizes
    return int(sizes[sizes > m_threshold].sum())


def s_m_minus_giant(partition: ClusterPartition, m_threshold: int) -> int:
    """|S_M| with the largest cluster excluded when it itself exceeds M."""
    s = s_m_vertices(partition, m_threshold)
    l1 = partition.largest_size
    if l1 > m_threshold:
        return s - l1
    return s


def in_balanced_set(spin: SpinConfig, rho: float) -> bool:
    """Whether every color class is within rho*n of n/q (strict)."""
    n = spin.n
    target = n / spin.q
    return bool(np.max(np.abs(spin.counts - target)) < rho * n)


def in_ordered_set(spin: SpinConfig, rho: float, a_lambda: float) -> bool:
    """Ordered-phase membership: sorted counts v1 >= v2 >= ... satisfy
    |v1 - a_lambda*n| <= rho*n and v2 <= (n - v1)/(q - 1) + rho*n."""
    if spin.q < 2:
        raise ValueError("ordered set needs q >= 2")
    v = spin.sorted_counts()
    n = spin.n
    if abs(float(v[0]) - a_lambda * n) > rho * n:
        return False
    return bool(v[1] <= (n - v[0]) / (spin.q - 1) + rho * n)
