"""The three cluster dynamics: Swendsen-Wang, Chayes-Machta, FK heat bath.

Reproducibility contract. Every step consumes randomness from the supplied
generator in a fixed documented order, so a (seed, initial state) pair
pins the whole trajectory:

* G(n, p) draws walk the lexicographic pair order (see indexing.py) with
  geometric gaps between accepted pairs, batched; the "scan" method draws
  one uniform per pair instead and is only for small systems and
  cross-checks.
* Swendsen-Wang percolates inside color classes in ascending color order,
  then recolors clusters with a single uniform-color batch in ascending
  cluster-id order (ClusterPartition.canonical_order).
* Chayes-Machta draws cluster activations in ascending cluster-id order,
  then one G(|active|, p) stream over the active vertex set in ascending
  vertex order.
* The heat bath draws one pair index and one uniform per step, always in
  that order, whether or not the uniform ends up deciding anything.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .indexing import num_pairs, pair_indices_of, pairs_from_indices
from .model import (
    ClusterPartition,
    EdgeConfig,
    ModelParams,
    SpinConfig,
    _edge_config_presorted,
    cluster_decompose,
    s_m_vertices,
)


def _gnp_indices(count: int, p: float, rng: np.random.Generator,
                 method: str = "skip") -> np.ndarray:
    """Indices of the successes among `count` independent Bernoulli(p)
    slots, in increasing order.

    "skip" jumps between successes with geometric gaps (O(count * p) draws);
    "scan" draws one uniform per slot.
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    if count == 0 or p == 0.0:
        return np.empty(0, dtype=np.int64)
    if p == 1.0:
        return np.arange(count, dtype=np.int64)
    if method == "scan":
        return np.flatnonzero(rng.random(count) < p).astype(np.int64)
    if method != "skip":
        raise ValueError(f"unknown method {method!r}")

    out = []
    pos = -1  # last decided slot
    while True:
        batch = max(16, int((count - pos - 1) * p * 1.25) + 16)
        gaps = rng.geometric(p, size=batch)
        # geometric draws saturate at 2**63 - 1 for tiny p, so accumulate
        # in float64: prefix sums below 2**53 (hence below any feasible
        # count) stay exact, and overflowing walks compare correctly
        positions = pos + np.cumsum(gaps, dtype=np.float64)
        stop = int(np.searchsorted(positions, float(count), side="left"))
        out.append(positions[:stop].astype(np.int64))
        if stop < batch:
            break
        pos = int(positions[-1])
    return np.concatenate(out)


def sample_gnp(n: int, p: float, rng: np.random.Generator,
               method: str = "skip") -> EdgeConfig:
    """One draw of the Erdos-Renyi graph G(n, p)."""
    ks = _gnp_indices(num_pairs(n), p, rng, method)
    u, v = pairs_from_indices(ks, n)
    return _edge_config_presorted(n, u, v)


def percolate_within_classes(spins: SpinConfig, p: float,
                             rng: np.random.Generator,
                             method: str = "skip") -> EdgeConfig:
    """Open each monochromatic pair independently with probability p.

    Classes are processed in ascending color order; within a class the pair
    slots follow the lexicographic order of the class's vertex list.
    """
    n = spins.n
    us, vs = [], []
    for color in range(1, spins.q + 1):
        verts = np.flatnonzero(spins.colors == color)
        m = verts.size
        if m < 2:
            continue
        ks = _gnp_indices(num_pairs(m), p, rng, method)
        li, lj = pairs_from_indices(ks, m)
        us.append(verts[li])
        vs.append(verts[lj])
    if not us:
        return EdgeConfig.empty(n)
    u = np.concatenate(us)
    v = np.concatenate(vs)
    order = np.lexsort((v, u))
    return _edge_config_presorted(n, u[order], v[order])


def recolor_clusters(clusters: ClusterPartition, q: int,
                     rng: np.random.Generator) -> SpinConfig:
    """Assign each cluster an independent uniform color in 1..q.

    One batch of q-sided draws, indexed by ascending cluster id.
    """
    if q < 1:
        raise ValueError(f"q must be a positive integer, got {q!r}")
    ids, rank = clusters.canonical_order()
    draws = rng.integers(1, q + 1, size=ids.size, dtype=np.int64)
    return SpinConfig(colors=draws[rank], q=q)


def sw_step(spins: SpinConfig, params: ModelParams,
            rng: np.random.Generator,
            method: str = "skip") -> tuple[SpinConfig, EdgeConfig]:
    """One Swendsen-Wang update. Returns (new spins, the intermediate
    percolation configuration that produced them)."""
    q = params.q_int
    if q < 2:
        raise ValueError(f"Swendsen-Wang needs integer q >= 2, got q={params.q!r}")
    if spins.n != params.n or spins.q != q:
        raise ValueError("spin configuration does not match params")
    omega = percolate_within_classes(spins, params.p, rng, method)
    clusters = cluster_decompose(omega)
    return recolor_clusters(clusters, q, rng), omega


def cm_step(edges: EdgeConfig, params: ModelParams,
            rng: np.random.Generator, method: str = "skip") -> EdgeConfig:
    """One Chayes-Machta update of the edge configuration.

    Clusters activate independently with probability 1/q (ascending
    cluster-id order); edges inside active clusters are discarded and all
    pairs within the active vertex set are resampled at density p.
    Valid for any real q >= 1.
    """
    if params.q < 1:
        raise ValueError(f"Chayes-Machta needs q >= 1, got {params.q!r}")
    if edges.n != params.n:
        raise ValueError("edge configuration does not match params")
    n, p, q = params.n, params.p, params.q
    clusters = cluster_decompose(edges)
    ids, rank = clusters.canonical_order()
    active_cluster = rng.random(ids.size) < 1.0 / q
    active = active_cluster[rank]  # per vertex

    pairs = edges.pairs
    if pairs.shape[0]:
        au = active[pairs[:, 0]]
        if not np.array_equal(au, active[pairs[:, 1]]):
            raise AssertionError("edge straddles clusters with distinct activation")
        keep_u = pairs[~au, 0]
        keep_v = pairs[~au, 1]
    else:
        keep_u = keep_v = np.empty(0, dtype=np.int64)

    verts = np.flatnonzero(active)
    ks = _gnp_indices(num_pairs(verts.size), p, rng, method)
    li, lj = pairs_from_indices(ks, verts.size)
    u = np.concatenate([keep_u, verts[li]])
    v = np.concatenate([keep_v, verts[lj]])
    order = np.lexsort((v, u))
    return _edge_config_presorted(n, u[order], v[order])


def _connected_avoiding(edges: EdgeConfig, x: int, y: int) -> bool:
    """Whether x and y are connected in the configuration with the pair
    {x, y} removed (if present)."""
    adj: dict[int, list[int]] = {}
    for a, b in edges.pairs:
        a, b = int(a), int(b)
        if (a, b) == (min(x, y), max(x, y)):
            continue
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = {x}
    queue = deque([x])
    while queue:
        w = queue.popleft()
        for z in adj.get(w, ()):
            if z == y:
                return True
            if z not in seen:
                seen.add(z)
                queue.append(z)
    return False


def glauber_step(edges: EdgeConfig, params: ModelParams,
                 rng: np.random.Generator) -> EdgeConfig:
    """One heat-bath update of a uniformly chosen pair.

    The pair joins two distinct clusters with probability p/(p + q(1-p))
    and is open with probability p otherwise. Connectivity is recomputed
    from scratch on the configuration minus the chosen pair each step; no
    incremental structure is maintained. Always consumes exactly one pair
    index and one uniform.
    """
    if params.q <= 0:
        raise ValueError(f"heat bath needs q > 0, got {params.q!r}")
    if edges.n != params.n:
        raise ValueError("edge configuration does not match params")
    n, p, q = params.n, params.p, params.q
    k = int(rng.integers(0, num_pairs(n)))
    u01 = float(rng.random())
    xi, yj = pairs_from_indices(np.array([k], dtype=np.int64), n)
    x, y = int(xi[0]), int(yj[0])

    enc = pair_indices_of(edges.pairs[:, 0], edges.pairs[:, 1], n) \
        if edges.pairs.shape[0] else np.empty(0, dtype=np.int64)
    slot = int(np.searchsorted(enc, k))
    present = slot < enc.size and enc[slot] == k

    if _connected_avoiding(edges, x, y):
        r = p
    else:
        r = p / (p + q * (1.0 - p))
    want = u01 < r
    if want == present:
        return edges
    pu, pv = edges.pairs[:, 0], edges.pairs[:, 1]
    if want:
        return _edge_config_presorted(edges.n, np.insert(pu, slot, x),
                                      np.insert(pv, slot, y))
    return _edge_config_presorted(edges.n, np.delete(pu, slot),
                                  np.delete(pv, slot))


@dataclass(frozen=True)
class ObservationRecord:
    """Cluster statistics at one observed step.

    l1_frac is the largest-cluster fraction, sm_frac the fraction of
    vertices in clusters larger than the tracked threshold M, and
    counts_sorted the non-increasing color-class counts (spin chains only).
    """

    step: int
    l1_frac: float
    sm_frac: float
    edge_count: int
    counts_sorted: tuple[int, ...] | None = None


@dataclass
class Trajectory:
    kind: str
    params: ModelParams
    m_threshold: int
    records: list[ObservationRecord] = field(default_factory=list)
    final_spins: SpinConfig | None = None
    final_edges: EdgeConfig | None = None

    def steps(self) -> np.ndarray:
        return np.array([r.step for r in self.records], dtype=np.int64)

    def l1_series(self) -> np.ndarray:
        return np.array([r.l1_frac for r in self.records])

    def sm_series(self) -> np.ndarray:
        return np.array([r.sm_frac for r in self.records])


_KINDS = ("sw", "cm", "glauber")


def _observe(step: int, edges: EdgeConfig, m_threshold: int,
             counts_sorted: tuple[int, ...] | None) -> ObservationRecord:
    part = cluster_decompose(edges)
    return ObservationRecord(
        step=step,
        l1_frac=part.largest_size / edges.n,
        sm_frac=s_m_vertices(part, m_threshold) / edges.n,
        edge_count=edges.edge_count,
        counts_sorted=counts_sorted,
    )


def run_chain(kind: str, init, params: ModelParams, steps: int,
              rng: np.random.Generator, observe_every: int = 1,
              m_threshold: int | None = None,
              gnp_method: str = "skip") -> Trajectory:
    """Run `steps` updates of one of the three chains, recording cluster
    statistics at steps 0, observe_every, 2*observe_every, ...

    For "sw" the initial state is a SpinConfig and each observation is
    taken on the intermediate percolation configuration of the step that
    produced the current spins (step 0 observes the empty configuration,
    there being no percolation draw yet). For "cm" and "glauber" the state
    is an EdgeConfig and is observed directly. m_threshold defaults to
    round(ln(n)^2), the usual small/large cluster cutoff.
    """
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
    if steps < 0 or observe_every < 1:
        raise ValueError("need steps >= 0 and observe_every >= 1")
    n = params.n
    if m_threshold is None:
        m_threshold = int(round(np.log(n) ** 2))

    traj = Trajectory(kind=kind, params=params, m_threshold=m_threshold)

    if kind == "sw":
        if not isinstance(init, SpinConfig):
            raise TypeError("sw chain starts from a SpinConfig")
        spins = init
        omega = EdgeConfig.empty(n)
        counts = tuple(int(c) for c in spins.sorted_counts())
        traj.records.append(_observe(0, omega, m_threshold, counts))
        for t in range(1, steps + 1):
            spins, omega = sw_step(spins, params, rng, gnp_method)
            if t % observe_every == 0:
                counts = tuple(int(c) for c in spins.sorted_counts())
                traj.records.append(_observe(t, omega, m_threshold, counts))
        traj.final_spins = spins
        traj.final_edges = omega
        return traj

    if not isinstance(init, EdgeConfig):
        raise TypeError(f"{kind} chain starts from an EdgeConfig")
    edges = init
    traj.records.append(_observe(0, edges, m_threshold, None))
    for t in range(1, steps + 1):
        if kind == "cm":
            edges = cm_step(edges, params, rng, gnp_method)
        else:
            edges = glauber_step(edges, params, rng)
        if t % observe_every == 0:
            traj.records.append(_observe(t, edges, m_threshold, None))
    traj.final_edges = edges
    return traj
