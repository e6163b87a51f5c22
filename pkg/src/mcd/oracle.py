"""Exact small-system ground truth: measures, kernels, spectra, couplings.

State indexing contract (bit-exact, used by fixtures and tests):

* An edge configuration on n vertices is a C(n,2)-bit integer; bit k set
  means the k-th pair in the lexicographic order of indexing.py is open.
* A spin configuration is a base-q integer with little-endian digits,
  digit v = color_v - 1 (vertex 0 is the least significant digit).

Everything exact in this module enumerates full state spaces, so the
guards are hard limits, not suggestions: random-cluster enumeration stops
at n = 7, the Potts side at q^n = 10^6, and the kernels at the bounds
documented on build_kernel. Unnormalized weights are handled in log space
against the max log, with compensated summation for the normalizer.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh

from .indexing import all_pairs, num_pairs, pair_index, pair_indices_of
from .model import EdgeConfig, _edge_config_presorted

_FK_N_MAX = 7
_POTTS_STATES_MAX = 10 ** 6


# ---------------------------------------------------------------------------
# partition table over all edge masks

_partition_tables: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def mask_partition_table(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """For every C(n,2)-bit edge mask: per-vertex component labels
    (smallest member), component count, and edge count.

    Built incrementally: mask with its lowest bit cleared differs by one
    edge, so each row is a copy-and-merge of an earlier row.
    """
    if n in _partition_tables:
        return _partition_tables[n]
    if n > _FK_N_MAX:
        raise ValueError(f"partition table limited to n <= {_FK_N_MAX}, got {n}")
    c = num_pairs(n)
    pu, pv = all_pairs(n)
    size = 1 << c
    labels = np.empty((size, n), dtype=np.int8)
    kcnt = np.empty(size, dtype=np.int8)
    ecnt = np.empty(size, dtype=np.int8)
    labels[0] = np.arange(n, dtype=np.int8)
    kcnt[0] = n
    ecnt[0] = 0
    for mask in range(1, size):
        low = mask & -mask
        b = low.bit_length() - 1
        prev = mask ^ low
        row = labels[prev].copy()
        la, lb = int(row[pu[b]]), int(row[pv[b]])
        ecnt[mask] = ecnt[prev] + 1
        if la == lb:
            kcnt[mask] = kcnt[prev]
        else:
            if la > lb:
                la, lb = lb, la
            row[row == lb] = la
            kcnt[mask] = kcnt[prev] - 1
        labels[mask] = row
    labels.flags.writeable = False
    kcnt.flags.writeable = False
    ecnt.flags.writeable = False
    _partition_tables[n] = (labels, kcnt, ecnt)
    return _partition_tables[n]


# ---------------------------------------------------------------------------
# state codecs

def spin_code(colors: np.ndarray, q: int) -> int:
    """Base-q code of a coloring (values 1..q), vertex 0 least significant."""
    code = 0
    for v in range(len(colors) - 1, -1, -1):
        code = code * q + int(colors[v]) - 1
    return code


def spin_from_code(code: int, n: int, q: int) -> np.ndarray:
    colors = np.empty(n, dtype=np.int64)
    for v in range(n):
        colors[v] = code % q + 1
        code //= q
    return colors


def edge_mask(edges: EdgeConfig) -> int:
    if edges.pairs.shape[0] == 0:
        return 0
    ks = pair_indices_of(edges.pairs[:, 0], edges.pairs[:, 1], edges.n)
    return int(np.bitwise_or.reduce(np.int64(1) << ks))


def edges_from_mask(mask: int, n: int) -> EdgeConfig:
    ks = np.array([b for b in range(num_pairs(n)) if (mask >> b) & 1],
                  dtype=np.int64)
    pu, pv = all_pairs(n)
    return _edge_config_presorted(n, pu[ks], pv[ks])


def _digit_matrix(count: int, base: int, width: int) -> np.ndarray:
    """Rows are the little-endian base-`base` digits of 0..count-1."""
    codes = np.arange(count, dtype=np.int64)
    powers = base ** np.arange(width, dtype=np.int64)
    return (codes[:, None] // powers[None, :]) % base


# ---------------------------------------------------------------------------
# exact measures

@dataclass(frozen=True)
class MeasureTable:
    """Fully enumerated probability vector over the indexed state space."""

    kind: str  # "fk" or "potts"
    n: int
    q: float
    lam: float
    probs: np.ndarray
    log_norm: float

    @property
    def size(self) -> int:
        return self.probs.shape[0]


def _normalize_log_weights(logw: np.ndarray) -> tuple[np.ndarray, float]:
    m = float(logw.max())
    w = np.exp(logw - m)
    z = math.fsum(w.tolist())
    return w / z, m + math.log(z)


def enumerate_fk_measure(n: int, lam: float, q: float) -> MeasureTable:
    """The random-cluster measure on all 2^C(n,2) edge configurations:
    weight p^|E| (1-p)^(C-|E|) q^k(G) with p = lam/n.

    Any real q > 0 is accepted (the coloring checks condition on vertex
    subsets whose effective weight can be fractional). n = 0 and n = 1
    are single-state spaces.
    """
    if not (0 <= n <= _FK_N_MAX):
        raise ValueError(f"exact enumeration limited to 0 <= n <= {_FK_N_MAX}, got {n}")
    if n == 0:
        return MeasureTable("fk", 0, q, lam, np.array([1.0]), 0.0)
    if q <= 0:
        raise ValueError(f"cluster weight must be positive, got {q!r}")
    if not (0.0 <= lam < n):
        raise ValueError(f"need 0 <= lam < n for p = lam/n in [0,1), got lam={lam!r}")
    p = lam / n
    _, kcnt, ecnt = mask_partition_table(n)
    c = num_pairs(n)
    if p == 0.0:
        probs = np.zeros(1 << c)
        probs[0] = 1.0
        return MeasureTable("fk", n, q, lam, probs, n * math.log(q))
    logw = (ecnt * math.log(p) + (c - ecnt) * math.log1p(-p)
            + kcnt * math.log(q)).astype(np.float64)
    probs, log_norm = _normalize_log_weights(logw)
    probs.flags.writeable = False
    return MeasureTable("fk", n, q, lam, probs, log_norm)


def enumerate_potts_measure(n: int, q: int, lam: float) -> MeasureTable:
    """The mean-field Potts measure over all q^n colorings: weight
    exp((beta/n) * #{monochromatic pairs}) with beta = -n*log(1 - lam/n)."""
    if int(q) != q or q < 1:
        raise ValueError(f"Potts needs integer q >= 1, got {q!r}")
    q = int(q)
    if q ** n > _POTTS_STATES_MAX:
        raise ValueError(f"q^n = {q ** n} exceeds {_POTTS_STATES_MAX}")
    if not (0.0 <= lam < n):
        raise ValueError(f"need 0 <= lam < n, got lam={lam!r}")
    beta = -n * math.log1p(-lam / n)
    digits = _digit_matrix(q ** n, q, n)
    h = np.zeros(q ** n, dtype=np.int64)
    for color in range(q):
        cnt = (digits == color).sum(axis=1)
        h += cnt * (cnt - 1) // 2
    probs, log_norm = _normalize_log_weights((beta / n) * h)
    probs.flags.writeable = False
    return MeasureTable("potts", n, q, lam, probs, log_norm)


# ---------------------------------------------------------------------------
# exact kernels

@dataclass(frozen=True)
class KernelTable:
    """Exact transition matrix (CSR, rows sum to 1) with its stationary
    reference measure, indexed per the module codec."""

    kind: str
    n: int
    q: float
    lam: float
    P: sp.csr_matrix
    measure: MeasureTable

    @property
    def size(self) -> int:
        return self.P.shape[0]


def _bernoulli_submasks(positions: list[int], p: float) -> tuple[np.ndarray, np.ndarray]:
    """All submasks over the given bit positions with their Bernoulli(p)
    product weights. positions must be distinct."""
    t = len(positions)
    if t == 0:
        return np.zeros(1, dtype=np.int64), np.ones(1)
    bits = ((np.arange(1 << t, dtype=np.int64)[:, None]
             >> np.arange(t, dtype=np.int64)) & 1)
    masks = bits @ (np.int64(1) << np.array(positions, dtype=np.int64))
    e = bits.sum(axis=1)
    return masks, p ** e * (1.0 - p) ** (t - e)


def _canonical_partition_key(digits_row: np.ndarray) -> tuple[int, ...]:
    relabel: dict[int, int] = {}
    out = []
    for d in digits_row:
        out.append(relabel.setdefault(int(d), len(relabel)))
    return tuple(out)


def _sw_kernel(n: int, q: int, lam: float) -> KernelTable:
    if int(q) != q or q < 2:
        raise ValueError(f"sw kernel needs integer q >= 2, got {q!r}")
    q = int(q)
    if q ** n > 10 ** 4:
        raise ValueError(f"sw kernel limited to q^n <= 10^4, got {q ** n}")
    if num_pairs(n) > 15:
        raise ValueError(f"sw kernel limited to C(n,2) <= 15, got {num_pairs(n)}")
    p = lam / n
    size = q ** n
    c = num_pairs(n)
    pu, pv = all_pairs(n)
    labels_tbl, kcnt, _ = mask_partition_table(n)
    digits = _digit_matrix(size, q, n)
    mono = np.zeros(size, dtype=np.int64)
    for b in range(c):
        mono |= (digits[:, pu[b]] == digits[:, pv[b]]).astype(np.int64) << b
    qpow = q ** np.arange(n, dtype=np.int64)

    # rows depend on the coloring only through its partition into classes
    # (percolation sees the monochromatic pair set, recoloring is
    # color-symmetric), so distinct rows number at most Bell(n)
    row_cache: dict[tuple[int, ...], np.ndarray] = {}
    P = np.zeros((size, size))
    for s in range(size):
        key = _canonical_partition_key(digits[s])
        row = row_cache.get(key)
        if row is None:
            positions = [b for b in range(c) if (mono[s] >> b) & 1]
            masks, wsub = _bernoulli_submasks(positions, p)
            parts, inv = np.unique(labels_tbl[masks], axis=0, return_inverse=True)
            wpart = np.bincount(inv, weights=wsub)
            row = np.zeros(size)
            for part, w in zip(parts, wpart):
                ulab, lab_idx = np.unique(part, return_inverse=True)
                k = ulab.size
                colmat = _digit_matrix(q ** k, q, k)
                targets = colmat[:, lab_idx] @ qpow
                row[targets] += w / q ** k
            row_cache[key] = row
        P[s] = row
    return KernelTable("sw", n, float(q), lam, sp.csr_matrix(P),
                       enumerate_potts_measure(n, q, lam))


def _cm_kernel(n: int, q: float, lam: float) -> KernelTable:
    if n > 5:
        raise ValueError(f"cm kernel limited to n <= 5, got {n}")
    if q < 1:
        raise ValueError(f"cm kernel needs q >= 1, got {q!r}")
    p = lam / n
    c = num_pairs(n)
    size = 1 << c
    pu, pv = all_pairs(n)
    labels_tbl, _, _ = mask_partition_table(n)
    pairs_inside = np.zeros(1 << n, dtype=np.int64)
    for vs in range(1 << n):
        pm = 0
        for b in range(c):
            if (vs >> pu[b]) & 1 and (vs >> pv[b]) & 1:
                pm |= 1 << b
        pairs_inside[vs] = pm

    P = np.zeros((size, size))
    for s in range(size):
        labels = labels_tbl[s]
        ulab = np.unique(labels)
        k = ulab.size
        vmask = [int(np.bitwise_or.reduce(np.int64(1) << np.flatnonzero(labels == u)))
                 for u in ulab]
        for act in range(1 << k):
            a = bin(act).count("1")
            pr_act = (1.0 / q) ** a * (1.0 - 1.0 / q) ** (k - a)
            if pr_act == 0.0:
                continue
            avs = 0
            for i in range(k):
                if (act >> i) & 1:
                    avs |= vmask[i]
            inside = int(pairs_inside[avs])
            retained = s & ~inside
            positions = [b for b in range(c) if (inside >> b) & 1]
            masks, wsub = _bernoulli_submasks(positions, p)
            P[s][retained | masks] += pr_act * wsub
    return KernelTable("cm", n, q, lam, sp.csr_matrix(P),
                       enumerate_fk_measure(n, lam, q))


def _glauber_kernel(n: int, q: float, lam: float) -> KernelTable:
    if n > 6:
        raise ValueError(f"glauber kernel limited to n <= 6, got {n}")
    if q <= 0:
        raise ValueError(f"glauber kernel needs q > 0, got {q!r}")
    p = lam / n
    c = num_pairs(n)
    size = 1 << c
    pu, pv = all_pairs(n)
    labels_tbl, _, _ = mask_partition_table(n)
    states = np.arange(size, dtype=np.int64)
    rows, cols, vals = [], [], []
    for b in range(c):
        bit = np.int64(1) << b
        wo = states & ~bit
        conn = labels_tbl[wo, pu[b]] == labels_tbl[wo, pv[b]]
        r = np.where(conn, p, p / (p + q * (1.0 - p)))
        rows.extend([states, states])
        cols.extend([states | bit, wo])
        vals.extend([r / c, (1.0 - r) / c])
    P = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(size, size)).tocsr()
    return KernelTable("glauber", n, q, lam, P,
                       enumerate_fk_measure(n, lam, q))


def build_kernel(kind: str, n: int, q: float, lam: float) -> KernelTable:
    """Exact one-step transition kernel of the named dynamics.

    Guards: sw needs integer q with q^n <= 10^4 and C(n,2) <= 15;
    cm needs n <= 5; glauber needs n <= 6. All need 0 <= lam < n.
    """
    if not (0.0 <= lam < n):
        raise ValueError(f"need 0 <= lam < n, got lam={lam!r}, n={n}")
    if kind == "sw":
        if q != int(q):
            raise ValueError(f"sw requires integer q, got {q!r}")
        return _sw_kernel(n, int(q), lam)
    if kind == "cm":
        return _cm_kernel(n, q, lam)
    if kind == "glauber":
        return _glauber_kernel(n, q, lam)
    raise ValueError(f"unknown kernel kind {kind!r}")


# ---------------------------------------------------------------------------
# stationarity, reversibility, spectra

def stationarity_residual(kernel: KernelTable) -> float:
    """L1 norm of pi P - pi against the enumerated measure."""
    pi = kernel.measure.probs
    return float(np.abs(pi @ kernel.P - pi).sum())


def detailed_balance_violation(kernel: KernelTable) -> float:
    """max_{x,y} |pi(x) P(x,y) - pi(y) P(y,x)|."""
    pi = kernel.measure.probs
    f = kernel.P.multiply(pi[:, None]).tocsr()
    d = (f - f.T).tocoo()
    return float(np.abs(d.data).max()) if d.nnz else 0.0


def _symmetrized(kernel: KernelTable) -> sp.csr_matrix:
    pi = kernel.measure.probs
    s = np.sqrt(pi)
    m = kernel.P.multiply(s[:, None]).multiply(1.0 / s[None, :]).tocsr()
    return ((m + m.T) * 0.5).tocsr()


def spectral_gap(kernel: KernelTable, method: str = "lanczos") -> float:
    """1 - lambda_2 of the reversible kernel, via the symmetrization
    D^{1/2} P D^{-1/2}.

    "lanczos" deflates the known top eigenvector sqrt(pi) (shifting its
    eigenvalue 1 to -1) and asks the iterative solver for the largest
    remaining eigenvalue at tolerance 1e-10; it falls back to "dense"
    below 16 states where the iteration has no room to work.
    """
    if detailed_balance_violation(kernel) >= 1e-8:
        raise ValueError("spectral_gap requires a reversible kernel "
                         "(detailed balance violated)")
    size = kernel.size
    if size == 1:
        return 1.0
    m = _symmetrized(kernel)
    if method == "dense" or (method == "lanczos" and size < 16):
        w = scipy.linalg.eigvalsh(m.toarray())
        return float(1.0 - w[-2])
    if method != "lanczos":
        raise ValueError(f"unknown method {method!r}")
    v1 = np.sqrt(kernel.measure.probs)
    v1 = v1 / np.linalg.norm(v1)

    def matvec(x):
        return m @ x - 2.0 * v1 * (v1 @ x)

    op = LinearOperator((size, size), matvec=matvec, dtype=np.float64)
    lam2 = eigsh(op, k=1, which="LA", tol=1e-10,
                 return_eigenvectors=False)[0]
    return float(1.0 - lam2)


def mixing_time_exact(kernel: KernelTable,
                      threshold: float = 1.0 / (2.0 * math.e)) -> int:
    """Smallest t with max_x TV(P^t(x,.), pi) < threshold, by repeated
    multiplication. Guarded to modest state spaces."""
    size = kernel.size
    if size > 4096:
        raise ValueError(f"exact mixing time limited to 4096 states, got {size}")
    p0 = kernel.P.toarray()
    pi = kernel.measure.probs
    m = p0.copy()
    for t in range(1, 10 ** 6 + 1):
        if 0.5 * np.abs(m - pi).sum(axis=1).max() < threshold:
            return t
        m = m @ p0
    raise RuntimeError("mixing time exceeded 10^6 steps")


# ---------------------------------------------------------------------------
# bottleneck ratios and cut families

def bottleneck_ratio(kernel: KernelTable, subset) -> float:
    """Q(S, S^c) / (pi(S) pi(S^c)) with Q(A,B) = sum_{x in A} pi(x) P(x, B)."""
    subset = np.asarray(subset)
    if subset.dtype == bool:
        mask = subset.copy()
    else:
        mask = np.zeros(kernel.size, dtype=bool)
        mask[subset] = True
    if not mask.any() or mask.all():
        raise ValueError("cut must be a nonempty proper subset")
    pi = kernel.measure.probs
    rows = kernel.P[mask][:, ~mask]
    q_flow = float(pi[mask] @ np.asarray(rows.sum(axis=1)).ravel())
    pis = float(pi[mask].sum())
    return q_flow / (pis * (1.0 - pis))


def edge_count_cuts(kernel: KernelTable) -> list[np.ndarray]:
    """Sublevel sets of the edge count (random-cluster kernels only)."""
    if kernel.kind not in ("cm", "glauber"):
        raise ValueError("edge-count cuts need an edge-configuration kernel")
    _, _, ecnt = mask_partition_table(kernel.n)
    return [ecnt <= t for t in range(num_pairs(kernel.n))]


def s_m_cuts(kernel: KernelTable, m_threshold: int) -> list[np.ndarray]:
    """Sublevel sets of |S_M| (vertices in clusters larger than M)."""
    if kernel.kind not in ("cm", "glauber"):
        raise ValueError("S_M cuts need an edge-configuration kernel")
    labels_tbl, _, _ = mask_partition_table(kernel.n)
    sm = np.empty(kernel.size, dtype=np.int64)
    for s in range(kernel.size):
        sizes = np.bincount(labels_tbl[s].astype(np.int64))
        sm[s] = sizes[sizes > m_threshold].sum()
    cuts = []
    for t in range(kernel.n):
        mask = sm <= t
        if mask.any() and not mask.all():
            cuts.append(mask)
    return cuts


def sweep_cuts(kernel: KernelTable) -> list[np.ndarray]:
    """Prefix cuts of the second eigenvector of the symmetrized kernel in
    the D^{-1/2} coordinates — the Cheeger-certificate family."""
    if kernel.size > 4096:
        raise ValueError("sweep cuts limited to 4096 states")
    m = _symmetrized(kernel).toarray()
    w, v = scipy.linalg.eigh(m)
    f = v[:, -2] / np.sqrt(kernel.measure.probs)
    order = np.argsort(f)
    cuts = []
    for t in range(1, kernel.size):
        mask = np.zeros(kernel.size, dtype=bool)
        mask[order[:t]] = True
        cuts.append(mask)
    return cuts


def _refine_cut(kernel: KernelTable, mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Greedy single-state descent of the bottleneck ratio from a cut."""
    best = bottleneck_ratio(kernel, mask)
    mask = mask.copy()
    improved = True
    while improved:
        improved = False
        for i in range(kernel.size):
            mask[i] = ~mask[i]
            if mask.any() and not mask.all():
                r = bottleneck_ratio(kernel, mask)
                if r < best - 1e-15:
                    best = r
                    improved = True
                    continue
            mask[i] = ~mask[i]
    return best, mask


def min_bottleneck_ratio(kernel: KernelTable, refine: bool = True,
                         extra_cuts: list[np.ndarray] | None = None) -> tuple[float, np.ndarray]:
    """Minimum ratio over the structured cut families (edge-count and S_M
    sublevel sets where defined, eigenvector sweep cuts, singletons), with
    optional greedy descent from the best cut found.

    This is an upper bound on the true Cheeger constant: exhausting all
    bipartitions is possible only for tiny spaces (see exhaustive_min_ratio).
    """
    cuts: list[np.ndarray] = []
    if kernel.kind in ("cm", "glauber"):
        cuts.extend(edge_count_cuts(kernel))
        for m_thr in range(1, kernel.n):
            cuts.extend(s_m_cuts(kernel, m_thr))
    cuts.extend(sweep_cuts(kernel))
    for i in range(kernel.size):
        mask = np.zeros(kernel.size, dtype=bool)
        mask[i] = True
        cuts.append(mask)
    if extra_cuts:
        cuts.extend(extra_cuts)
    best, best_mask = None, None
    for mask in cuts:
        if not mask.any() or mask.all():
            continue
        r = bottleneck_ratio(kernel, mask)
        if best is None or r < best:
            best, best_mask = r, mask.copy()
    if refine:
        best, best_mask = _refine_cut(kernel, best_mask)
    return best, best_mask


def exhaustive_min_ratio(kernel: KernelTable) -> tuple[float, np.ndarray]:
    """True Cheeger constant by enumerating every bipartition. 2^(N-1)
    cuts, so the guard is tight."""
    size = kernel.size
    if size > 16:
        raise ValueError(f"exhaustive cuts limited to 16 states, got {size}")
    pi = kernel.measure.probs
    f = (kernel.P.multiply(pi[:, None])).toarray()
    best, best_mask = None, None
    for code in range(1, 1 << (size - 1)):  # state 0 always in S^c
        mask = (code >> np.arange(size)) & 1 == 1
        pis = pi[mask].sum()
        q_flow = f[mask][:, ~mask].sum()
        r = q_flow / (pis * (1.0 - pis))
        if best is None or r < best:
            best, best_mask = float(r), mask
    return best, best_mask


# ---------------------------------------------------------------------------
# coupling checks

def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def _restriction_codec(subset: tuple[int, ...], n: int) -> list[tuple[int, int]]:
    """Mapping [(global bit, local bit)] for pairs inside the subset."""
    pos = {v: i for i, v in enumerate(subset)}
    m = len(subset)
    pu, pv = all_pairs(n)
    out = []
    for b in range(num_pairs(n)):
        u, v = int(pu[b]), int(pv[b])
        if u in pos and v in pos:
            out.append((b, pair_index(pos[u], pos[v], m)))
    return out


def _restrict_mask(mask: int, codec: list[tuple[int, int]]) -> int:
    local = 0
    for gb, lb in codec:
        if (mask >> gb) & 1:
            local |= 1 << lb
    return local


def bgj_coloring_check(n: int, lam: float, q: float, alpha: float) -> float:
    """Exact verification of the cluster-coloring decomposition: color each
    cluster red independently with probability alpha; conditionally on the
    red vertex set R, the restriction of omega to R follows the
    random-cluster measure on |R| vertices with weight alpha*q (same edge
    density p), and the complement restriction with weight (1-alpha)*q.
    Returns the maximum total-variation deviation over all R and both sides.
    """
    if n > 5:
        raise ValueError(f"coloring check limited to n <= 5, got {n}")
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0,1], got {alpha!r}")
    measure = enumerate_fk_measure(n, lam, q)
    labels_tbl, _, _ = mask_partition_table(n)
    verts = list(range(n))

    joint: dict[tuple[int, ...], dict[tuple[int, int], float]] = {}
    for s in range(measure.size):
        w_state = float(measure.probs[s])
        if w_state == 0.0:
            continue
        labels = labels_tbl[s]
        ulab = np.unique(labels)
        k = ulab.size
        members = [tuple(int(v) for v in np.flatnonzero(labels == u)) for u in ulab]
        for reds in range(1 << k):
            a = bin(reds).count("1")
            w = alpha ** a * (1.0 - alpha) ** (k - a)
            if w == 0.0:
                continue
            red_set = tuple(sorted(v for i in range(k) if (reds >> i) & 1
                                   for v in members[i]))
            codec_r = _restriction_codec(red_set, n)
            comp = tuple(v for v in verts if v not in red_set)
            codec_c = _restriction_codec(comp, n)
            key = red_set
            cell = joint.setdefault(key, {})
            loc = (_restrict_mask(s, codec_r), _restrict_mask(s, codec_c))
            cell[loc] = cell.get(loc, 0.0) + w_state * w

    worst = 0.0
    for red_set, cell in joint.items():
        total = math.fsum(cell.values())
        m_r = len(red_set)
        m_c = n - m_r
        marg_r = np.zeros(1 << num_pairs(m_r))
        marg_c = np.zeros(1 << num_pairs(m_c))
        for (lr, lc), w in cell.items():
            marg_r[lr] += w / total
            marg_c[lc] += w / total
        ref_r = enumerate_fk_measure(m_r, lam * m_r / n, alpha * q
                                     if m_r else 1.0)
        ref_c = enumerate_fk_measure(m_c, lam * m_c / n, (1.0 - alpha) * q
                                     if m_c else 1.0)
        worst = max(worst, tv_distance(marg_r, ref_r.probs),
                    tv_distance(marg_c, ref_c.probs))
    return worst


def iterated_coloring_check(n: int, lam: float, q: float) -> float:
    """Exact verification of the iterated coloring: clusters draw a label
    from floor(q) unit-weight classes (probability 1/q each) plus a
    remainder class of probability (q - floor(q))/q; conditionally on the
    partition, each unit class restricts to the q=1 measure (Erdos-Renyi),
    the remainder to weight q - floor(q), and the restrictions are
    independent. Returns the max deviation over marginal and product tests.
    """
    if n > 4:
        raise ValueError(f"iterated coloring check limited to n <= 4, got {n}")
    if q <= 2:
        raise ValueError(f"iterated coloring check needs q > 2, got {q!r}")
    f = int(math.floor(q))
    p_label = [(q - f) / q] + [1.0 / q] * f
    measure = enumerate_fk_measure(n, lam, q)
    labels_tbl, _, _ = mask_partition_table(n)

    joint: dict[tuple[tuple[int, ...], ...], dict[tuple[int, ...], float]] = {}
    for s in range(measure.size):
        w_state = float(measure.probs[s])
        labels = labels_tbl[s]
        ulab = np.unique(labels)
        k = ulab.size
        members = [tuple(int(v) for v in np.flatnonzero(labels == u)) for u in ulab]
        for assign in np.ndindex(*([f + 1] * k)):
            w = 1.0
            for lab in assign:
                w *= p_label[lab]
            if w == 0.0:
                continue
            classes = []
            for i in range(f + 1):
                classes.append(tuple(sorted(v for j in range(k)
                                            if assign[j] == i
                                            for v in members[j])))
            key = tuple(classes)
            codecs = [_restriction_codec(cl, n) for cl in classes]
            loc = tuple(_restrict_mask(s, cd) for cd in codecs)
            cell = joint.setdefault(key, {})
            cell[loc] = cell.get(loc, 0.0) + w_state * w

    worst = 0.0
    for key, cell in joint.items():
        total = math.fsum(cell.values())
        sizes = [len(cl) for cl in key]
        margs = [np.zeros(1 << num_pairs(m)) for m in sizes]
        for loc, w in cell.items():
            for i, li in enumerate(loc):
                margs[i][li] += w / total
        for i, m in enumerate(sizes):
            weight = (q - f) if i == 0 else 1.0
            ref = enumerate_fk_measure(m, lam * m / n, weight if m else 1.0)
            worst = max(worst, tv_distance(margs[i], ref.probs))
        # conditional independence: joint equals the product of marginals
        prod_dev = 0.0
        for loc, w in cell.items():
            prod = 1.0
            for i, li in enumerate(loc):
                prod *= margs[i][li]
            prod_dev += abs(w / total - prod)
        # states absent from the cell contribute their product mass
        covered = math.fsum(
            math.prod(margs[i][li] for i, li in enumerate(loc)) for loc in cell)
        prod_dev += 1.0 - covered
        worst = max(worst, 0.5 * prod_dev)
    return worst


def remainder_class_mass(n: int, lam: float, q: float) -> float:
    """Probability that the remainder class R_0 of the iterated coloring is
    nonempty; exactly 0 for integer q."""
    f = int(math.floor(q))
    if q == f:
        return 0.0
    measure = enumerate_fk_measure(n, lam, q)
    _, kcnt, _ = mask_partition_table(n)
    # each cluster independently lands in R_0 with prob (q-f)/q
    p0 = (q - f) / q
    return float(np.sum(measure.probs * (1.0 - (1.0 - p0) ** kcnt.astype(float))))


def es_coupling_check(n: int, lam: float, q: int) -> tuple[float, float]:
    """Both directions of the Edwards-Sokal coupling, exactly:
    (a) Potts measure pushed through monochromatic percolation equals the
    random-cluster measure; (b) the random-cluster measure pushed through
    uniform cluster recoloring equals the Potts measure. Returns the two
    L1 deviations."""
    if n > 5:
        raise ValueError(f"coupling check limited to n <= 5, got {n}")
    if int(q) != q or q < 1:
        raise ValueError(f"needs integer q >= 1, got {q!r}")
    q = int(q)
    p = lam / n
    potts = enumerate_potts_measure(n, q, lam)
    fk = enumerate_fk_measure(n, lam, q)
    c = num_pairs(n)
    pu, pv = all_pairs(n)
    labels_tbl, _, _ = mask_partition_table(n)
    digits = _digit_matrix(q ** n, q, n)
    qpow = q ** np.arange(n, dtype=np.int64)

    push_fk = np.zeros(fk.size)
    for s in range(potts.size):
        positions = [b for b in range(c)
                     if digits[s, pu[b]] == digits[s, pv[b]]]
        masks, wsub = _bernoulli_submasks(positions, p)
        push_fk[masks] += potts.probs[s] * wsub

    push_potts = np.zeros(potts.size)
    for s in range(fk.size):
        ulab, lab_idx = np.unique(labels_tbl[s], return_inverse=True)
        k = ulab.size
        colmat = _digit_matrix(q ** k, q, k)
        targets = colmat[:, lab_idx] @ qpow
        push_potts[targets] += fk.probs[s] / q ** k

    return (float(np.abs(push_fk - fk.probs).sum()),
            float(np.abs(push_potts - potts.probs).sum()))


# ---------------------------------------------------------------------------
# fixture dump

def dump_kernel_csv(kernel: KernelTable, path: str) -> None:
    """CSV fixture: one row per state — index, stationary probability, and
    the kernel row's nonzeros as "j:p;j:p;..." in column order."""
    rows = []
    indptr, indices, data = kernel.P.indptr, kernel.P.indices, kernel.P.data
    for s in range(kernel.size):
        lo, hi = indptr[s], indptr[s + 1]
        nz = ";".join(f"{int(j)}:{repr(float(x))}"
                      for j, x in zip(indices[lo:hi], data[lo:hi]))
        rows.append((s, repr(float(kernel.measure.probs[s])), nz))
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)) or ".",
                               suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["state", "probability", "row"])
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
