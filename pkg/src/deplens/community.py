"""Undirected projection, modularity, Louvain, and partition comparison."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from .core_graph import DepGraph, Partition, _ordered_partition

GAIN_EPS = 1e-12
MAX_PASSES = 100


@dataclass(frozen=True)
class UndirectedGraph:
    """Weighted undirected graph as a unique edge list with ``u <= v``.

    A self-loop counts once towards the total weight m and twice towards its
    node's degree.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    names: tuple[str, ...] | None = None

    @property
    def n_edges(self) -> int:
        return len(self.u)

    @property
    def total_weight(self) -> float:
        return float(self.w.sum())

    def degrees(self) -> np.ndarray:
        return np.bincount(self.u, weights=self.w, minlength=self.n) + np.bincount(self.v, weights=self.w, minlength=self.n)

    @classmethod
    def from_edges(cls, n: int, u, v, w=None, names=None) -> "UndirectedGraph":
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.ones(len(u)) if w is None else np.asarray(w, dtype=float)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        key = lo * max(n, 1) + hi
        uniq, inv = np.unique(key, return_inverse=True)
        weights = np.bincount(inv, weights=w, minlength=len(uniq))
        return cls(n, uniq // max(n, 1), uniq % max(n, 1), weights, names)


def undirected_projection(g: DepGraph, weighted: bool = True) -> UndirectedGraph:
    """Merge both directions: weight(u, v) = w(u->v) + w(v->u)."""
    w = g.weight if weighted else np.ones(g.n_edges)
    return UndirectedGraph.from_edges(g.n_nodes, g.src, g.dst, w, tuple(g.names()))


def _labels(p) -> np.ndarray:
    return p.labels if isinstance(p, Partition) else np.asarray(p, dtype=np.int64)


def modularity(ug: UndirectedGraph, partition, resolution: float = 1.0) -> float:
    """Q = sum_c [L_c / m - resolution * (K_c / 2m)^2]."""
    m = ug.total_weight
    if m <= 0:
        raise ValueError("modularity is undefined for a graph with zero total weight")
    lab = _labels(partition)
    if len(lab) != ug.n:
        raise ValueError("partition size differs from node count")
    _, lab = np.unique(lab, return_inverse=True)
    k = int(lab.max()) + 1 if len(lab) else 0
    inside = lab[ug.u] == lab[ug.v]
    lc = np.bincount(lab[ug.u][inside], weights=ug.w[inside], minlength=k)
    kc = np.bincount(lab, weights=ug.degrees(), minlength=k)
    return float((lc / m - resolution * (kc / (2.0 * m)) ** 2).sum())


@dataclass(frozen=True)
class CommunityResult:
    partition: Partition
    modularity: float
    passes: int
    seed: int
    resolution: float
    q_history: tuple[float, ...] = field(default_factory=tuple)

    @property
    def n_communities(self) -> int:
        return self.partition.n_groups


class _Level:
    """Symmetric CSR without loops plus per-node loop weight."""

    def __init__(self, n: int, u: np.ndarray, v: np.ndarray, w: np.ndarray):
        self.n = n
        loop = u == v
        self.loops = np.bincount(u[loop], weights=w[loop], minlength=n)
        u, v, w = u[~loop], v[~loop], w[~loop]
        a = sparse.csr_matrix((np.concatenate((w, w)), (np.concatenate((u, v)), np.concatenate((v, u)))), shape=(n, n))
        a.sum_duplicates()
        a.sort_indices()
        self.ptr, self.idx, self.wt = a.indptr, a.indices, a.data
        self.deg = np.asarray(a.sum(axis=1)).ravel() + 2.0 * self.loops


def _local_moves(lv: _Level, m2: float, gamma: float, rng: np.random.Generator) -> tuple[np.ndarray, int, bool]:
    n = lv.n
    comm = np.arange(n)
    tot = lv.deg.copy()
    order = rng.permutation(n).tolist()
    ptr, idx, wt, deg = lv.ptr, lv.idx, lv.wt, lv.deg
    moved_any = False
    passes = 0
    comm_l = comm.tolist()
    tot_l = tot.tolist()
    deg_l = deg.tolist()
    for passes in range(1, MAX_PASSES + 1):
        moved = False
        for i in order:
            lo, hi = ptr[i], ptr[i + 1]
            ci = comm_l[i]
            ki = deg_l[i]
            links: dict[int, float] = {}
            if hi - lo < 64:
                for j, x in zip(idx[lo:hi].tolist(), wt[lo:hi].tolist()):
                    c = comm_l[j]
                    links[c] = links.get(c, 0.0) + x
            else:
                cs = comm[idx[lo:hi]]
                uc, inv = np.unique(cs, return_inverse=True)
                sums = np.bincount(inv, weights=wt[lo:hi])
                links = dict(zip(uc.tolist(), sums.tolist()))
            tot_l[ci] -= ki
            scale = gamma * ki / m2
            stay = links.get(ci, 0.0) - tot_l[ci] * scale
            best_c, best_gain = ci, stay
            for c in sorted(links):
                if c == ci:
                    continue
                gain = links[c] - tot_l[c] * scale
                if gain > stay + GAIN_EPS and (gain > best_gain or (gain == best_gain and c < best_c)):
                    best_c, best_gain = c, gain
            tot_l[best_c] += ki
            if best_c != ci:
                comm_l[i] = best_c
                comm[i] = best_c
                moved = True
                moved_any = True
        if not moved:
            break
    return np.asarray(comm_l, dtype=np.int64), passes, moved_any


def louvain(ug: UndirectedGraph, seed: int, resolution: float = 1.0) -> CommunityResult:
    """Multi-level Louvain; deterministic for a given seed.

    Visit order within each level is a seeded permutation; a node moves only
    for a gain above 1e-12, ties going to the lowest community id.
    """
    m = ug.total_weight
    if m <= 0:
        raise ValueError("louvain needs positive total edge weight")
    rng = np.random.default_rng(seed)
    m2 = 2.0 * m
    node_comm = np.arange(ug.n)
    lv = _Level(ug.n, ug.u, ug.v, ug.w)
    cu, cv, cw = ug.u, ug.v, ug.w
    history = [modularity(ug, node_comm, resolution)]
    total_passes = 0
    for _ in range(MAX_PASSES):
        comm, passes, moved = _local_moves(lv, m2, resolution, rng)
        total_passes += passes
        if not moved:
            break
        _, dense = np.unique(comm, return_inverse=True)
        candidate = dense[node_comm]
        q = modularity(ug, candidate, resolution)
        if q <= history[-1] + GAIN_EPS:
            break
        node_comm = candidate
        history.append(q)
        k = int(dense.max()) + 1
        a, b = dense[cu], dense[cv]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        key = lo * k + hi
        uniq, inv = np.unique(key, return_inverse=True)
        cw = np.bincount(inv, weights=cw, minlength=len(uniq))
        cu, cv = uniq // k, uniq % k
        lv = _Level(k, cu, cv, cw)
    part = _ordered_partition(node_comm)
    q = modularity(ug, part, resolution)
    return CommunityResult(part, q, total_passes, seed, resolution, tuple(history))


# -- partition comparison ----------------------------------------------------


@dataclass(frozen=True)
class PartitionComparison:
    h_a: float
    h_b: float
    mutual_information: float
    nmi: float
    ari: float

    def to_json(self) -> dict:
        return {"H_A": self.h_a, "H_B": self.h_b, "MI": self.mutual_information, "NMI": self.nmi, "ARI": self.ari}


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def _comb2(x: np.ndarray) -> float:
    x = x.astype(float)
    return float((x * (x - 1) / 2).sum())


def compare_partitions(a: "Partition | Sequence[int]", b: "Partition | Sequence[int]") -> PartitionComparison:
    """Entropies (natural log), mutual information, NMI = 2I/(H_A+H_B), and ARI."""
    la, lb = _labels(a), _labels(b)
    if len(la) != len(lb):
        raise ValueError("partitions cover different node sets")
    n = len(la)
    if n == 0:
        raise ValueError("partitions are empty")
    _, ia = np.unique(la, return_inverse=True)
    _, ib = np.unique(lb, return_inverse=True)
    ka, kb = int(ia.max()) + 1, int(ib.max()) + 1
    joint = np.bincount(ia * kb + ib, minlength=ka * kb).reshape(ka, kb)
    ra, rb = joint.sum(axis=1), joint.sum(axis=0)
    ha, hb = _entropy(ra, n), _entropy(rb, n)
    nz = joint > 0
    pij = joint[nz] / n
    outer = np.outer(ra, rb)[nz] / (n * n)
    if nz.sum() == ka == kb:
        # same partition up to relabelling; avoid rounding below 1
        mi, nmi = ha, 1.0
    else:
        mi = float(max((pij * np.log(pij / outer)).sum(), 0.0))
        nmi = 1.0 if ha + hb == 0 else min(2.0 * mi / (ha + hb), 1.0)
    index = _comb2(joint.ravel())
    sa, sb = _comb2(ra), _comb2(rb)
    pairs = n * (n - 1) / 2
    expected = sa * sb / pairs if pairs else 0.0
    top = (sa + sb) / 2
    ari = 1.0 if top == expected else (index - expected) / (top - expected)
    return PartitionComparison(ha, hb, mi, nmi, ari)
